#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gromov/bounds.hpp"
#include "gromov/cayley.hpp"
#include "gromov/diagrams.hpp"
#include "gromov/errors.hpp"
#include "gromov/model.hpp"
#include "gromov/roundtree.hpp"
#include "gromov/words.hpp"

#ifndef GROMOV_VERSION
#define GROMOV_VERSION "dev"
#endif

using nlohmann::json;
using namespace gromov;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 2;
constexpr int kExitBudget = 3;

struct Report {
    json result;
    std::string csv;      // table body, header row included
    std::string text;     // native file format, if any
    std::string summary;  // stdout line when no output format was asked for
};

// string-valued options of one subcommand; flags live beside them
struct Command {
    CLI::App* app = nullptr;
    std::map<std::string, std::string> vals;
    std::map<std::string, bool> flags;
    std::string default_format = "json";
    std::function<Report(Command&)> run;

    void opt(const std::string& name, const std::string& def, const std::string& help) {
        vals[name] = def;
        auto* o = app->add_option("--" + name, vals[name], help);
        if (!def.empty()) o->capture_default_str();
    }
    void req(const std::string& name, const std::string& help) {
        vals[name] = "";
        app->add_option("--" + name, vals[name], help)->required();
    }
    void flag(const std::string& name, const std::string& help) {
        flags[name] = false;
        app->add_flag("--" + name, flags[name], help);
    }

    const std::string& s(const std::string& k) const { return vals.at(k); }
    bool has(const std::string& k) const { return !vals.at(k).empty(); }
    long long i(const std::string& k) const {
        const std::string& v = s(k);
        try {
            std::size_t pos = 0;
            long long x = std::stoll(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw MalformedInput("--" + k + " expects an integer, got '" + v + "'");
        }
    }
    std::uint64_t u(const std::string& k) const {
        const std::string& v = s(k);
        if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
            throw MalformedInput("--" + k + " expects a non-negative integer, got '" + v + "'");
        return std::stoull(v);
    }
    double f(const std::string& k) const {
        const std::string& v = s(k);
        if (v.find('/') != std::string::npos) return parse_rational(v).get_d();
        try {
            std::size_t pos = 0;
            double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw MalformedInput("--" + k + " expects a number, got '" + v + "'");
        }
    }
    mpq_class q(const std::string& k) const { return parse_rational(s(k)); }
    bool b(const std::string& k) const { return flags.at(k); }

    json config() const {
        json j = json::object();
        for (const auto& [k, v] : vals)
            if (k != "out") j[k] = v;
        for (const auto& [k, v] : flags) j[k] = v;
        return j;
    }
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PreconditionError("cannot open '" + path + "'", "file-not-found");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// presentation files may carry '#' header lines written by this tool
Presentation read_presentation(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line, body;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') body += line + "\n";
    return parse_presentation(body);
}

std::vector<Word> parse_words(const std::string& list) {
    std::vector<Word> ws;
    for (const auto& t : split(list, ',')) ws.push_back(parse_word(t));
    return ws;
}

// --in file, or --relators list with --m
RelatorSet relator_input(const Command& c) {
    if (c.has("in")) {
        if (c.has("relators")) throw MalformedInput("give either --in or --relators");
        auto p = read_presentation(c.s("in"));
        return {p.m, p.relators};
    }
    if (!c.has("relators")) throw MalformedInput("need --in or --relators");
    RelatorSet r{static_cast<int>(c.i("m")), parse_words(c.s("relators"))};
    Alphabet alph{r.m};
    for (const Word& w : r.relators) check_alphabet(w, alph);
    return r;
}

Diagram read_diagram(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(1, std::string("diagram json: ") + e.what());
    }
    return diagram_from_json(j);
}

std::string num(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(12) << x;
    return os.str();
}

// key,value rows of the scalar members
std::string kv_csv(const json& j) {
    std::ostringstream os;
    os << "key,value\n";
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it->is_structured()) continue;
        os << it.key() << ',' << (it->is_string() ? it->get<std::string>() : it->dump()) << '\n';
    }
    return os.str();
}

std::string presentation_summary(const Presentation& p) {
    return "m=" + std::to_string(p.m) + " l=" + std::to_string(p.l) + " d=" + rational_string(p.d) +
           " relators=" + std::to_string(p.relators.size()) + " fingerprint=" + hex64(fingerprint(p));
}

json presentation_json(const Presentation& p) {
    json rels = json::array();
    for (const Word& w : p.relators) rels.push_back(to_string(w));
    return {{"m", p.m},
            {"l", p.l},
            {"d", rational_string(p.d)},
            {"seed", p.seed},
            {"parent", p.parent_fingerprint ? json(hex64(*p.parent_fingerprint)) : json(nullptr)},
            {"fingerprint", hex64(fingerprint(p))},
            {"relators", rels}};
}

Report presentation_report(const Presentation& p) {
    Report r;
    r.result = presentation_json(p);
    r.text = serialize_presentation(p);
    std::ostringstream os;
    os << "index,relator\n";
    for (std::size_t k = 0; k < p.relators.size(); ++k) os << k << ',' << to_string(p.relators[k]) << '\n';
    r.csv = os.str();
    r.summary = presentation_summary(p);
    return r;
}

void roundtree_options(Command& c) {
    c.opt("in", "", "host presentation file");
    c.flag("plant", "plant a host carrying the tree instead of reading one");
    c.opt("m", "2", "generators when planting");
    c.opt("l", "16", "relator length when planting");
    c.opt("seed", "1", "planting seed");
    c.opt("levels", "3", "levels to grow");
    c.opt("V", "2", "vertical branching");
    c.opt("H", "4", "horizontal branching");
    c.opt("ext-offset", "2", "shared extension offset");
    c.opt("ext-len", "2", "per-branch extension length");
    c.opt("seg-len", "0", "partition segment length, 0 for l/H");
    c.opt("epsilon", "1/100", "epsilon");
    c.flag("strict-lengths", "enforce the strict length constraints");
    c.opt("search-budget", "2000000", "bracket search node budget");
    c.opt("A", "25000", "probe constant A, echoed in reports");
    c.opt("A-recalled", "2500000", "alternative value of A, echoed in reports");
    c.opt("save-host", "", "write the host presentation here");
}

RoundTreeParams roundtree_params(const Command& c) {
    RoundTreeParams p;
    p.V = static_cast<int>(c.i("V"));
    p.H = static_cast<int>(c.i("H"));
    p.ext_offset = static_cast<int>(c.i("ext-offset"));
    p.ext_len = static_cast<int>(c.i("ext-len"));
    p.seg_len = static_cast<int>(c.i("seg-len"));
    p.epsilon = c.f("epsilon");
    p.strict_lengths = c.b("strict-lengths");
    p.search_budget = c.i("search-budget");
    p.A = c.f("A");
    p.A_recalled = c.f("A-recalled");
    return p;
}

RoundTree roundtree_input(const Command& c) {
    auto prm = roundtree_params(c);
    int levels = static_cast<int>(c.i("levels"));
    Presentation host;
    if (c.b("plant")) {
        if (c.has("in")) throw MalformedInput("give either --in or --plant");
        host = plant_round_tree_host(static_cast<int>(c.i("m")), static_cast<int>(c.i("l")), prm, levels, c.u("seed")).host;
    } else {
        if (!c.has("in")) throw MalformedInput("need --in or --plant");
        host = read_presentation(c.s("in"));
    }
    if (c.has("save-host")) save_presentation(host, c.s("save-host"));
    return build_round_tree(host, prm, levels);
}

// ---------------------------------------------------------------- commands

Report cmd_rivin(Command& c) {
    int m = static_cast<int>(c.i("m")), l = static_cast<int>(c.i("l"));
    auto n = rivin_count(m, l);
    Report r;
    r.result = {{"m", m}, {"l", l}, {"count", n.get_str()}};
    r.csv = "m,l,count\n" + std::to_string(m) + "," + std::to_string(l) + "," + n.get_str() + "\n";
    r.summary = n.get_str();
    return r;
}

Report cmd_sample(Command& c) {
    return presentation_report(
        sample_presentation(static_cast<int>(c.i("m")), static_cast<int>(c.i("l")), c.q("d"), c.u("seed"), c.i("budget")));
}

Report cmd_extend(Command& c) {
    auto base = read_presentation(c.s("in"));
    return presentation_report(extend_presentation(base, c.q("d"), c.u("seed"), c.i("budget")));
}

Report cmd_pieces(Command& c) {
    auto rs = relator_input(c);
    auto rep = max_piece_length(rs.relators);
    auto lambda = c.q("lambda");
    int l = rs.relators.empty() ? 0 : static_cast<int>(rs.relators.front().size());
    bool pass = check_c_prime(rs.relators, lambda);
    Report r;
    r.result = {{"relators", rs.relators.size()},
                {"max_piece_length", rep.max_piece_length},
                {"relator_coincidence", rep.relator_coincidence},
                {"lambda", rational_string(lambda)},
                {"c_prime", pass}};
    if (rep.has_witness) {
        const auto& w = rep.witness;
        r.result["witness"] = {{"subword", to_string(w.subword)},
                               {"relator_a", w.relator_a},
                               {"position_a", w.position_a},
                               {"inverse_a", w.inverse_a},
                               {"relator_b", w.relator_b},
                               {"position_b", w.position_b},
                               {"inverse_b", w.inverse_b}};
    }
    r.csv = kv_csv(r.result);
    r.summary = "max piece " + std::to_string(rep.max_piece_length) + " (l=" + std::to_string(l) + "), C'(" +
                rational_string(lambda) + ") " + (pass ? "holds" : "fails");
    return r;
}

Report cmd_cprime_scan(Command& c) {
    std::vector<mpq_class> grid;
    for (const auto& t : split(c.s("d-grid"), ',')) grid.push_back(parse_rational(t));
    auto rep = cprime_genericity_scan(static_cast<int>(c.i("m")), static_cast<int>(c.i("l")), c.q("lambda"), grid,
                                      c.i("trials"), c.u("seed"), static_cast<int>(c.i("jobs")));
    Report r;
    r.result = rep.to_json();
    std::ostringstream os, sum;
    os << "d,relators,trials,passes,probability,ci_low,ci_high,empty\n";
    for (const auto& cell : rep.cells) {
        os << rational_string(cell.d) << ',' << cell.relators << ',' << cell.trials << ',' << cell.passes << ','
           << num(cell.probability) << ',' << num(cell.ci_low) << ',' << num(cell.ci_high) << ','
           << (cell.empty ? "true" : "false") << '\n';
        sum << "d=" << rational_string(cell.d) << " P=" << num(cell.probability) << " [" << num(cell.ci_low) << ", "
            << num(cell.ci_high) << "]\n";
    }
    r.csv = os.str();
    r.summary = sum.str();
    if (!r.summary.empty()) r.summary.pop_back();
    return r;
}

Report cmd_dehn(Command& c) {
    auto rs = relator_input(c);
    Word w = parse_word(c.s("word"));
    check_alphabet(w, Alphabet{rs.m});
    DehnSolver solver(rs.m, rs.relators);
    Word red = solver.reduce(w);
    Report r;
    r.result = {{"word", to_string(w)}, {"reduced", to_string(red)}, {"trivial", red.empty()}};
    r.csv = kv_csv(r.result);
    r.summary = to_string(red) + (red.empty() ? " (trivial)" : " (nontrivial)");
    return r;
}

Report cmd_ball(Command& c) {
    auto rs = relator_input(c);
    BallOptions opt;
    opt.vertex_budget = c.i("budget");
    opt.verified = !c.b("unverified");
    auto ball = cayley_ball(rs.m, rs.relators, static_cast<int>(c.i("radius")), opt);
    Report r;
    r.result = ball.to_json();
    r.csv = ball.to_csv();
    std::ostringstream os;
    os << "vertices=" << ball.size() << " spheres=";
    auto sp = ball.sphere_sizes();
    for (std::size_t k = 0; k < sp.size(); ++k) os << (k ? "," : "") << sp[k];
    if (ball.warning) os << " (unverified: distances are upper bounds)";
    r.summary = os.str();
    return r;
}

Report cmd_diagrams_enumerate(Command& c) {
    auto res = enumerate_diagrams(static_cast<int>(c.i("C")), static_cast<int>(c.i("l")), c.i("budget"));
    Report r;
    long long total = 0;
    for (auto n : res.count_by_faces) total += n;
    r.result = {{"count_by_faces", res.count_by_faces},
                {"shapes_by_faces", res.shapes_by_faces},
                {"total", total},
                {"log_count", res.log_count},
                {"log_shape_factor", res.log_shape_factor}};
    if (c.b("emit-diagrams")) {
        json ds = json::array();
        for (const auto& d : res.diagrams) ds.push_back(diagram_to_json(d));
        r.result["diagrams"] = ds;
    }
    std::ostringstream os;
    os << "faces,diagrams,shapes\n";
    for (std::size_t k = 0; k < res.count_by_faces.size(); ++k)
        os << k << ',' << res.count_by_faces[k] << ',' << (k < res.shapes_by_faces.size() ? res.shapes_by_faces[k] : 0)
           << '\n';
    r.csv = os.str();
    r.summary = std::to_string(total) + " diagrams, log_l count " + num(res.log_count) + " <= " +
                num(res.log_shape_factor);
    return r;
}

Report cmd_fill(Command& c) {
    auto dg = read_diagram(c.s("diagram"));
    std::vector<Word> words;
    if (c.has("words")) {
        words = parse_words(c.s("words"));
    } else {
        int m = static_cast<int>(c.i("m"));
        words = enumerate_cyclically_reduced(m, dg.face_length());
    }
    FillOptions opt;
    const std::string& mode = c.s("mode");
    if (mode == "first") opt.mode = FillMode::First;
    else if (mode == "all") opt.mode = FillMode::All;
    else if (mode == "count") opt.mode = FillMode::Count;
    else throw MalformedInput("--mode must be first, all or count");
    opt.distinct = c.b("distinct");
    opt.upto = static_cast<int>(c.i("upto"));
    opt.limit = c.i("limit");
    auto res = fill(dg, words, opt);
    Report r;
    json fs = json::array();
    std::ostringstream os;
    os << "filling,relator,word\n";
    for (std::size_t k = 0; k < res.fillings.size(); ++k) {
        json one = json::array();
        for (std::size_t i = 0; i < res.fillings[k].size(); ++i) {
            std::string w = to_string(words[res.fillings[k][i]]);
            one.push_back(w);
            os << k << ',' << i + 1 << ',' << w << '\n';
        }
        fs.push_back(one);
    }
    r.result = {{"mode", mode}, {"candidates", words.size()}, {"count", res.count}, {"fillable", res.fillable()},
                {"fillings", fs}};
    r.csv = os.str();
    r.summary = std::string(res.fillable() ? "fillable" : "not fillable") + ", count " + std::to_string(res.count);
    return r;
}

Report cmd_constraint(Command& c) {
    auto dg = read_diagram(c.s("diagram"));
    auto rep = belonging(dg);
    Report r;
    r.result = {{"d_c", rep.d_c},
                {"internal_edges", rep.internal_edges},
                {"restricted_edges", rep.restricted_edges},
                {"boundary_edges", rep.boundary_edges},
                {"boundary_length", rep.boundary_length},
                {"faces", rep.faces},
                {"l", rep.l},
                {"tie", rep.tie},
                {"belongs", rep.belongs},
                {"E_face", rep.E_face},
                {"E_relator", rep.E_relator},
                {"multiplicity", rep.multiplicity}};
    std::ostringstream os;
    os << "i,E_i,multiplicity,p_log,P_log,p_exact\n";
    if (c.has("d")) {
        auto ib = inductive_fill_bounds(rep, static_cast<int>(c.i("m")), rep.l, c.q("d"));
        json arr = json::array();
        for (const auto& b : ib) {
            arr.push_back({{"i", b.i},
                           {"p_log", b.p_log},
                           {"P_log", b.P_log},
                           {"p_exact", rational_string(b.p_exact)},
                           {"P_exact", b.P_exact ? json(rational_string(*b.P_exact)) : json(nullptr)}});
            auto idx = static_cast<std::size_t>(b.i - 1);
            os << b.i << ',' << (idx < rep.E_relator.size() ? rep.E_relator[idx] : 0) << ','
               << (idx < rep.multiplicity.size() ? rep.multiplicity[idx] : 0) << ',' << num(b.p_log) << ','
               << num(b.P_log) << ',' << rational_string(b.p_exact) << '\n';
        }
        r.result["inductive_bounds"] = arr;
    } else {
        for (std::size_t k = 0; k < rep.E_relator.size(); ++k)
            os << k + 1 << ',' << rep.E_relator[k] << ',' << rep.multiplicity[k] << ",,,\n";
    }
    r.csv = os.str();
    r.summary = "d_c=" + std::to_string(rep.d_c) + " |I|=" + std::to_string(rep.internal_edges) +
                " restricted=" + std::to_string(rep.restricted_edges) + " |dX|=" + std::to_string(rep.boundary_length);
    return r;
}

Report cmd_fillprob_exact(Command& c) {
    auto dg = read_diagram(c.s("diagram"));
    int l = c.has("l") ? static_cast<int>(c.i("l")) : dg.face_length();
    auto fp = exact_fillability(dg, static_cast<int>(c.i("m")), l, static_cast<int>(c.i("upto")), c.i("budget"));
    Report r;
    r.result = fp.to_json();
    r.csv = kv_csv(r.result);
    r.summary = fp.exact ? rational_string(*fp.exact) : num(fp.estimate);
    return r;
}

Report cmd_fillprob_mc(Command& c) {
    auto dg = read_diagram(c.s("diagram"));
    int l = c.has("l") ? static_cast<int>(c.i("l")) : dg.face_length();
    auto fp = mc_fillability(dg, static_cast<int>(c.i("m")), l, c.q("d"), c.i("trials"), c.u("seed"),
                             static_cast<int>(c.i("jobs")));
    Report r;
    r.result = fp.to_json();
    r.csv = kv_csv(r.result);
    r.summary = num(fp.estimate) + " [" + num(fp.ci_low) + ", " + num(fp.ci_high) + "] over " +
                std::to_string(fp.trials) + " trials";
    return r;
}

Report bound_report(const BoundReport& b) {
    Report r;
    r.result = b.to_json();
    r.csv = kv_csv(r.result);
    r.summary = (b.value ? rational_string(*b.value) : num(b.approx)) + " (log_{2m-1} = " + num(b.value_log) + ")";
    return r;
}

Report cmd_bounds(Command& c) {
    const std::string& which = c.s("which");
    int m = static_cast<int>(c.i("m")), l = static_cast<int>(c.i("l"));
    if (which == "rule-out") return bound_report(rule_out_bound(m, l, c.q("d")));
    if (which == "emanating")
        return bound_report(emanating_bound(c.f("k"), m, l, c.f("d"), c.f("beta"), c.f("H"), c.f("epsilon")));
    if (which == "confdim") {
        auto cb = confdim_bounds(m, l, c.f("d"), c.f("C"));
        Report r;
        r.result = {{"lower", cb.lower.to_json()}, {"upper", cb.upper.to_json()}, {"linear_lower", cb.linear_lower.to_json()}};
        r.csv = "bound,value_log,approx\nlower," + num(cb.lower.value_log) + "," + num(cb.lower.approx) + "\nupper," +
                num(cb.upper.value_log) + "," + num(cb.upper.approx) + "\nlinear_lower," +
                num(cb.linear_lower.value_log) + "," + num(cb.linear_lower.approx) + "\n";
        r.summary = "lower " + num(cb.lower.approx) + ", upper " + num(cb.upper.approx) + ", linear lower " +
                    num(cb.linear_lower.approx);
        return r;
    }
    if (which == "roundtree") {
        double v = roundtree_lower(c.f("V"), c.f("H"));
        Report r;
        r.result = {{"V", c.f("V")}, {"H", c.f("H")}, {"lower", v}};
        r.csv = kv_csv(r.result);
        r.summary = num(v);
        return r;
    }
    if (which == "delta") {
        auto v = hyperbolicity_delta_bound(l, c.q("d"));
        Report r;
        r.result = {{"l", l}, {"d", rational_string(c.q("d"))}, {"delta", rational_string(v)}};
        r.csv = kv_csv(r.result);
        r.summary = rational_string(v);
        return r;
    }
    if (which == "q") {
        double v = q_evaluator_log2(c.f("C"), c.f("N"), c.f("P"));
        Report r;
        r.result = {{"C", c.f("C")}, {"N", c.f("N")}, {"P", c.f("P")}, {"log2_Q", v}};
        r.csv = kv_csv(r.result);
        r.summary = "log2 Q = " + num(v);
        return r;
    }
    throw MalformedInput("--which must be rule-out, emanating, confdim, roundtree, delta or q");
}

Report cmd_transfer_params(Command& c) {
    auto tp = transfer_params(c.q("d-t"));
    Report r;
    r.result = tp.to_json();
    r.csv = kv_csv(r.result);
    r.summary = "d_s=" + rational_string(tp.d_s) + " H=" + rational_string(tp.H) + " beta=" + rational_string(tp.beta) +
                " eta=" + rational_string(tp.eta);
    return r;
}

Report cmd_roundtree_build(Command& c) {
    auto tree = roundtree_input(c);
    auto ax = check_round_tree_axioms(tree);
    Report r;
    r.result = {{"tree", tree.to_json()}, {"axioms", ax.to_json()}, {"host_fingerprint", hex64(fingerprint(tree.host))}};
    std::ostringstream os;
    os << "axiom,pass,witness\n";
    for (const auto& a : ax.results) os << a.name << ',' << (a.pass ? "true" : "false") << ",\"" << a.witness << "\"\n";
    r.csv = os.str();
    r.summary = "depth " + std::to_string(tree.depth) + ", " + std::to_string(tree.num_vertices()) + " vertices, " +
                std::to_string(tree.cells.size()) + " cells, axioms " + (ax.all_pass() ? "pass" : "FAIL");
    return r;
}

Report cmd_roundtree_emanate(Command& c) {
    auto tree = roundtree_input(c);
    EmanatingMode mode;
    if (c.s("mode") == "prefix") mode = EmanatingMode::Prefix;
    else if (c.s("mode") == "subpath") mode = EmanatingMode::Subpath;
    else throw MalformedInput("--mode must be prefix or subpath");
    int top = max_emanating_depth(tree);
    int lo = 1, hi = top;
    if (c.i("k") > 0) lo = hi = static_cast<int>(c.i("k"));
    Report r;
    json arr = json::array();
    std::ostringstream os;
    os << "k,size,log_size,bound_log,dominated\n";
    bool all = true;
    for (int k = lo; k <= hi; ++k) {
        auto e = enumerate_emanating(tree, k, mode, c.i("budget"));
        json j = e.to_json();
        if (!c.b("emit-words")) j.erase("words");
        arr.push_back(j);
        os << k << ',' << e.words.size() << ',' << num(e.log_size) << ',' << num(e.bound_log) << ','
           << (e.dominated ? "true" : "false") << '\n';
        all = all && e.dominated;
    }
    r.result = {{"mode", c.s("mode")}, {"max_depth", top}, {"sets", arr}};
    r.csv = os.str();
    r.summary = std::to_string(hi - lo + 1) + " depths, " + (all ? "all dominated" : "NOT all dominated");
    return r;
}

Report cmd_roundtree_probe(Command& c) {
    auto tree = roundtree_input(c);
    Presentation target = c.has("target") ? read_presentation(c.s("target")) : tree.host;
    Report r;
    if (c.s("probe") == "geodesic") {
        int window = static_cast<int>(c.i("window"));
        std::vector<int> path;
        if (c.has("path")) {
            for (const auto& t : split(c.s("path"), ',')) path.push_back(std::stoi(t));
        } else {
            path = tree.geodesic_from_base(c.has("length") ? static_cast<int>(c.i("length")) : window);
        }
        auto g = local_geodesic_probe(tree, path, window, target, c.i("budget"));
        r.result = g.to_json();
        r.result["path"] = path;
        r.csv = kv_csv(r.result);
        r.summary = to_string(g.verdict) + (g.certified ? " (certified)" : "");
    } else if (c.s("probe") == "distortion") {
        auto d = distortion_probe(tree, target, static_cast<int>(c.i("radius")), static_cast<int>(c.i("samples")),
                                  c.u("seed"), c.i("budget"));
        r.result = d.to_json();
        r.csv = d.to_csv();
        r.summary = "max ratio " + num(d.max_ratio) + ", mean " + num(d.mean_ratio) + " over " +
                    std::to_string(d.certified) + " certified pairs";
    } else {
        throw MalformedInput("--probe must be geodesic or distortion");
    }
    return r;
}

// ---------------------------------------------------------------- plumbing

std::string timestamp_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string render(const std::string& name, const Command& c, const Report& rep, const std::string& format) {
    json header{{"tool", "gromov"}, {"version", GROMOV_VERSION}, {"command", name}, {"config", c.config()}};
    if (c.b("timestamp")) header["timestamp"] = timestamp_now();
    if (format == "json") {
        json doc{{"header", header}, {"result", rep.result}};
        return doc.dump(2) + "\n";
    }
    std::string head = "# gromov " + std::string(GROMOV_VERSION) + " " + name + "\n# config " + header["config"].dump() + "\n";
    if (c.b("timestamp")) head += "# timestamp " + header["timestamp"].get<std::string>() + "\n";
    if (format == "csv") return head + rep.csv;
    if (format == "text") {
        if (rep.text.empty()) throw MalformedInput("command '" + name + "' has no text format");
        return head + rep.text;
    }
    throw MalformedInput("--format must be json, csv or text");
}

// folds key=value lines from --config into argv, flags given on the command line win
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string path;
    for (std::size_t k = 1; k < args.size(); ++k) {
        if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
        else if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
    }
    if (path.empty()) return args;
    std::istringstream in(read_file(path));
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto a = line.find_first_not_of(" \t");
        if (a == std::string::npos || line[a] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(no, "config line needs key=value");
        std::string key = line.substr(a, eq - a), val = line.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        auto v0 = val.find_first_not_of(" \t");
        val = v0 == std::string::npos ? "" : val.substr(v0);
        while (!val.empty() && (val.back() == ' ' || val.back() == '\t')) val.pop_back();
        std::string flag = "--" + key;
        bool given = false;
        for (const auto& s : args) given = given || s == flag || s.rfind(flag + "=", 0) == 0;
        if (given) continue;
        if (val == "true") args.push_back(flag);
        else if (val != "false") {
            args.push_back(flag);
            args.push_back(val);
        }
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-group workbench: words, density model, Cayley balls, diagrams, bounds, round trees"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("gromov ") + GROMOV_VERSION);

    std::map<std::string, Command> commands;
    auto add = [&](const std::string& name, const std::string& help, std::function<Report(Command&)> run) -> Command& {
        Command& c = commands[name];
        c.app = app.add_subcommand(name, help);
        c.run = std::move(run);
        c.opt("out", "", "output file, stdout if omitted");
        c.opt("format", "", "json, csv or text");
        c.opt("jobs", "1", "worker threads");
        c.app->add_option("--config", "key=value file; flags override");
        c.flag("timestamp", "add a timestamp field to the header");
        return c;
    };

    {
        auto& c = add("rivin", "count cyclically reduced words", cmd_rivin);
        c.req("m", "generators");
        c.req("l", "length");
    }
    {
        auto& c = add("sample", "sample a density-model presentation", cmd_sample);
        c.req("m", "generators");
        c.req("l", "relator length");
        c.req("d", "density, p/q or decimal");
        c.opt("seed", "0", "seed");
        c.opt("budget", std::to_string(kDefaultModelBudget), "relator count budget");
        c.default_format = "text";
    }
    {
        auto& c = add("extend", "extend a presentation to a higher density", cmd_extend);
        c.req("in", "base presentation");
        c.req("d", "target density");
        c.opt("seed", "0", "seed");
        c.opt("budget", std::to_string(kDefaultModelBudget), "relator count budget");
        c.default_format = "text";
    }
    {
        auto& c = add("pieces", "maximal piece length and C'(lambda)", cmd_pieces);
        c.opt("in", "", "presentation file");
        c.opt("relators", "", "comma separated relators");
        c.opt("m", "2", "generators for --relators");
        c.opt("lambda", "1/6", "small cancellation parameter");
    }
    {
        auto& c = add("cprime-scan", "estimate P(C'(lambda)) over a density grid", cmd_cprime_scan);
        c.req("m", "generators");
        c.req("l", "relator length");
        c.opt("lambda", "1/6", "small cancellation parameter");
        c.req("d-grid", "comma separated densities");
        c.opt("trials", "200", "trials per density");
        c.opt("seed", "0", "seed");
    }
    {
        auto& c = add("dehn", "Dehn reduction of a word", cmd_dehn);
        c.opt("in", "", "presentation file");
        c.opt("relators", "", "comma separated relators");
        c.opt("m", "2", "generators for --relators");
        c.req("word", "word to reduce, 1 for the empty word");
    }
    {
        auto& c = add("ball", "Cayley graph ball", cmd_ball);
        c.opt("in", "", "presentation file");
        c.opt("relators", "", "comma separated relators");
        c.opt("m", "2", "generators for --relators");
        c.req("radius", "radius");
        c.opt("budget", std::to_string(kDefaultBallBudget), "vertex budget");
        c.flag("unverified", "skip the C'(1/6) requirement, distances become upper bounds");
    }
    {
        auto& c = add("diagrams-enumerate", "enumerate abstract reduced diagrams", cmd_diagrams_enumerate);
        c.req("C", "maximum face count");
        c.req("l", "face length");
        c.opt("budget", std::to_string(kDefaultDiagramBudget), "search budget");
        c.flag("emit-diagrams", "include every diagram in the json output");
    }
    {
        auto& c = add("fill", "fillings of a diagram", cmd_fill);
        c.req("diagram", "diagram json file");
        c.opt("words", "", "candidate words, default all cyclically reduced words");
        c.opt("m", "2", "generators for the default candidates");
        c.opt("mode", "first", "first, all or count");
        c.flag("distinct", "distinct words for distinct relator indices");
        c.opt("upto", "0", "only relators 1..upto");
        c.opt("limit", "10000000", "max stored fillings");
    }
    {
        auto& c = add("constraint", "belonging and degree of constraint", cmd_constraint);
        c.req("diagram", "diagram json file");
        c.opt("m", "2", "generators for the inductive bounds");
        c.opt("d", "", "density; adds the inductive bounds");
    }
    {
        auto& c = add("fillprob-exact", "exact fillability by tuple enumeration", cmd_fillprob_exact);
        c.req("diagram", "diagram json file");
        c.opt("m", "2", "generators");
        c.opt("l", "", "relator length, default face length");
        c.opt("upto", "0", "only relators 1..upto");
        c.opt("budget", std::to_string(kDefaultTupleBudget), "tuple budget");
    }
    {
        auto& c = add("fillprob-mc", "Monte Carlo fillability over sampled presentations", cmd_fillprob_mc);
        c.req("diagram", "diagram json file");
        c.opt("m", "2", "generators");
        c.opt("l", "", "relator length, default face length");
        c.req("d", "density");
        c.opt("trials", "10000", "trials");
        c.opt("seed", "0", "seed");
    }
    {
        auto& c = add("bounds", "closed-form bounds", cmd_bounds);
        c.req("which", "rule-out, emanating, confdim, roundtree, delta or q");
        c.opt("m", "2", "generators");
        c.opt("l", "8", "relator length");
        c.opt("d", "1/4", "density");
        c.opt("k", "1", "emanating depth");
        c.opt("beta", "1/2", "beta");
        c.opt("H", "4", "horizontal branching");
        c.opt("V", "2", "vertical branching");
        c.opt("epsilon", "1/100", "epsilon");
        c.opt("C", std::to_string(static_cast<long long>(kDefaultConfdimC)), "constant C");
        c.opt("N", "1", "N for the q evaluator");
        c.opt("P", "1", "P for the q evaluator");
    }
    {
        auto& c = add("transfer-params", "density transfer parameters", cmd_transfer_params);
        c.req("d-t", "target density in [1/8, 1/2)");
    }
    {
        auto& c = add("roundtree-build", "build a round tree and check its axioms", cmd_roundtree_build);
        roundtree_options(c);
    }
    {
        auto& c = add("roundtree-emanate", "emanating words of a round tree", cmd_roundtree_emanate);
        roundtree_options(c);
        c.opt("k", "0", "depth, 0 for every depth");
        c.opt("mode", "prefix", "prefix or subpath");
        c.opt("budget", "2000000", "path budget");
        c.flag("emit-words", "include the words");
    }
    {
        auto& c = add("roundtree-probe", "geodesic and distortion probes", cmd_roundtree_probe);
        roundtree_options(c);
        c.opt("target", "", "target presentation, default the host");
        c.opt("probe", "geodesic", "geodesic or distortion");
        c.opt("window", "4", "window length");
        c.opt("path", "", "comma separated vertex path");
        c.opt("length", "", "length of the default geodesic path, default the window");
        c.opt("radius", "4", "distortion pair radius");
        c.opt("samples", "100", "distortion samples");
        c.opt("budget", "200000", "ball vertex budget");
    }

    std::vector<std::string> args;
    try {
        args = expand_config(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
        return kExitDomain;
    }
    std::vector<char*> cargs;
    for (auto& s : args) cargs.push_back(s.data());
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitDomain;
    }

    for (auto& [name, c] : commands) {
        if (!c.app->parsed()) continue;
        try {
            Report rep = c.run(c);
            bool explicit_format = c.has("format");
            std::string format = explicit_format ? c.s("format") : c.default_format;
            if (c.has("out")) {
                std::string body = render(name, c, rep, format);
                std::ofstream out(c.s("out"), std::ios::binary);
                if (!out) throw PreconditionError("cannot write '" + c.s("out") + "'", "file-not-writable");
                out << body;
                std::cout << rep.summary << "\n";
            } else if (explicit_format) {
                std::cout << render(name, c, rep, format);
            } else {
                std::cout << rep.summary << "\n";
            }
            return kExitOk;
        } catch (const BudgetExceeded& e) {
            std::cerr << "error [" << e.kind() << "]: " << e.what() << " (budget " << e.budget() << ")\n";
            return kExitBudget;
        } catch (const Error& e) {
            std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
            return kExitDomain;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return kExitOk;
}
