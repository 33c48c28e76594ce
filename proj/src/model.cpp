#include "gromov/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "gromov/errors.hpp"

namespace gromov {

void check_density(const mpq_class& d) {
    if (d < 0 || d >= 1) throw DomainError("density must lie in [0, 1), got " + rational_string(d));
}

namespace {

void check_params(int m, int l, const mpq_class& d) {
    if (m < 2 || m > 26) throw DomainError("model needs 2 <= m <= 26, got m=" + std::to_string(m));
    if (l < 1) throw DomainError("model needs l >= 1");
    check_density(d);
}

mpz_class upow(const mpz_class& b, unsigned long e) {
    mpz_class r;
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
    return r;
}

}  // namespace

long long relator_count(int m, int l, const mpq_class& d_in, long long budget) {
    check_params(m, l, d_in);
    mpq_class d = d_in;
    d.canonicalize();
    const mpz_class base = 2 * m - 1;
    const mpz_class p = d.get_num(), q = d.get_den();
    double est_log = d.get_d() * l * std::log(static_cast<double>(2 * m - 1));
    auto too_large = [&] {
        return BudgetExceeded("relator count (2m-1)^(dl) exceeds model budget " + std::to_string(budget), budget,
                              "model-too-large");
    };
    if (est_log > std::log(static_cast<double>(budget)) + 1.0) throw too_large();
    if (!p.fits_ulong_p() || !q.fits_ulong_p()) throw DomainError("density numerator/denominator too large");
    // k = floor(base^(pl/q)) is the unique k with k^q <= base^(pl) < (k+1)^q
    const unsigned long pl = p.get_ui() * static_cast<unsigned long>(l), qq = q.get_ui();
    const mpz_class target = upow(base, pl);
    auto k = static_cast<long long>(std::floor(std::exp(est_log)));
    k = std::max(1LL, k - 2);
    while (upow(mpz_class(static_cast<long>(k)), qq) > target) --k;
    while (upow(mpz_class(static_cast<long>(k + 1)), qq) <= target) ++k;
    if (k > budget) throw too_large();
    return k;
}

namespace {
std::vector<Word> fresh(int m, int l, std::uint64_t seed, std::size_t from, std::size_t to) {
    std::vector<Word> out;
    out.reserve(to - from);
    for (std::size_t i = from; i < to; ++i) {
        Rng rng = Rng::derive(seed, i);
        out.push_back(sample_cyclically_reduced(m, l, rng));
    }
    return out;
}
}  // namespace

Presentation sample_presentation(int m, int l, const mpq_class& d, std::uint64_t seed, long long budget) {
    auto n = static_cast<std::size_t>(relator_count(m, l, d, budget));
    Presentation p;
    p.m = m;
    p.l = l;
    p.d = d;
    p.d.canonicalize();
    p.seed = seed;
    p.relators = fresh(m, l, seed, 0, n);
    return p;
}

Presentation extend_presentation(const Presentation& base, const mpq_class& d_target, std::uint64_t seed,
                                 long long budget) {
    if (d_target < base.d)
        throw DomainError("target density " + rational_string(d_target) + " below base density " +
                              rational_string(base.d),
                          "nesting-violation");
    auto n = static_cast<std::size_t>(relator_count(base.m, base.l, d_target, budget));
    Presentation p = base;
    p.d = d_target;
    p.d.canonicalize();
    p.seed = seed;
    p.parent_fingerprint = fingerprint(base);
    auto extra = fresh(base.m, base.l, seed, base.relators.size(), n);
    p.relators.insert(p.relators.end(), extra.begin(), extra.end());
    return p;
}

Presentation Presentation::from_relators(int m, int l, const mpq_class& d, std::vector<Word> relators,
                                         std::uint64_t seed, std::optional<std::uint64_t> parent,
                                         long long budget) {
    auto n = static_cast<std::size_t>(relator_count(m, l, d, budget));
    if (relators.size() != n)
        throw MalformedInput("expected " + std::to_string(n) + " relators for (m,l,d), got " +
                             std::to_string(relators.size()));
    Alphabet alph(m);
    for (const Word& w : relators) {
        check_alphabet(w, alph);
        if (static_cast<int>(w.size()) != l) throw MalformedInput("relator " + to_string(w) + " has wrong length");
        if (!is_cyclically_reduced(w)) throw MalformedInput("relator " + to_string(w) + " not cyclically reduced");
    }
    Presentation p;
    p.m = m;
    p.l = l;
    p.d = d;
    p.d.canonicalize();
    p.relators = std::move(relators);
    p.seed = seed;
    p.parent_fingerprint = parent;
    return p;
}

std::string hex64(std::uint64_t x) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << x;
    return os.str();
}

std::string serialize_presentation(const Presentation& p) {
    std::ostringstream os;
    os << "gromov-presentation v1\n";
    os << "m=" << p.m << " l=" << p.l << " d=" << rational_string(p.d) << " seed=" << p.seed
       << " count=" << p.relators.size()
       << " parent=" << (p.parent_fingerprint ? hex64(*p.parent_fingerprint) : std::string("none")) << "\n";
    for (const Word& w : p.relators) os << to_string(w) << "\n";
    return os.str();
}

std::uint64_t fingerprint(const Presentation& p) { return fnv1a64(serialize_presentation(p)); }

namespace {

std::uint64_t parse_u64(const std::string& s, int line, const char* what) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError(line, std::string("bad ") + what + " '" + s + "'");
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw ParseError(line, std::string(what) + " out of range");
    }
}

}  // namespace

Presentation parse_presentation(const std::string& text, long long budget) {
    std::istringstream in(text);
    std::string line;
    int no = 0;
    auto next = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };
    if (!next() || line != "gromov-presentation v1") throw ParseError(1, "missing header 'gromov-presentation v1'");
    if (!next()) throw ParseError(2, "missing parameter line");
    std::istringstream fields(line);
    std::string tok;
    const char* keys[] = {"m", "l", "d", "seed", "count", "parent"};
    std::string vals[6];
    int i = 0;
    while (fields >> tok) {
        if (i >= 6) throw ParseError(2, "unexpected field '" + tok + "'");
        std::string key = std::string(keys[i]) + "=";
        if (tok.rfind(key, 0) != 0) throw ParseError(2, "expected field '" + std::string(keys[i]) + "'");
        vals[i++] = tok.substr(key.size());
    }
    if (i != 6) throw ParseError(2, "parameter line needs m, l, d, seed, count, parent");
    auto m = static_cast<int>(parse_u64(vals[0], 2, "m"));
    auto l = static_cast<int>(parse_u64(vals[1], 2, "l"));
    mpq_class d;
    try {
        d = parse_rational(vals[2]);
    } catch (const MalformedInput& e) {
        throw ParseError(2, e.what());
    }
    std::uint64_t seed = parse_u64(vals[3], 2, "seed");
    auto count = parse_u64(vals[4], 2, "count");
    std::optional<std::uint64_t> parent;
    if (vals[5] != "none") {
        if (vals[5].size() != 16 || vals[5].find_first_not_of("0123456789abcdef") != std::string::npos)
            throw ParseError(2, "bad parent fingerprint");
        parent = std::stoull(vals[5], nullptr, 16);
    }
    long long expected;
    try {
        expected = relator_count(m, l, d, budget);
    } catch (const DomainError& e) {
        throw ParseError(2, e.what());
    }
    if (count != static_cast<std::uint64_t>(expected))
        throw ParseError(2, "count " + std::to_string(count) + " differs from floor((2m-1)^(dl)) = " +
                                std::to_string(expected));
    Alphabet alph(m);
    std::vector<Word> rels;
    for (std::uint64_t k = 0; k < count; ++k) {
        if (!next()) throw ParseError(no + 1, "missing relator line");
        Word w;
        try {
            w = parse_word(line, alph);
        } catch (const MalformedInput& e) {
            throw ParseError(no, e.what());
        }
        if (static_cast<int>(w.size()) != l)
            throw ParseError(no, "relator length " + std::to_string(w.size()) + " differs from l=" + std::to_string(l));
        if (!is_cyclically_reduced(w)) throw ParseError(no, "relator " + line + " is not cyclically reduced");
        rels.push_back(std::move(w));
    }
    while (next())
        if (!line.empty()) throw ParseError(no, "trailing content");
    return Presentation::from_relators(m, l, d, std::move(rels), seed, parent, budget);
}

void save_presentation(const Presentation& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MalformedInput("cannot open " + path + " for writing", "io-error");
    out << serialize_presentation(p);
}

Presentation load_presentation(const std::string& path, long long budget) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedInput("cannot open " + path, "io-error");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_presentation(ss.str(), budget);
}

bool extends(const Presentation& target, const Presentation& host) {
    if (target.m != host.m || target.l != host.l) return false;
    if (target.parent_fingerprint && *target.parent_fingerprint == fingerprint(host)) return true;
    if (target.relators.size() < host.relators.size()) return false;
    return std::equal(host.relators.begin(), host.relators.end(), target.relators.begin());
}

}  // namespace gromov
