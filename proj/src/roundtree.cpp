#include "gromov/roundtree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <sstream>

#include "gromov/bounds.hpp"
#include "gromov/errors.hpp"
#include "gromov/rng.hpp"

namespace gromov {

namespace {

std::string index_string(const std::vector<int>& idx) {
    if (idx.empty()) return "()";
    std::string s;
    for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? "." : "") + std::to_string(idx[i]);
    return s;
}

Word slice(const Word& w, std::size_t from, std::size_t len) {
    return Word(w.begin() + static_cast<long>(from), w.begin() + static_cast<long>(from + len));
}

Word cat(std::initializer_list<Word> parts) {
    Word out;
    for (const Word& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

mpq_class approx_rational(double x) {
    mpq_class q(static_cast<long>(std::llround(x * 1e6)), 1000000L);
    q.canonicalize();
    return q;
}

}  // namespace

std::string star_string(StarClass c) {
    std::string s;
    for (int x = 0; x < 32; ++x)
        if ((c >> x) & 1U) s += letter_char(static_cast<Letter>(x));
    return s;
}

void RoundTreeParams::normalize(int m, int l) {
    if (V < 2) throw DomainError("V must be at least 2");
    if (H < 2) throw DomainError("H must be at least 2");
    if (ext_len < 1) throw DomainError("ext_len must be at least 1");
    if (ext_offset < 0) throw DomainError("ext_offset must be nonnegative");
    if (seg_len == 0) seg_len = std::max(1, l / H);
    if (seg_len < 1 || seg_len > l) throw DomainError("seg_len must lie in [1, l]");
    if (2 * k() + seg_len >= l)
        throw DomainError("bracket length 2(ext_offset+ext_len)+seg_len = " + std::to_string(2 * k() + seg_len) +
                          " leaves no room in a relator of length " + std::to_string(l));
    if (strict_lengths && 4 * (2 * k() + seg_len) >= l)
        throw DomainError("strict-lengths parameters need 2(ext_offset+ext_len)+seg_len < l/4");
    if (!(epsilon > 0)) throw DomainError("epsilon must be positive");
    if (eta == 0) {
        eta = mpq_class(ext_len, l);
        eta.canonicalize();
    }
    if (beta == 0) beta = approx_rational(std::log(static_cast<double>(V)) / std::log(2.0 * m - 1) / ext_len);
}

nlohmann::json RoundTreeParams::to_json() const {
    return {{"V", V},
            {"H", H},
            {"ext_offset", ext_offset},
            {"ext_len", ext_len},
            {"seg_len", seg_len},
            {"beta", rational_string(beta)},
            {"eta", rational_string(eta)},
            {"epsilon", epsilon},
            {"strict_lengths", strict_lengths},
            {"A", A},
            {"A_recalled", A_recalled}};
}

int RoundTree::tail(int d) const {
    const RTEdge& e = edges[static_cast<std::size_t>(d >> 1)];
    return (d & 1) ? e.dst : e.src;
}

int RoundTree::head(int d) const {
    const RTEdge& e = edges[static_cast<std::size_t>(d >> 1)];
    return (d & 1) ? e.src : e.dst;
}

Letter RoundTree::dart_label(int d) const {
    Letter x = edges[static_cast<std::size_t>(d >> 1)].label;
    return (d & 1) ? inv(x) : x;
}

std::vector<std::vector<int>> RoundTree::incidence() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(num_vertices()));
    for (std::size_t e = 0; e < edges.size(); ++e) {
        out[static_cast<std::size_t>(edges[e].src)].push_back(static_cast<int>(2 * e));
        out[static_cast<std::size_t>(edges[e].dst)].push_back(static_cast<int>(2 * e + 1));
    }
    return out;
}

std::vector<int> RoundTree::distances(int v) const {
    auto inc = incidence();
    std::vector<int> dist(static_cast<std::size_t>(num_vertices()), -1);
    std::deque<int> q{v};
    dist[static_cast<std::size_t>(v)] = 0;
    while (!q.empty()) {
        int x = q.front();
        q.pop_front();
        for (int d : inc[static_cast<std::size_t>(x)]) {
            int y = head(d);
            if (dist[static_cast<std::size_t>(y)] < 0) {
                dist[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x)] + 1;
                q.push_back(y);
            }
        }
    }
    return dist;
}

std::vector<int> RoundTree::geodesic_from_base(int length) const {
    auto dist = distances(base);
    auto it = std::find(dist.begin(), dist.end(), length);
    if (length < 0 || it == dist.end()) throw DomainError("no vertex at distance " + std::to_string(length) + " from the base");
    auto inc = incidence();
    std::vector<int> path{static_cast<int>(it - dist.begin())};
    while (path.back() != base) {
        int v = path.back(), nx = -1;
        for (int d : inc[static_cast<std::size_t>(v)]) {
            int y = head(d);
            if (dist[static_cast<std::size_t>(y)] == dist[static_cast<std::size_t>(v)] - 1 && (nx < 0 || y < nx)) nx = y;
        }
        path.push_back(nx);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<int> RoundTree::cell_vertices(int c) const {
    std::vector<int> vs;
    for (int d : cells[static_cast<std::size_t>(c)].darts) vs.push_back(tail(d));
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    return vs;
}

std::vector<int> RoundTree::sectors_at(int level) const {
    std::vector<int> out;
    for (std::size_t s = 0; s < sectors.size(); ++s)
        if (sectors[s].level() == level) out.push_back(static_cast<int>(s));
    return out;
}

Word RoundTree::path_label(const std::vector<int>& vs) const {
    auto inc = incidence();
    Word w;
    for (std::size_t i = 0; i + 1 < vs.size(); ++i) {
        int best = -1;
        for (int d : inc.at(static_cast<std::size_t>(vs[i])))
            if (head(d) == vs[i + 1] && (best < 0 || dart_label(d) < dart_label(best))) best = d;
        if (best < 0)
            throw MalformedInput("vertices " + std::to_string(vs[i]) + " and " + std::to_string(vs[i + 1]) +
                                 " are not adjacent in the round tree");
        w.push_back(dart_label(best));
    }
    return w;
}

nlohmann::json RoundTree::to_json() const {
    using nlohmann::json;
    json j;
    j["host_fingerprint"] = hex64(fingerprint(host));
    j["params"] = params.to_json();
    j["depth"] = depth;
    j["base"] = base;
    j["vertices"] = num_vertices();
    j["edges"] = json::array();
    for (const auto& e : edges)
        j["edges"].push_back({{"src", e.src}, {"dst", e.dst}, {"label", std::string(1, letter_char(e.label))}, {"level", e.level}});
    j["cells"] = json::array();
    for (std::size_t c = 0; c < cells.size(); ++c)
        j["cells"].push_back({{"id", c},
                              {"level", cells[c].level},
                              {"word", to_string(cells[c].word)},
                              {"relator", cells[c].relator},
                              {"sector", index_string(cells[c].sector)}});
    j["levels"] = json::array();
    for (int n = 0; n <= depth; ++n) {
        json ids = json::array();
        for (std::size_t c = 0; c < cells.size(); ++c)
            if (cells[c].level <= n) ids.push_back(c);
        j["levels"].push_back(ids);
    }
    j["sectors"] = json::object();
    for (const auto& s : sectors) j["sectors"][index_string(s.index)] = s.cells;
    j["brackets"] = json::array();
    for (const auto& b : brackets)
        j["brackets"].push_back({{"cell", b.cell},
                                 {"level", b.level},
                                 {"k", b.k},
                                 {"label", to_string(b.label)},
                                 {"path", b.path},
                                 {"sector", index_string(b.sector)}});
    j["extensions"] = json::array();
    for (const auto& [cls, ch] : extensions) {
        json ws = json::array();
        for (const auto& w : ch.words) ws.push_back(to_string(w));
        j["extensions"].push_back({{"class", star_string(cls)}, {"offset", to_string(ch.offset)}, {"words", ws}});
    }
    return j;
}

RoundTree init_round_tree(const Presentation& p, RoundTreeParams params) {
    if (p.relators.empty()) throw DomainError("empty presentation");
    const Word& r = p.relators.front();
    const int l = static_cast<int>(r.size());
    if (l < 3) throw DomainError("relators must have length at least 3");
    params.normalize(p.m, l);
    RoundTree t;
    t.host = p;
    t.params = params;
    t.vertex_level.assign(static_cast<std::size_t>(l), 0);
    RTCell c;
    c.level = 0;
    c.word = r;
    c.relator = 0;
    for (int i = 0; i < l; ++i) {
        t.edges.push_back({i, (i + 1) % l, r[static_cast<std::size_t>(i)], 0});
        c.darts.push_back(2 * i);
    }
    t.cells.push_back(c);
    Sector s;
    s.cells = {0};
    s.left = {0};
    s.right = {2 * (l - 1) + 1};
    for (int i = 1; i <= l - 2; ++i) s.outer.push_back(2 * i);
    t.sectors.push_back(s);
    return t;
}

namespace {

struct Plan {
    int sector;
    std::vector<int> pts;                // partition vertices u_0..u_N
    std::vector<StarClass> cls;          // class per point
    std::vector<std::vector<int>> segs;  // darts of p_1..p_N
    std::vector<Word> labels;
};

struct Job {
    int plan, i, j;  // bracket between pts[i-1] and pts[i] for child j
    StarClass k1, k2;
    Word P;
};

class Resolver {
public:
    virtual ~Resolver() = default;
    virtual void assign(std::map<StarClass, ExtensionChoice>& ext, const std::vector<Job>& jobs, const std::vector<Plan>& plans,
                        const RoundTree& t) = 0;
    // at_start / at_end: letters already leaving the arc endpoints
    virtual std::pair<Word, int> cell_word(const Word& B, StarClass at_start, StarClass at_end, RoundTree& t) = 0;
};

// extension words indexed by class and child, with the shared offset
struct Assignment {
    int V, off;
    std::map<StarClass, Word> offset;
    std::map<std::pair<StarClass, int>, Word> ext;

    explicit Assignment(int V_, int off_) : V(V_), off(off_) {}

    std::optional<Word> full(StarClass c, int j) const {
        auto it = ext.find({c, j});
        if (it == ext.end()) return std::nullopt;
        return cat({offset.at(c), it->second});
    }

    struct Undo {
        StarClass c;
        int j;
        bool set_offset;
    };

    // false if inconsistent; pushes an undo record when something was set
    bool put(StarClass c, int j, const Word& g, std::vector<Undo>& undo) {
        if (auto f = full(c, j)) return *f == g;
        if (g.empty() || ((c >> g[0]) & 1U)) return false;
        Word o = slice(g, 0, static_cast<std::size_t>(off));
        Word e = slice(g, static_cast<std::size_t>(off), g.size() - static_cast<std::size_t>(off));
        auto oi = offset.find(c);
        if (oi != offset.end() && oi->second != o) return false;
        for (int jj = 0; jj < V; ++jj) {
            auto it = ext.find({c, jj});
            if (it != ext.end() && it->second == e) return false;
        }
        bool set_off = oi == offset.end();
        if (set_off) offset[c] = o;
        ext[{c, j}] = e;
        undo.push_back({c, j, set_off});
        return true;
    }

    void rollback(std::vector<Undo>& undo, std::size_t to) {
        while (undo.size() > to) {
            auto u = undo.back();
            undo.pop_back();
            ext.erase({u.c, u.j});
            if (u.set_offset) offset.erase(u.c);
        }
    }

    void load(const std::map<StarClass, ExtensionChoice>& x) {
        for (const auto& [c, ch] : x) {
            offset[c] = ch.offset;
            for (std::size_t j = 0; j < ch.words.size(); ++j) ext[{c, static_cast<int>(j)}] = ch.words[j];
        }
    }

    void store(std::map<StarClass, ExtensionChoice>& x) const {
        for (const auto& [c, o] : offset) {
            ExtensionChoice ch;
            ch.offset = o;
            for (int j = 0; j < V; ++j) {
                auto it = ext.find({c, j});
                if (it == ext.end()) throw Error("internal", "extension class left partially assigned");
                ch.words.push_back(it->second);
            }
            x[c] = ch;
        }
    }
};

class HostResolver : public Resolver {
public:
    explicit HostResolver(const Presentation& p) {
        std::map<Word, int> seen;
        for (std::size_t i = 0; i < p.relators.size(); ++i)
            for (const Word& w : {p.relators[i], inverse(p.relators[i])})
                for (std::size_t k = 0; k < w.size(); ++k) seen.emplace(rotate(w, k), static_cast<int>(i));
        for (auto& [w, i] : seen) {
            conj_.push_back(w);
            rel_.push_back(i);
        }
    }

    void assign(std::map<StarClass, ExtensionChoice>& ext, const std::vector<Job>& jobs, const std::vector<Plan>& plans,
                const RoundTree& t) override {
        const int k = t.params.k();
        Assignment a(t.params.V, t.params.ext_offset);
        a.load(ext);
        std::vector<Assignment::Undo> undo;
        long long nodes = 0;
        std::size_t deepest = 0;
        bool deepest_unfillable = false;
        std::function<bool(std::size_t)> rec = [&](std::size_t q) -> bool {
            if (++nodes > t.params.search_budget)
                throw ConstructionObstructed("extension search exceeded " + std::to_string(t.params.search_budget) + " nodes",
                                             "construction-obstructed");
            if (q == jobs.size()) return true;
            const Job& J = jobs[q];
            auto g1 = a.full(J.k1, J.j), g2 = a.full(J.k2, J.j);
            if (g1 && g2) {
                bool ok = has_prefix(cat({inverse(*g1), J.P, *g2}));
                if (!ok && q >= deepest) {
                    deepest = q;
                    deepest_unfillable = true;
                }
                return ok && rec(q + 1);
            }
            const auto& cand = candidates(J.P, k);
            if (q >= deepest) {
                deepest = q;
                deepest_unfillable = cand.empty();
            }
            for (int ci : cand) {
                const Word& c = conj_[static_cast<std::size_t>(ci)];
                Word x1 = inverse(slice(c, 0, static_cast<std::size_t>(k)));
                Word x2 = slice(c, static_cast<std::size_t>(k) + J.P.size(), static_cast<std::size_t>(k));
                std::size_t mark = undo.size();
                if (a.put(J.k1, J.j, x1, undo) && a.put(J.k2, J.j, x2, undo) && rec(q + 1)) return true;
                a.rollback(undo, mark);
            }
            return false;
        };
        if (!rec(0)) {
            const Job& J = jobs[deepest];
            const Plan& P = plans[static_cast<std::size_t>(J.plan)];
            std::string where = "sector " + index_string(t.sectors[static_cast<std::size_t>(P.sector)].index) + " at u=" +
                                std::to_string(P.pts[static_cast<std::size_t>(J.i - 1)]) + " (segment " + std::to_string(J.i) +
                                ", child " + std::to_string(J.j) + ", segment label " + to_string(J.P) + ")";
            if (deepest_unfillable)
                throw ConstructionObstructed("no host relator contains a bracket through " + where, "bracket-unfillable");
            throw ConstructionObstructed("no valid extension words for " + where, "construction-obstructed");
        }
        a.store(ext);
    }

    std::pair<Word, int> cell_word(const Word& B, StarClass, StarClass, RoundTree& t) override {
        auto it = t.bracket_words.find(B);
        Word c;
        if (it != t.bracket_words.end()) {
            c = it->second;
        } else {
            auto pos = std::lower_bound(conj_.begin(), conj_.end(), B);
            if (pos == conj_.end() || !std::equal(B.begin(), B.end(), pos->begin()))
                throw ConstructionObstructed("bracket " + to_string(B) + " lies on no host relator", "bracket-unfillable");
            c = *pos;
            t.bracket_words[B] = c;
        }
        auto pos = std::lower_bound(conj_.begin(), conj_.end(), c);
        return {c, rel_[static_cast<std::size_t>(pos - conj_.begin())]};
    }

private:
    std::vector<Word> conj_;
    std::vector<int> rel_;
    std::map<std::pair<Word, int>, std::vector<int>> cand_;

    bool has_prefix(const Word& B) const {
        auto pos = std::lower_bound(conj_.begin(), conj_.end(), B);
        return pos != conj_.end() && pos->size() >= B.size() && std::equal(B.begin(), B.end(), pos->begin());
    }

    const std::vector<int>& candidates(const Word& P, int k) {
        auto key = std::make_pair(P, k);
        auto it = cand_.find(key);
        if (it != cand_.end()) return it->second;
        std::vector<int> out;
        for (std::size_t i = 0; i < conj_.size(); ++i) {
            const Word& c = conj_[i];
            if (c.size() < 2 * static_cast<std::size_t>(k) + P.size()) continue;
            if (std::equal(P.begin(), P.end(), c.begin() + k)) out.push_back(static_cast<int>(i));
        }
        return cand_[key] = out;
    }
};

class PlantResolver : public Resolver {
public:
    PlantResolver(int m, int l, std::uint64_t seed) : m_(m), l_(l), rng_(seed) {}

    Word random_reduced(std::size_t n, const std::set<Letter>& avoid_first) {
        Word w;
        while (w.size() < n) {
            Letter x = static_cast<Letter>(rng_.below(static_cast<std::uint64_t>(2 * m_)));
            if (w.empty() ? avoid_first.count(x) > 0 : x == inv(w.back())) continue;
            w.push_back(x);
        }
        return w;
    }

    void assign(std::map<StarClass, ExtensionChoice>& ext, const std::vector<Job>& jobs, const std::vector<Plan>&,
                const RoundTree& t) override {
        Assignment a(t.params.V, t.params.ext_offset);
        a.load(ext);
        std::vector<Assignment::Undo> undo;
        const auto off = static_cast<std::size_t>(t.params.ext_offset);
        std::map<StarClass, std::set<Letter>> forbid;
        for (const Job& J : jobs)
            for (StarClass c : {J.k1, J.k2})
                for (int x = 0; x < 2 * m_; ++x)
                    if ((c >> x) & 1U) forbid[c].insert(static_cast<Letter>(x));
        for (auto& [c, f] : forbid)
            if (static_cast<int>(f.size()) >= 2 * m_)
                throw ConstructionObstructed("planting: every first letter is already used at a partition point");
        for (const Job& J : jobs)
            for (StarClass c : {J.k1, J.k2}) {
                if (a.full(c, J.j)) continue;
                for (int tries = 0;; ++tries) {
                    if (tries > 10000) throw ConstructionObstructed("planting could not find distinct extension words");
                    Word o = a.offset.count(c) ? a.offset[c] : random_reduced(off, forbid[c]);
                    std::set<Letter> avoid = o.empty() ? forbid[c] : std::set<Letter>{inv(o.back())};
                    Word g = cat({o, random_reduced(static_cast<std::size_t>(t.params.ext_len), avoid)});
                    if (a.put(c, J.j, g, undo)) break;
                }
            }
        a.store(ext);
    }

    std::pair<Word, int> cell_word(const Word& B, StarClass at_start, StarClass at_end, RoundTree& t) override {
        auto it = t.bracket_words.find(B);
        if (it != t.bracket_words.end()) return {it->second, index_.at(it->second)};
        std::set<Letter> avoid{inv(B.back())};
        for (int x = 0; x < 2 * m_; ++x)
            if ((at_start >> x) & 1U) avoid.insert(static_cast<Letter>(x));
        if (static_cast<int>(avoid.size()) >= 2 * m_) throw ConstructionObstructed("planting: no free letter at an arc start");
        Word c;
        for (int tries = 0;; ++tries) {
            if (tries > 100000) throw ConstructionObstructed("planting: no admissible arc label");
            c = cat({B, random_reduced(static_cast<std::size_t>(l_) - B.size(), avoid)});
            if (c.back() != inv(c.front()) && !((at_end >> inv(c.back())) & 1U)) break;
        }
        relators.push_back(c);
        index_[c] = static_cast<int>(relators.size() - 1);
        t.bracket_words[B] = c;
        return {c, index_[c]};
    }

    std::vector<Word> relators;

private:
    int m_, l_;
    Rng rng_;
    std::map<Word, int> index_;
};

// partition endpoints along the outer path, stepping back from local minima of the base distance
std::vector<int> partition(const std::vector<int>& dd, int seg_len, const std::string& where) {
    const int M = static_cast<int>(dd.size()) - 1;
    auto local_min = [&](int c) {
        return dd[static_cast<std::size_t>(c)] <= dd[static_cast<std::size_t>(c - 1)] &&
               dd[static_cast<std::size_t>(c)] <= dd[static_cast<std::size_t>(c + 1)];
    };
    std::vector<int> pts{0};
    int t = 0;
    while (t < M) {
        int cand = std::min(M, t + seg_len);
        if (cand < M) {
            int best = -1;
            for (int delta = 0; delta <= seg_len / 2; ++delta) {
                int c = cand - delta;
                if (c <= t) break;
                if (!local_min(c)) {
                    best = c;
                    break;
                }
            }
            if (best < 0)
                throw ConstructionObstructed("every admissible partition endpoint near position " + std::to_string(cand) +
                                             " of " + where + " is a local minimum of the base distance");
            cand = best;
        }
        pts.push_back(cand);
        t = cand;
    }
    return pts;
}

RoundTree grow_impl(const RoundTree& in, Resolver& res) {
    RoundTree t = in;
    const int n = t.depth;
    const auto& prm = t.params;
    const int k = prm.k();
    auto dist = t.distances(t.base);
    auto inc = t.incidence();

    std::vector<Plan> plans;
    for (int s : t.sectors_at(n)) {
        const Sector& S = t.sectors[static_cast<std::size_t>(s)];
        std::string where = "sector " + index_string(S.index);
        if (S.outer.empty()) throw ConstructionObstructed(where + " has an empty outer boundary");
        std::vector<int> verts{t.tail(S.outer.front())};
        for (int d : S.outer) verts.push_back(t.head(d));
        std::vector<int> dd;
        for (int v : verts) dd.push_back(dist[static_cast<std::size_t>(v)]);
        auto idx = partition(dd, prm.seg_len, where);
        Plan P;
        P.sector = s;
        for (std::size_t q = 0; q < idx.size(); ++q) {
            int u = verts[static_cast<std::size_t>(idx[q])];
            P.pts.push_back(u);
            if (u == t.base) throw ConstructionObstructed(where + ": partition point is the base vertex");
            StarClass star = 0;
            for (int d : inc[static_cast<std::size_t>(u)]) star |= 1U << t.dart_label(d);
            P.cls.push_back(star);
            if (q > 0) {
                std::vector<int> seg(S.outer.begin() + idx[q - 1], S.outer.begin() + idx[q]);
                Word lab;
                for (int d : seg) lab.push_back(t.dart_label(d));
                P.segs.push_back(seg);
                P.labels.push_back(lab);
            }
        }
        plans.push_back(P);
    }

    std::vector<Job> jobs;
    for (std::size_t pi = 0; pi < plans.size(); ++pi)
        for (int j = 0; j < prm.V; ++j)
            for (std::size_t i = 1; i < plans[pi].pts.size(); ++i)
                jobs.push_back({static_cast<int>(pi), static_cast<int>(i), j, plans[pi].cls[i - 1], plans[pi].cls[i],
                                plans[pi].labels[i - 1]});
    res.assign(t.extensions, jobs, plans, t);

    auto add_vertex = [&]() {
        t.vertex_level.push_back(n + 1);
        return t.num_vertices() - 1;
    };
    std::vector<StarClass> star(static_cast<std::size_t>(t.num_vertices()), 0);
    for (const auto& e : t.edges) {
        star[static_cast<std::size_t>(e.src)] |= 1U << e.label;
        star[static_cast<std::size_t>(e.dst)] |= 1U << inv(e.label);
    }
    auto add_edge = [&](int a, int b, Letter x) {
        star.resize(static_cast<std::size_t>(t.num_vertices()), 0);
        star[static_cast<std::size_t>(a)] |= 1U << x;
        star[static_cast<std::size_t>(b)] |= 1U << inv(x);
        t.edges.push_back({a, b, x, n + 1});
        return static_cast<int>(2 * (t.edges.size() - 1));
    };
    // dart path spelling w from v through fresh vertices, ending at a given vertex if end >= 0
    auto path_from = [&](int v, const Word& w, int end) {
        std::vector<int> ds;
        for (std::size_t q = 0; q < w.size(); ++q) {
            int nx = (q + 1 == w.size() && end >= 0) ? end : add_vertex();
            ds.push_back(add_edge(v, nx, w[q]));
            v = nx;
        }
        return ds;
    };
    auto reversed = [](const std::vector<int>& ds) {
        std::vector<int> out;
        for (auto it = ds.rbegin(); it != ds.rend(); ++it) out.push_back(*it ^ 1);
        return out;
    };

    std::vector<Sector> children;
    struct OffsetCheck {
        int u, u2;
        std::string sector;
    };
    std::vector<OffsetCheck> checks;
    for (const Plan& P : plans) {
        const Sector S = t.sectors[static_cast<std::size_t>(P.sector)];
        const std::size_t N = P.pts.size() - 1;
        std::vector<std::vector<std::vector<int>>> gam(P.pts.size());  // [point][child] darts
        for (std::size_t q = 0; q < P.pts.size(); ++q) {
            const ExtensionChoice& ch = t.extensions.at(P.cls[q]);
            auto off = path_from(P.pts[q], ch.offset, -1);
            int u2 = off.empty() ? P.pts[q] : t.head(off.back());
            checks.push_back({P.pts[q], u2, index_string(S.index)});
            for (int j = 0; j < prm.V; ++j) {
                auto e = path_from(u2, ch.words[static_cast<std::size_t>(j)], -1);
                auto g = off;
                g.insert(g.end(), e.begin(), e.end());
                gam[q].push_back(g);
            }
            t.partition_points.push_back({n, P.pts[q], P.cls[q], S.index});
        }
        for (int j = 0; j < prm.V; ++j) {
            Sector C;
            C.index = S.index;
            C.index.push_back(j);
            C.cells = S.cells;
            C.left = S.left;
            C.left.insert(C.left.end(), gam[0][static_cast<std::size_t>(j)].begin(), gam[0][static_cast<std::size_t>(j)].end());
            C.right = S.right;
            C.right.insert(C.right.end(), gam[N][static_cast<std::size_t>(j)].begin(), gam[N][static_cast<std::size_t>(j)].end());
            for (std::size_t i = 1; i <= N; ++i) {
                const auto& g1 = gam[i - 1][static_cast<std::size_t>(j)];
                const auto& g2 = gam[i][static_cast<std::size_t>(j)];
                std::vector<int> darts = reversed(g1);
                darts.insert(darts.end(), P.segs[i - 1].begin(), P.segs[i - 1].end());
                darts.insert(darts.end(), g2.begin(), g2.end());
                Word B;
                for (int d : darts) B.push_back(t.dart_label(d));
                int tip1 = t.head(g1.back()), tip2 = t.head(g2.back());
                star.resize(static_cast<std::size_t>(t.num_vertices()), 0);
                auto [c, rel] = res.cell_word(B, star[static_cast<std::size_t>(tip2)], star[static_cast<std::size_t>(tip1)], t);
                Word rest = slice(c, B.size(), c.size() - B.size());
                auto arc = path_from(tip2, rest, tip1);
                darts.insert(darts.end(), arc.begin(), arc.end());
                RTCell cell;
                cell.level = n + 1;
                cell.darts = darts;
                for (int d : darts) cell.word.push_back(t.dart_label(d));
                if (cell.word != c) throw Error("internal", "cell boundary does not spell its relator");
                cell.relator = rel;
                cell.sector = C.index;
                cell.bracket = static_cast<int>(t.brackets.size());
                Bracket b;
                b.cell = static_cast<int>(t.cells.size());
                b.level = n + 1;
                b.k = k;
                b.v1 = tip1;
                b.p1 = P.pts[i - 1];
                b.p2 = P.pts[i];
                b.v2 = tip2;
                b.path.push_back(tip1);
                for (std::size_t q = 0; q < B.size(); ++q) b.path.push_back(t.head(darts[q]));
                b.segment_length = static_cast<int>(P.segs[i - 1].size());
                b.label = B;
                b.sector = C.index;
                t.brackets.push_back(b);
                C.cells.push_back(static_cast<int>(t.cells.size()));
                t.cells.push_back(cell);
                auto back = reversed(arc);
                C.outer.insert(C.outer.end(), back.begin(), back.end());
            }
            children.push_back(C);
        }
    }
    for (auto& C : children) t.sectors.push_back(C);
    t.depth = n + 1;

    auto nd = t.distances(t.base);
    for (const auto& c : checks)
        if (nd[static_cast<std::size_t>(c.u2)] != nd[static_cast<std::size_t>(c.u)] + prm.ext_offset)
            throw ConstructionObstructed("offset path at u=" + std::to_string(c.u) + " in sector " + c.sector +
                                         " does not increase the base distance by " + std::to_string(prm.ext_offset));
    return t;
}

}  // namespace

RoundTree grow_level(const RoundTree& tree) {
    HostResolver res(tree.host);
    return grow_impl(tree, res);
}

RoundTree build_round_tree(const Presentation& p, const RoundTreeParams& params, int levels) {
    if (levels < 0) throw DomainError("levels must be nonnegative");
    RoundTree t = init_round_tree(p, params);
    for (int i = 0; i < levels; ++i) t = grow_level(t);
    return t;
}

mpq_class density_for_count(int m, int l, long long count) {
    if (count < 1) throw DomainError("relator count must be positive");
    const double b = std::log(2.0 * m - 1);
    for (long q = 1; q <= 100000; ++q) {
        double x = std::log(static_cast<double>(count)) / (l * b) * static_cast<double>(q);
        for (long p = std::max(0L, static_cast<long>(std::floor(x)) - 1); p <= static_cast<long>(std::ceil(x)) + 1; ++p) {
            mpq_class d(p, q);
            d.canonicalize();
            if (d >= mpq_class(1, 2)) break;
            if (relator_count(m, l, d) == count) return d;
        }
    }
    throw DomainError("no density below 1/2 yields " + std::to_string(count) + " relators");
}

PlantedHost plant_round_tree_host(int m, int l, const RoundTreeParams& params, int levels, std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 0);
    Word r0 = sample_cyclically_reduced(m, l, rng);
    PlantResolver res(m, l, Rng::derive(seed, 1).next());
    res.relators.push_back(r0);
    Presentation p0;
    p0.m = m;
    p0.l = l;
    p0.relators = {r0};
    RoundTree t = init_round_tree(p0, params);
    for (int i = 0; i < levels; ++i) t = grow_impl(t, res);
    auto d = density_for_count(m, l, static_cast<long long>(res.relators.size()));
    PlantedHost out;
    out.host = Presentation::from_relators(m, l, d, res.relators, seed);
    t.host = out.host;
    out.tree = t;
    return out;
}

nlohmann::json ExtensionWords::to_json() const {
    nlohmann::json j{{"k", k}, {"size", words.size()}, {"max_per_vertex", max_per_vertex}, {"classes", classes}, {"uniform", uniform}};
    j["words"] = nlohmann::json::array();
    for (const auto& w : words) j["words"].push_back(to_string(w));
    j["per_vertex"] = nlohmann::json::object();
    for (const auto& [v, ws] : per_vertex) {
        auto& a = j["per_vertex"][std::to_string(v)] = nlohmann::json::array();
        for (const auto& w : ws) a.push_back(to_string(w));
    }
    return j;
}

ExtensionWords extension_words(const RoundTree& t, int k) {
    if (t.depth < 1) throw DomainError("extension words need at least one grown level");
    if (k < 1) throw DomainError("k must be positive");
    ExtensionWords out;
    out.k = k;
    auto inc = t.incidence();
    std::map<StarClass, std::set<Word>> by_class;
    for (int n = 0; n < t.depth; ++n)
        for (int s : t.sectors_at(n)) {
            const Sector& S = t.sectors[static_cast<std::size_t>(s)];
            std::vector<int> verts{t.tail(S.outer.front())};
            for (int d : S.outer) verts.push_back(t.head(d));
            for (int v : verts) {
                std::set<Word> labels;
                std::vector<int> stack{v};
                Word lab;
                std::function<void()> dfs = [&]() {
                    if (static_cast<int>(lab.size()) == k) {
                        labels.insert(lab);
                        return;
                    }
                    for (int d : inc[static_cast<std::size_t>(stack.back())]) {
                        int w = t.head(d);
                        if (t.vertex_level[static_cast<std::size_t>(w)] != n + 1) continue;
                        if (std::find(stack.begin(), stack.end(), w) != stack.end()) continue;
                        stack.push_back(w);
                        lab.push_back(t.dart_label(d));
                        dfs();
                        lab.pop_back();
                        stack.pop_back();
                    }
                };
                dfs();
                if (labels.empty()) continue;
                out.words.insert(labels.begin(), labels.end());
                out.per_vertex[v].insert(labels.begin(), labels.end());
                out.max_per_vertex = std::max(out.max_per_vertex, out.per_vertex[v].size());
                std::optional<StarClass> cls;
                for (const auto& pp : t.partition_points)
                    if (pp.vertex == v && pp.level == n) cls = pp.cls;
                if (!cls) {
                    out.uniform = false;
                    continue;
                }
                auto [it, fresh] = by_class.emplace(*cls, labels);
                if (!fresh && it->second != labels) out.uniform = false;
            }
        }
    out.classes = by_class.size();
    return out;
}

nlohmann::json EmanatingSet::to_json() const {
    nlohmann::json j{{"k", k},
                     {"size", words.size()},
                     {"path_count", path_count},
                     {"log_size", std::isfinite(log_size) ? nlohmann::json(log_size) : nlohmann::json("-inf")},
                     {"bound_log", std::isfinite(bound_log) ? nlohmann::json(bound_log) : nlohmann::json("inf")},
                     {"dominated", dominated}};
    j["words"] = nlohmann::json::array();
    for (const auto& w : words) j["words"].push_back(to_string(w));
    return j;
}

int max_emanating_depth(const RoundTree& t) {
    auto d = t.distances(t.base);
    return *std::max_element(d.begin(), d.end());
}

EmanatingSet enumerate_emanating(const RoundTree& t, int k, EmanatingMode mode, long long budget) {
    auto dist = t.distances(t.base);
    int maxd = *std::max_element(dist.begin(), dist.end());
    if (k < 1 || k > maxd) throw DomainError("k must lie in [1, " + std::to_string(maxd) + "] for this tree");
    auto inc = t.incidence();
    EmanatingSet out;
    out.k = k;
    long long work = 0;
    auto charge = [&](long long x) {
        work += x;
        if (work > budget) throw BudgetExceeded("emanating enumeration exceeded budget", budget);
    };
    const auto V = static_cast<std::size_t>(t.num_vertices());
    if (mode == EmanatingMode::Prefix) {
        std::vector<std::set<Word>> lab(V);
        std::vector<double> cnt(V, 0);
        lab[static_cast<std::size_t>(t.base)].insert(Word{});
        cnt[static_cast<std::size_t>(t.base)] = 1;
        std::vector<std::vector<int>> layer(static_cast<std::size_t>(k) + 1);
        for (std::size_t v = 0; v < V; ++v)
            if (dist[v] >= 0 && dist[v] <= k) layer[static_cast<std::size_t>(dist[v])].push_back(static_cast<int>(v));
        for (int r = 0; r < k; ++r)
            for (int v : layer[static_cast<std::size_t>(r)])
                for (int d : inc[static_cast<std::size_t>(v)]) {
                    int w = t.head(d);
                    if (dist[static_cast<std::size_t>(w)] != r + 1) continue;
                    cnt[static_cast<std::size_t>(w)] += cnt[static_cast<std::size_t>(v)];
                    for (const Word& x : lab[static_cast<std::size_t>(v)]) {
                        Word y = x;
                        y.push_back(t.dart_label(d));
                        lab[static_cast<std::size_t>(w)].insert(std::move(y));
                    }
                    charge(static_cast<long long>(lab[static_cast<std::size_t>(v)].size()));
                }
        for (int v : layer[static_cast<std::size_t>(k)]) {
            out.path_count += cnt[static_cast<std::size_t>(v)];
            for (const Word& x : lab[static_cast<std::size_t>(v)]) out.words.insert(reduce(x));
        }
    } else {
        Word lab;
        std::function<void(int)> dfs = [&](int v) {
            charge(1);
            if (static_cast<int>(lab.size()) == k) {
                out.words.insert(reduce(lab));
                out.path_count += 1;
                return;
            }
            for (int d : inc[static_cast<std::size_t>(v)]) {
                int w = t.head(d);
                if (dist[static_cast<std::size_t>(w)] != dist[static_cast<std::size_t>(v)] + 1) continue;
                lab.push_back(t.dart_label(d));
                dfs(w);
                lab.pop_back();
            }
        };
        for (std::size_t v = 0; v < V; ++v)
            if (dist[v] >= 0 && dist[v] + k <= maxd) dfs(static_cast<int>(v));
    }
    const double base = std::log(2.0 * t.host.m - 1);
    out.log_size = out.words.empty() ? -INFINITY : std::log(static_cast<double>(out.words.size())) / base;
    auto b = emanating_bound(k, t.host.m, t.host.l, t.host.d.get_d(), t.params.beta.get_d(), t.params.H, t.params.epsilon);
    out.bound_log = b.value_log;
    out.dominated = out.log_size <= out.bound_log + 1e-9;
    return out;
}

bool AxiomReport::all_pass() const {
    return std::all_of(results.begin(), results.end(), [](const AxiomResult& r) { return r.pass; });
}

const AxiomResult& AxiomReport::get(const std::string& name) const {
    for (const auto& r : results)
        if (r.name == name) return r;
    throw DomainError("no axiom named " + name);
}

nlohmann::json AxiomReport::to_json() const {
    nlohmann::json j{{"all_pass", all_pass()}, {"axioms", nlohmann::json::array()}};
    for (const auto& r : results) j["axioms"].push_back({{"name", r.name}, {"pass", r.pass}, {"witness", r.witness}});
    return j;
}

namespace {

struct SectorParts {
    std::set<int> cells, edges, vertices;
};

SectorParts sector_parts(const RoundTree& t, const Sector& S) {
    SectorParts p;
    for (int c : S.cells) {
        p.cells.insert(c);
        for (int d : t.cells[static_cast<std::size_t>(c)].darts) {
            p.edges.insert(d >> 1);
            p.vertices.insert(t.tail(d));
        }
    }
    for (const auto* path : {&S.left, &S.right})
        for (int d : *path) {
            p.edges.insert(d >> 1);
            p.vertices.insert(t.tail(d));
            p.vertices.insert(t.head(d));
        }
    p.vertices.insert(t.base);
    return p;
}

template <class F>
std::set<int> filter(const std::set<int>& s, F keep) {
    std::set<int> out;
    for (int x : s)
        if (keep(x)) out.insert(x);
    return out;
}

bool subset(const std::set<int>& a, const std::set<int>& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

}  // namespace

AxiomReport check_round_tree_axioms(const RoundTree& t) {
    AxiomReport rep;
    const auto& prm = t.params;

    {
        AxiomResult r{"initial-cell", true, ""};
        std::vector<int> zero;
        for (std::size_t c = 0; c < t.cells.size(); ++c)
            if (t.cells[c].level == 0) zero.push_back(static_cast<int>(c));
        if (zero.size() != 1) {
            r.pass = false;
            r.witness = std::to_string(zero.size()) + " cells at level 0";
        } else {
            auto vs = t.cell_vertices(zero[0]);
            if (!std::binary_search(vs.begin(), vs.end(), t.base)) {
                r.pass = false;
                r.witness = "base vertex not on the initial cell";
            }
        }
        rep.results.push_back(r);
    }

    {
        AxiomResult r{"sector-boundary", true, ""};
        for (const auto& S : t.sectors) {
            std::string id = "sector " + index_string(S.index) + ": ";
            std::map<int, int> use;
            std::set<int> verts;
            for (int c : S.cells)
                for (int d : t.cells[static_cast<std::size_t>(c)].darts) {
                    ++use[d >> 1];
                    verts.insert(t.tail(d));
                }
            std::multiset<int> bd;
            for (auto [e, n] : use)
                if (n == 1) bd.insert(e);
            std::multiset<int> rays;
            for (const auto* path : {&S.left, &S.right, &S.outer})
                for (int d : *path) rays.insert(d >> 1);
            long long chi = static_cast<long long>(verts.size()) - static_cast<long long>(use.size()) +
                            static_cast<long long>(S.cells.size());
            std::set<int> lv{t.base}, rv{t.base};
            for (int d : S.left) lv.insert(t.head(d));
            for (int d : S.right) rv.insert(t.head(d));
            std::set<int> common;
            std::set_intersection(lv.begin(), lv.end(), rv.begin(), rv.end(), std::inserter(common, common.end()));
            auto path_ok = [&](const std::vector<int>& ds, int start) {
                int v = start;
                for (int d : ds) {
                    if (t.tail(d) != v) return false;
                    v = t.head(d);
                }
                return true;
            };
            int lend = S.left.empty() ? t.base : t.head(S.left.back());
            int rend = S.right.empty() ? t.base : t.head(S.right.back());
            std::string bad;
            if (!path_ok(S.left, t.base) || !path_ok(S.right, t.base)) bad = "rays do not start at the base vertex";
            else if (!path_ok(S.outer, lend) || S.outer.empty() || t.head(S.outer.back()) != rend)
                bad = "outer path does not join the ray ends";
            else if (common != std::set<int>{t.base}) bad = "left and right rays meet away from the base";
            else if (bd != rays) bad = "boundary edges differ from the union of rays and outer path";
            else if (chi != 1) bad = "Euler characteristic " + std::to_string(chi) + " != 1";
            if (!bad.empty() && r.pass) {
                r.pass = false;
                r.witness = id + bad;
            }
        }
        rep.results.push_back(r);
    }

    {
        AxiomResult r{"sandwich", true, ""};
        auto deep = t.sectors_at(t.depth);
        std::vector<SectorParts> parts;
        for (int s : deep) parts.push_back(sector_parts(t, t.sectors[static_cast<std::size_t>(s)]));
        auto cell_lvl = [&](int c) { return t.cells[static_cast<std::size_t>(c)].level; };
        auto edge_lvl = [&](int e) { return t.edges[static_cast<std::size_t>(e)].level; };
        auto vert_lvl = [&](int v) { return t.vertex_level[static_cast<std::size_t>(v)]; };
        for (std::size_t a = 0; a < deep.size() && r.pass; ++a)
            for (std::size_t b = a + 1; b < deep.size() && r.pass; ++b) {
                const auto& ia = t.sectors[static_cast<std::size_t>(deep[a])].index;
                const auto& ib = t.sectors[static_cast<std::size_t>(deep[b])].index;
                int n = 0;
                while (n < static_cast<int>(ia.size()) && ia[static_cast<std::size_t>(n)] == ib[static_cast<std::size_t>(n)]) ++n;
                auto check = [&](const std::set<int>& A, const std::set<int>& B, auto lvl, const char* what) {
                    std::set<int> both;
                    std::set_intersection(A.begin(), A.end(), B.begin(), B.end(), std::inserter(both, both.end()));
                    auto low = filter(A, [&](int x) { return lvl(x) <= n; });
                    auto high = filter(A, [&](int x) { return lvl(x) <= n + 1; });
                    if (!subset(low, both) || !subset(both, high)) {
                        r.pass = false;
                        r.witness = std::string(what) + " of sectors " + index_string(ia) + " and " + index_string(ib);
                    }
                };
                check(parts[a].cells, parts[b].cells, cell_lvl, "cells");
                if (r.pass) check(parts[a].edges, parts[b].edges, edge_lvl, "edges");
                if (r.pass) check(parts[a].vertices, parts[b].vertices, vert_lvl, "vertices");
            }
        rep.results.push_back(r);
    }

    {
        AxiomResult r{"branching", true, ""};
        std::vector<std::vector<int>> cv;
        for (std::size_t c = 0; c < t.cells.size(); ++c) cv.push_back(t.cell_vertices(static_cast<int>(c)));
        int maxlvl = 0;
        for (const auto& c : t.cells) maxlvl = std::max(maxlvl, c.level);
        for (int n = 0; n < maxlvl && r.pass; ++n)
            for (std::size_t c = 0; c < t.cells.size() && r.pass; ++c) {
                if (t.cells[c].level > n) continue;
                int meets = 0;
                for (std::size_t e = 0; e < t.cells.size(); ++e) {
                    if (t.cells[e].level != n + 1) continue;
                    std::vector<int> common;
                    std::set_intersection(cv[c].begin(), cv[c].end(), cv[e].begin(), cv[e].end(), std::back_inserter(common));
                    if (!common.empty()) ++meets;
                }
                if (meets > prm.V * prm.H) {
                    r.pass = false;
                    r.witness = "cell " + std::to_string(c) + " meets " + std::to_string(meets) + " cells of level " +
                                std::to_string(n + 1) + " > V*H = " + std::to_string(prm.V * prm.H);
                }
            }
        rep.results.push_back(r);
    }

    {
        AxiomResult r{"bracket-consistency", true, ""};
        std::map<Word, int> first;
        for (std::size_t b = 0; b < t.brackets.size() && r.pass; ++b) {
            const auto& B = t.brackets[b];
            auto [it, fresh] = first.emplace(B.label, static_cast<int>(b));
            if (fresh) continue;
            const auto& A = t.brackets[static_cast<std::size_t>(it->second)];
            const Word& wa = t.cells[static_cast<std::size_t>(A.cell)].word;
            const Word& wb = t.cells[static_cast<std::size_t>(B.cell)].word;
            if (wa != wb) {
                r.pass = false;
                r.witness = "brackets " + std::to_string(it->second) + " and " + std::to_string(b) + " share label " +
                            to_string(B.label) + " but bound " + to_string(wa) + " and " + to_string(wb);
            }
        }
        rep.results.push_back(r);
    }

    {
        AxiomResult r{"bracket-arithmetic", true, ""};
        for (std::size_t b = 0; b < t.brackets.size() && r.pass; ++b) {
            const auto& B = t.brackets[b];
            int expect = 2 * prm.k() + B.segment_length;
            if (static_cast<int>(B.label.size()) != expect || B.segment_length > prm.seg_len ||
                static_cast<int>(B.path.size()) != expect + 1) {
                r.pass = false;
                r.witness = "bracket " + std::to_string(b) + " has length " + std::to_string(B.label.size()) +
                            " with segment " + std::to_string(B.segment_length);
            }
        }
        rep.results.push_back(r);
    }

    {
        AxiomResult r{"extension-cap", true, ""};
        if (t.depth >= 1) {
            auto x = extension_words(t, prm.k());
            for (const auto& [v, ws] : x.per_vertex)
                if (static_cast<int>(ws.size()) > prm.V) {
                    r.pass = false;
                    r.witness = "vertex " + std::to_string(v) + " has " + std::to_string(ws.size()) + " extension words > V";
                    break;
                }
            if (r.pass && !x.uniform) {
                r.pass = false;
                r.witness = "extension words at equal classes differ";
            }
        }
        rep.results.push_back(r);
    }
    return rep;
}

std::string to_string(ProbeVerdict v) {
    switch (v) {
        case ProbeVerdict::Pass: return "pass";
        case ProbeVerdict::Violation: return "violation";
        default: return "inconclusive";
    }
}

nlohmann::json GeodesicProbeReport::to_json() const {
    return {{"verdict", to_string(verdict)},
            {"window", window},
            {"windows_checked", windows_checked},
            {"violation_start", violation_start},
            {"violation_word", to_string(violation_word)},
            {"violation_distance", violation_distance},
            {"certified", certified}};
}

namespace {

void require_nested(const RoundTree& t, const Presentation& target) {
    if (!(target == t.host) && !extends(target, t.host))
        throw PreconditionError("target presentation does not extend the round-tree host", "nesting");
}

// ball around the identity in the target, or nullopt when the budget runs out
std::optional<CayleyBall> target_ball(const Presentation& target, int radius, bool verified, long long budget) {
    BallOptions opt;
    opt.vertex_budget = budget;
    opt.verified = verified;
    try {
        return cayley_ball(target, radius, opt);
    } catch (const PartialBall&) {
        return std::nullopt;
    }
}

}  // namespace

GeodesicProbeReport local_geodesic_probe(const RoundTree& t, const std::vector<int>& path, int window,
                                         const Presentation& target, long long ball_budget) {
    if (window < 1) throw DomainError("window must be positive");
    if (path.empty()) throw MalformedInput("empty path");
    require_nested(t, target);
    Word lab = t.path_label(path);
    GeodesicProbeReport rep;
    rep.window = window;
    rep.certified = verified_small_cancellation(target.relators);
    const int W = std::min<int>(window, static_cast<int>(lab.size()));
    if (W == 0) return rep;
    std::optional<CayleyBall> ball;
    bool ball_tried = false;
    bool inconclusive = false;
    for (std::size_t s = 0; s + static_cast<std::size_t>(W) <= lab.size(); ++s) {
        Word w = slice(lab, s, static_cast<std::size_t>(W));
        ++rep.windows_checked;
        int found = -1;
        if (!is_reduced(w)) {
            found = static_cast<int>(reduce(w).size());
        } else {
            if (!ball_tried) {
                ball = target_ball(target, W, rep.certified, ball_budget);
                ball_tried = true;
            }
            if (ball) found = ball->dist[static_cast<std::size_t>(ball->trace(w))];
        }
        if (found >= 0 && found < W) {
            rep.verdict = ProbeVerdict::Violation;
            rep.violation_start = static_cast<int>(s);
            rep.violation_word = w;
            rep.violation_distance = found;
            return rep;
        }
        if (found < 0 || (!rep.certified && W > 1)) inconclusive = true;
    }
    rep.verdict = inconclusive ? ProbeVerdict::Inconclusive : ProbeVerdict::Pass;
    return rep;
}

nlohmann::json DistortionReport::to_json() const {
    nlohmann::json j{{"certified", certified}, {"inconclusive", inconclusive}, {"max_ratio", max_ratio}, {"mean_ratio", mean_ratio}};
    j["histogram"] = histogram;
    j["samples"] = nlohmann::json::array();
    for (const auto& s : samples)
        j["samples"].push_back({{"p", s.p}, {"q", s.q}, {"rho_a", s.rho_a}, {"rho_t", s.rho_t}, {"ratio", s.ratio}});
    return j;
}

std::string DistortionReport::to_csv() const {
    std::ostringstream os;
    os << "p,q,rho_a,rho_t,ratio\n";
    for (const auto& s : samples) {
        os << s.p << "," << s.q << "," << s.rho_a << ",";
        if (s.rho_t < 0) os << ",\n";
        else os << s.rho_t << "," << s.ratio << "\n";
    }
    return os.str();
}

DistortionReport distortion_probe(const RoundTree& t, const Presentation& target, int radius, int samples,
                                  std::uint64_t seed, long long ball_budget) {
    if (radius < 1) throw DomainError("radius must be positive");
    if (samples < 1) throw DomainError("samples must be positive");
    require_nested(t, target);
    const bool verified = verified_small_cancellation(target.relators);
    auto ball = target_ball(target, radius, verified, ball_budget);
    auto inc = t.incidence();
    Rng rng(seed);
    DistortionReport rep;
    double sum = 0;
    for (int s = 0; s < samples; ++s) {
        int p = static_cast<int>(rng.below(static_cast<std::uint64_t>(t.num_vertices())));
        // BFS with least-label parents
        std::vector<int> dist(static_cast<std::size_t>(t.num_vertices()), -1), par(dist.size(), -1);
        std::deque<int> q{p};
        dist[static_cast<std::size_t>(p)] = 0;
        while (!q.empty()) {
            int x = q.front();
            q.pop_front();
            if (dist[static_cast<std::size_t>(x)] == radius) continue;
            for (int d : inc[static_cast<std::size_t>(x)]) {
                int y = t.head(d);
                if (dist[static_cast<std::size_t>(y)] < 0) {
                    dist[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x)] + 1;
                    par[static_cast<std::size_t>(y)] = d;
                    q.push_back(y);
                }
            }
        }
        std::vector<int> cand;
        for (std::size_t v = 0; v < dist.size(); ++v)
            if (dist[v] >= 1) cand.push_back(static_cast<int>(v));
        if (cand.empty()) continue;
        int qv = cand[rng.below(cand.size())];
        Word w;
        for (int v = qv; v != p; v = t.tail(par[static_cast<std::size_t>(v)])) w.push_back(t.dart_label(par[static_cast<std::size_t>(v)]));
        std::reverse(w.begin(), w.end());
        DistortionSample smp{p, qv, static_cast<int>(w.size()), -1, 0};
        if (ball) {
            int v = ball->trace(reduce(w));
            int rt = ball->dist[static_cast<std::size_t>(v)];
            if (rt > smp.rho_a) throw Error("internal", "target distance exceeds tree distance");
            if (verified) {
                smp.rho_t = rt;
                smp.ratio = rt == 0 ? INFINITY : static_cast<double>(smp.rho_a) / rt;
            }
        }
        if (smp.rho_t < 0) {
            ++rep.inconclusive;
        } else {
            ++rep.certified;
            rep.max_ratio = std::max(rep.max_ratio, smp.ratio);
            sum += smp.ratio;
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", smp.ratio);
            ++rep.histogram[buf];
        }
        rep.samples.push_back(smp);
    }
    if (rep.certified == 0)
        throw Error("empty-statistics", "no sampled pair had a certified target distance");
    rep.mean_ratio = sum / rep.certified;
    return rep;
}

}  // namespace gromov
