#include "gromov/cayley.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "gromov/bounds.hpp"
#include "gromov/errors.hpp"

namespace gromov {

namespace {

std::string key_of(const Word& w, std::size_t at, std::size_t len) {
    return std::string(reinterpret_cast<const char*>(w.data() + at), len);
}

std::vector<Word> conjugates(const std::vector<Word>& relators) {
    std::vector<Word> out;
    for (const Word& r : relators)
        for (const Word& w : {r, inverse(r)})
            for (std::size_t k = 0; k < w.size(); ++k) out.push_back(rotate(w, k));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

bool verified_small_cancellation(const std::vector<Word>& relators) {
    static std::mutex mu;
    static std::map<std::string, bool> cache;
    std::string key;
    for (const Word& w : relators) key += to_string(w) + ",";
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    bool ok = false;
    try {
        ok = !relators.empty() && check_c_prime(relators, mpq_class(1, 6));
    } catch (const DomainError&) {
        ok = false;
    }
    std::lock_guard<std::mutex> lock(mu);
    cache[key] = ok;
    return ok;
}

DehnSolver::DehnSolver(int m, const std::vector<Word>& relators) : m_(m) {
    Alphabet alph(m);
    for (const Word& r : relators) check_alphabet(r, alph);
    if (!verified_small_cancellation(relators))
        throw PreconditionError("presentation is not verified C'(1/6); Dehn's algorithm is not valid", "not-small-cancellation");
    const std::size_t l = relators.front().size();
    window_ = l / 2 + 1;
    std::map<std::string, Word> tab;
    for (const Word& c : conjugates(relators)) {
        Word rest(c.begin() + static_cast<long>(window_), c.end());
        tab.emplace(key_of(c, 0, window_), inverse(rest));
    }
    table_.assign(tab.begin(), tab.end());
}

const Word* DehnSolver::lookup(const Word& w, std::size_t at) const {
    std::string k = key_of(w, at, window_);
    auto it = std::lower_bound(table_.begin(), table_.end(), k,
                               [](const std::pair<std::string, Word>& a, const std::string& b) { return a.first < b; });
    if (it == table_.end() || it->first != k) return nullptr;
    return &it->second;
}

Word DehnSolver::reduce(const Word& w) const {
    check_alphabet(w, Alphabet(m_));
    Word cur = gromov::reduce(w);
    std::size_t start = 0;
    for (;;) {
        bool found = false;
        for (std::size_t i = start; i + window_ <= cur.size(); ++i) {
            const Word* comp = lookup(cur, i);
            if (!comp) continue;
            Word next(cur.begin(), cur.begin() + static_cast<long>(i));
            next.insert(next.end(), comp->begin(), comp->end());
            next.insert(next.end(), cur.begin() + static_cast<long>(i + window_), cur.end());
            cur = gromov::reduce(next);
            start = i > 2 * window_ ? i - 2 * window_ : 0;
            found = true;
            break;
        }
        if (!found) return cur;
    }
}

Word dehn_reduce(const Word& w, const Presentation& p) { return DehnSolver(p).reduce(w); }

int CayleyBall::trace(const Word& w) const {
    int v = 0;
    for (Letter x : w) {
        if (x >= 2 * m) throw MalformedInput("letter outside alphabet");
        v = neighbour(v, x);
        if (v < 0) return -1;
    }
    return v;
}

std::vector<long long> CayleyBall::sphere_sizes() const {
    std::vector<long long> s(static_cast<std::size_t>(radius) + 1, 0);
    for (int d : dist) ++s[static_cast<std::size_t>(d)];
    return s;
}

nlohmann::json CayleyBall::to_json() const {
    nlohmann::json j;
    j["radius"] = radius;
    j["verified"] = verified;
    j["warning"] = warning ? "unverified relator closure: distances are upper bounds" : "";
    j["vertices"] = nlohmann::json::array();
    for (std::size_t v = 0; v < words.size(); ++v)
        j["vertices"].push_back({{"id", v}, {"word", to_string(words[v])}, {"distance", dist[v]}});
    j["edges"] = nlohmann::json::array();
    for (std::size_t v = 0; v < words.size(); ++v)
        for (int s = 0; s < 2 * m; s += 2) {
            int h = neighbour(static_cast<int>(v), static_cast<Letter>(s));
            if (h >= 0) j["edges"].push_back({{"src", v}, {"dst", h}, {"label", std::string(1, letter_char(static_cast<Letter>(s)))}});
        }
    return j;
}

std::string CayleyBall::to_csv() const {
    std::ostringstream os;
    os << "src,dst,label,src_word,dst_word\n";
    for (std::size_t v = 0; v < words.size(); ++v)
        for (int s = 0; s < 2 * m; s += 2) {
            int h = neighbour(static_cast<int>(v), static_cast<Letter>(s));
            if (h >= 0)
                os << v << "," << h << "," << letter_char(static_cast<Letter>(s)) << "," << to_string(words[v]) << ","
                   << to_string(words[static_cast<std::size_t>(h)]) << "\n";
        }
    return os.str();
}

namespace {

struct WalkResult {
    enum Kind { Full, StuckLast, StuckEarly } kind;
    int vertex;  // end vertex, or the stuck vertex
    Letter letter = 0;
};

class BallBuilder {
public:
    BallBuilder(int m, const std::vector<Word>& relators, const BallOptions& opt) : opt_(opt) {
        ball_.m = m;
        ball_.verified = opt.verified;
        ball_.warning = !opt.verified;
        paths_.resize(static_cast<std::size_t>(2 * m));
        for (const Word& c : conjugates(relators)) {
            if (c.empty()) continue;
            Word tail(c.begin() + 1, c.end());
            paths_[c[0]].push_back(inverse(tail));
        }
        for (auto& p : paths_) {
            std::sort(p.begin(), p.end());
            p.erase(std::unique(p.begin(), p.end()), p.end());
        }
        add_vertex({}, 0);
    }

    CayleyBall build(int R) {
        std::size_t lo = 0;
        for (int r = 0;; ++r) {
            std::size_t hi = ball_.words.size();
            sideways(lo, hi);
            if (r == R) break;
            grow(lo, hi, r);
            lo = hi;
        }
        ball_.radius = R;
        return std::move(ball_);
    }

private:
    BallOptions opt_;
    CayleyBall ball_;
    std::vector<std::vector<Word>> paths_;

    int A() const { return 2 * ball_.m; }
    int& adj(int v, Letter s) { return ball_.adj[static_cast<std::size_t>(v) * static_cast<std::size_t>(A()) + s]; }

    int add_vertex(Word w, int d) {
        ball_.words.push_back(std::move(w));
        ball_.dist.push_back(d);
        ball_.adj.insert(ball_.adj.end(), static_cast<std::size_t>(A()), -1);
        return static_cast<int>(ball_.words.size() - 1);
    }

    WalkResult walk(int g, const Word& path) {
        int v = g;
        for (std::size_t i = 0; i < path.size(); ++i) {
            int nx = adj(v, path[i]);
            if (nx < 0) return {i + 1 == path.size() ? WalkResult::StuckLast : WalkResult::StuckEarly, v, path[i]};
            v = nx;
        }
        return {WalkResult::Full, v, 0};
    }

    void link(int g, Letter s, int h) {
        adj(g, s) = h;
        int& back = adj(h, inv(s));
        if (back == -1 || back == g) {
            back = g;
            return;
        }
        if (opt_.verified) throw Error("internal", "ball closure produced inconsistent identifications");
        ball_.inconsistent = true;
    }

    // identify edges inside the current layer until nothing changes
    void sideways(std::size_t lo, std::size_t hi) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t g = lo; g < hi; ++g)
                for (int s = 0; s < A(); ++s) {
                    if (adj(static_cast<int>(g), static_cast<Letter>(s)) != -1) continue;
                    for (const Word& p : paths_[static_cast<std::size_t>(s)]) {
                        auto w = walk(static_cast<int>(g), p);
                        if (w.kind != WalkResult::Full) continue;
                        link(static_cast<int>(g), static_cast<Letter>(s), w.vertex);
                        changed = true;
                        break;
                    }
                }
        }
    }

    void grow(std::size_t lo, std::size_t hi, int r) {
        std::vector<std::pair<int, Letter>> keys;
        std::map<std::pair<int, Letter>, int> index;
        for (std::size_t g = lo; g < hi; ++g)
            for (int s = 0; s < A(); ++s)
                if (adj(static_cast<int>(g), static_cast<Letter>(s)) == -1) {
                    index[{static_cast<int>(g), static_cast<Letter>(s)}] = static_cast<int>(keys.size());
                    keys.emplace_back(static_cast<int>(g), static_cast<Letter>(s));
                }
        std::vector<int> parent(keys.size());
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int x) {
            while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            return x;
        };
        for (std::size_t k = 0; k < keys.size(); ++k) {
            auto [g, s] = keys[k];
            for (const Word& p : paths_[s]) {
                auto w = walk(g, p);
                if (w.kind != WalkResult::StuckLast) continue;
                auto it = index.find({w.vertex, w.letter});
                if (it == index.end()) continue;
                int a = find(static_cast<int>(k)), b = find(it->second);
                if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
            }
        }
        std::map<int, std::vector<int>> classes;
        for (std::size_t k = 0; k < keys.size(); ++k) classes[find(static_cast<int>(k))].push_back(static_cast<int>(k));
        std::vector<std::pair<Word, int>> order;
        for (auto& [root, members] : classes) {
            Word best;
            for (int k : members) {
                Word w = ball_.words[static_cast<std::size_t>(keys[static_cast<std::size_t>(k)].first)];
                w.push_back(keys[static_cast<std::size_t>(k)].second);
                if (best.empty() || w < best) best = w;
            }
            order.emplace_back(std::move(best), root);
        }
        std::sort(order.begin(), order.end());
        if (static_cast<long long>(ball_.words.size() + order.size()) > opt_.vertex_budget)
            throw PartialBall("Cayley ball exceeded vertex budget " + std::to_string(opt_.vertex_budget) +
                                  " after completing radius " + std::to_string(r),
                              opt_.vertex_budget, r);
        for (auto& [w, root] : order) {
            int h = add_vertex(w, r + 1);
            for (int k : classes[root]) {
                auto [g, s] = keys[static_cast<std::size_t>(k)];
                link(g, s, h);
            }
        }
    }
};

}  // namespace

CayleyBall cayley_ball(int m, const std::vector<Word>& relators, int radius, const BallOptions& opt) {
    if (radius < 0) throw DomainError("radius must be nonnegative");
    Alphabet alph(m);
    for (const Word& r : relators) {
        check_alphabet(r, alph);
        if (!is_cyclically_reduced(r)) throw MalformedInput("relator " + to_string(r) + " is not cyclically reduced");
    }
    if (opt.verified && !verified_small_cancellation(relators))
        throw PreconditionError("metric queries need a verified C'(1/6) presentation (use the unverified mode explicitly)",
                                "not-small-cancellation");
    return BallBuilder(m, relators, opt).build(radius);
}

CayleyBall cayley_ball(const Presentation& p, int radius, const BallOptions& opt) {
    return cayley_ball(p.m, p.relators, radius, opt);
}

int distance(int m, const std::vector<Word>& relators, const Word& w, const BallOptions& opt) {
    check_alphabet(w, Alphabet(m));
    Word r = reduce(w);
    if (opt.verified) r = DehnSolver(m, relators).reduce(r);
    auto ball = cayley_ball(m, relators, static_cast<int>(r.size()), opt);
    int v = ball.trace(r);
    if (v < 0) throw Error("internal", "word left a ball of its own length");
    return ball.dist[static_cast<std::size_t>(v)];
}

int distance(const Presentation& p, const Word& w, const BallOptions& opt) { return distance(p.m, p.relators, w, opt); }

bool is_geodesic(const Presentation& p, const Word& w, const BallOptions& opt) {
    return distance(p, w, opt) == static_cast<int>(w.size());
}

nlohmann::json GenericityScanReport::to_json() const {
    nlohmann::json j{{"m", m}, {"l", l}, {"lambda", rational_string(lambda)}, {"cells", nlohmann::json::array()}};
    for (const auto& c : cells)
        j["cells"].push_back({{"d", rational_string(c.d)},
                              {"relators", c.relators},
                              {"trials", c.trials},
                              {"passes", c.passes},
                              {"probability", c.probability},
                              {"ci_low", c.ci_low},
                              {"ci_high", c.ci_high},
                              {"empty", c.empty}});
    return j;
}

GenericityScanReport cprime_genericity_scan(int m, int l, const mpq_class& lambda, const std::vector<mpq_class>& d_grid,
                                            long long trials, std::uint64_t seed, int jobs) {
    if (lambda <= 0 || lambda >= 1) throw DomainError("lambda must lie in (0, 1)");
    if (trials < 0) throw DomainError("trials must be nonnegative");
    GenericityScanReport rep;
    rep.m = m;
    rep.l = l;
    rep.lambda = lambda;
    jobs = std::max(1, jobs);
    for (std::size_t c = 0; c < d_grid.size(); ++c) {
        GenericityCell cell;
        cell.d = d_grid[c];
        cell.relators = relator_count(m, l, cell.d);
        cell.trials = trials;
        if (trials == 0) {
            cell.empty = true;
            rep.cells.push_back(cell);
            continue;
        }
        std::vector<char> ok(static_cast<std::size_t>(trials), 0);
        const std::uint64_t cell_seed = mix64(seed ^ mix64(c + 1));
        auto work = [&](int w) {
            for (long long t = w; t < trials; t += jobs) {
                Rng r = Rng::derive(cell_seed, static_cast<std::uint64_t>(t));
                auto p = sample_presentation(m, l, cell.d, r.next());
                ok[static_cast<std::size_t>(t)] = check_c_prime(p.relators, lambda) ? 1 : 0;
            }
        };
        if (jobs == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < jobs; ++w) pool.emplace_back(work, w);
            for (auto& th : pool) th.join();
        }
        for (char x : ok) cell.passes += x;
        cell.probability = static_cast<double>(cell.passes) / static_cast<double>(trials);
        std::tie(cell.ci_low, cell.ci_high) = wilson_interval(cell.passes, trials);
        rep.cells.push_back(cell);
    }
    return rep;
}

}  // namespace gromov
