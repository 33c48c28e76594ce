#include "gromov/diagrams.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

#include "gromov/errors.hpp"

namespace gromov {

int Diagram::relator_count() const {
    if (n > 0) return n;
    int mx = 0;
    for (const auto& f : faces) mx = std::max(mx, f.bears);
    return mx;
}

int Diagram::reading_dart(std::size_t f, int k) const {
    const auto& face = faces[f];
    const int L = static_cast<int>(face.boundary.size());
    if (face.orientation > 0) return face.boundary[static_cast<std::size_t>((face.distinguished + k) % L)];
    return rev_dart(face.boundary[static_cast<std::size_t>(((face.distinguished - k) % L + L) % L)]);
}

int Diagram::reading_index(std::size_t f, int pos) const {
    const auto& face = faces[f];
    const int L = static_cast<int>(face.boundary.size());
    if (face.orientation > 0) return ((pos - face.distinguished) % L + L) % L;
    return ((face.distinguished - pos) % L + L) % L;
}

namespace {

struct UnionFind {
    std::vector<int> p;
    explicit UnionFind(std::size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
    int find(int x) {
        while (p[static_cast<std::size_t>(x)] != x) x = p[static_cast<std::size_t>(x)] = p[static_cast<std::size_t>(p[static_cast<std::size_t>(x)])];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        p[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
        return true;
    }
};

template <class T>
decltype(auto) at(std::vector<T>& v, int i) {
    return v[static_cast<std::size_t>(i)];
}
template <class T>
decltype(auto) at(const std::vector<T>& v, int i) {
    return v[static_cast<std::size_t>(i)];
}

}  // namespace

ValidationReport validate(const Diagram& dg) {
    ValidationReport r;
    Topology& t = r.topology;
    auto bad = [&](std::string s) { r.violations.push_back(std::move(s)); };
    const int V = dg.num_vertices;
    const int E = static_cast<int>(dg.edges.size());
    const int D = 2 * E;
    if (V <= 0) bad("no vertices");
    for (int e = 0; e < E; ++e) {
        const auto& ed = at(dg.edges, e);
        if (ed.src < 0 || ed.src >= V || ed.dst < 0 || ed.dst >= V)
            bad("edge " + std::to_string(e) + " has an endpoint outside the vertex set");
    }
    if (dg.faces.empty()) bad("no 2-cells");
    if (!r.violations.empty()) return r;

    const int n = dg.relator_count();
    const std::size_t L = dg.faces.front().boundary.size();
    std::vector<bool> used_index(static_cast<std::size_t>(std::max(n, 0)) + 1, false);
    t.dart_face.assign(static_cast<std::size_t>(D), -1);
    t.dart_pos.assign(static_cast<std::size_t>(D), -1);
    for (std::size_t f = 0; f < dg.faces.size(); ++f) {
        const auto& face = dg.faces[f];
        std::string tag = "face " + std::to_string(f);
        if (face.boundary.empty()) {
            bad(tag + " has empty boundary");
            continue;
        }
        if (face.boundary.size() != L) bad(tag + " is not an l-gon with the common l");
        if (face.bears < 1 || face.bears > n)
            bad(tag + " bears relator " + std::to_string(face.bears) + " outside 1.." + std::to_string(n));
        else
            used_index[static_cast<std::size_t>(face.bears)] = true;
        if (face.orientation != 1 && face.orientation != -1) bad(tag + " orientation must be +1 or -1");
        if (face.distinguished < 0 || face.distinguished >= static_cast<int>(face.boundary.size()))
            bad(tag + " distinguished edge index out of range");
        bool darts_ok = true;
        for (int d : face.boundary)
            if (d < 0 || d >= D) {
                bad(tag + " uses an unknown edge");
                darts_ok = false;
                break;
            }
        if (!darts_ok) continue;
        const std::size_t len = face.boundary.size();
        for (std::size_t i = 0; i < len; ++i) {
            int d = face.boundary[i];
            if (dg.head(d) != dg.tail(face.boundary[(i + 1) % len])) {
                bad(tag + " boundary is not a closed walk");
                break;
            }
        }
        for (std::size_t i = 0; i < len; ++i) {
            int d = face.boundary[i];
            if (at(t.dart_face, d) != -1) {
                bad("edge " + std::to_string(dart_edge(d)) + " traversed twice in the same direction by 2-cells");
                continue;
            }
            at(t.dart_face, d) = static_cast<int>(f);
            at(t.dart_pos, d) = static_cast<int>(i);
        }
    }
    for (int i = 1; i <= n; ++i)
        if (!used_index[static_cast<std::size_t>(i)]) bad("bearing map misses relator index " + std::to_string(i));
    if (!r.violations.empty()) return r;

    // rotation system from the corners of the 2-cells
    t.rho.assign(static_cast<std::size_t>(D), -1);
    std::vector<bool> has_pre(static_cast<std::size_t>(D), false);
    for (const auto& face : dg.faces) {
        const std::size_t len = face.boundary.size();
        for (std::size_t i = 0; i < len; ++i) {
            int x = rev_dart(face.boundary[i]), y = face.boundary[(i + 1) % len];
            at(t.rho, x) = y;
            at(has_pre, y) = true;
        }
    }
    std::vector<std::vector<int>> out(static_cast<std::size_t>(V));
    for (int d = 0; d < D; ++d) out[static_cast<std::size_t>(dg.tail(d))].push_back(d);
    t.degree.assign(static_cast<std::size_t>(V), 0);
    for (int v = 0; v < V; ++v) {
        auto& ds = out[static_cast<std::size_t>(v)];
        at(t.degree, v) = static_cast<int>(ds.size());
        if (ds.empty()) {
            bad("vertex " + std::to_string(v) + " is isolated");
            continue;
        }
        std::vector<int> starts;
        for (int d : ds)
            if (!at(has_pre, d)) starts.push_back(d);
        std::size_t seen = 0;
        if (starts.empty()) {
            int d = ds.front();
            do {
                ++seen;
                d = at(t.rho, d);
            } while (d != ds.front() && seen <= ds.size());
            if (seen != ds.size()) bad("vertex " + std::to_string(v) + " has a pinched neighbourhood");
            continue;
        }
        std::vector<int> ends;
        for (int s : starts) {
            int d = s;
            ++seen;
            while (at(t.rho, d) != -1) {
                d = at(t.rho, d);
                ++seen;
            }
            ends.push_back(d);
        }
        if (seen != ds.size()) bad("vertex " + std::to_string(v) + " has a pinched neighbourhood");
        if (starts.size() > 1) t.disk = false;
        for (std::size_t i = 0; i < starts.size(); ++i) at(t.rho, ends[i]) = starts[(i + 1) % starts.size()];
    }
    if (!r.violations.empty()) return r;

    // outer faces are phi-orbits of darts unused by 2-cells
    std::vector<bool> vis(static_cast<std::size_t>(D), false);
    for (int d = 0; d < D; ++d) {
        if (at(t.dart_face, d) != -1 || at(vis, d)) continue;
        ++t.outer_faces;
        std::vector<int> orbit;
        int x = d;
        while (!at(vis, x)) {
            at(vis, x) = true;
            orbit.push_back(x);
            x = at(t.rho, rev_dart(x));
        }
        if (t.outer_faces == 1) t.outer_walk = orbit;
    }
    UnionFind uf(static_cast<std::size_t>(V));
    int comps = V;
    for (const auto& e : dg.edges)
        if (uf.unite(e.src, e.dst)) --comps;
    if (comps != 1) bad("diagram is not connected");
    if (t.outer_faces == 0) bad("closed diagram without boundary");
    if (t.outer_faces > 1) bad("diagram encloses a hole (more than one complementary region)");
    const int F = static_cast<int>(dg.faces.size());
    if (V - E + F + t.outer_faces != 2)
        bad("Euler characteristic check failed: V-E+F=" + std::to_string(V - E + F + t.outer_faces));

    t.internal.assign(static_cast<std::size_t>(E), false);
    t.on_boundary.assign(static_cast<std::size_t>(E), false);
    for (int e = 0; e < E; ++e) {
        bool a = at(t.dart_face, 2 * e) != -1, b = at(t.dart_face, 2 * e + 1) != -1;
        at(t.internal, e) = a && b;
        at(t.on_boundary, e) = !(a && b);
    }
    for (auto [e, lab] : dg.restrictions) {
        if (e < 0 || e >= E) {
            bad("restriction on unknown edge " + std::to_string(e));
            continue;
        }
        bool in_cell = at(t.dart_face, 2 * e) != -1 || at(t.dart_face, 2 * e + 1) != -1;
        if (!at(t.on_boundary, e) || !in_cell)
            bad("restricted edge " + std::to_string(e) + " must lie on the boundary and on a 2-cell");
        if (lab >= 52) bad("restriction label is not a letter");
    }
    r.valid = r.violations.empty();
    return r;
}

Topology require_valid(const Diagram& dg) {
    auto r = validate(dg);
    if (!r.valid) {
        std::string msg = "invalid diagram:";
        for (auto& v : r.violations) msg += " " + v + ";";
        throw PreconditionError(msg, "invalid-diagram");
    }
    return std::move(r.topology);
}

bool is_reduced(const Diagram& dg, const Topology& t) {
    for (std::size_t e = 0; e < dg.edges.size(); ++e) {
        if (!t.internal[e]) continue;
        int a = 2 * static_cast<int>(e), b = a + 1;
        int f1 = at(t.dart_face, a), f2 = at(t.dart_face, b);
        if (f1 == f2) continue;
        const auto &F1 = at(dg.faces, f1), &F2 = at(dg.faces, f2);
        if (F1.bears == F2.bears && F1.orientation != F2.orientation &&
            dg.reading_index(static_cast<std::size_t>(f1), at(t.dart_pos, a)) ==
                dg.reading_index(static_cast<std::size_t>(f2), at(t.dart_pos, b)))
            return false;
    }
    for (int deg : t.degree)
        if (deg == 1) return false;
    return true;
}

bool is_reduced(const Diagram& dg) { return is_reduced(dg, require_valid(dg)); }

ConstraintReport belonging(const Diagram& dg) {
    Topology t = require_valid(dg);
    ConstraintReport r;
    const int E = static_cast<int>(dg.edges.size());
    const int n = dg.relator_count();
    r.faces = static_cast<int>(dg.faces.size());
    r.l = dg.face_length();
    r.belongs.assign(static_cast<std::size_t>(E), -1);
    r.E_face.assign(dg.faces.size(), 0);
    r.E_relator.assign(static_cast<std::size_t>(n), 0);
    r.multiplicity.assign(static_cast<std::size_t>(n), 0);
    for (const auto& f : dg.faces) ++at(r.multiplicity, f.bears - 1);
    r.multiplicity_sorted = r.multiplicity;
    std::sort(r.multiplicity_sorted.rbegin(), r.multiplicity_sorted.rend());
    auto incidence = [&](int d) {
        int f = at(t.dart_face, d);
        return std::make_pair(at(dg.faces, f).bears, dg.reading_index(static_cast<std::size_t>(f), at(t.dart_pos, d)));
    };
    for (int e = 0; e < E; ++e) {
        if (at(t.on_boundary, e)) ++r.boundary_edges;
        if (at(t.internal, e)) {
            ++r.internal_edges;
            auto p = incidence(2 * e), q = incidence(2 * e + 1);
            if (p == q) {
                // x = x^-1 on this edge, never fillable; still charged once
                r.tie = true;
                at(r.belongs, e) = std::max(at(t.dart_face, 2 * e), at(t.dart_face, 2 * e + 1));
                continue;
            }
            at(r.belongs, e) = p > q ? at(t.dart_face, 2 * e) : at(t.dart_face, 2 * e + 1);
        } else if (dg.restrictions.count(e)) {
            ++r.restricted_edges;
            at(r.belongs, e) = std::max(at(t.dart_face, 2 * e), at(t.dart_face, 2 * e + 1));
        }
    }
    for (int e = 0; e < E; ++e)
        if (at(r.belongs, e) >= 0) ++at(r.E_face, at(r.belongs, e));
    for (std::size_t f = 0; f < dg.faces.size(); ++f) {
        r.d_c += r.E_face[f];
        auto& Ei = at(r.E_relator, dg.faces[f].bears - 1);
        Ei = std::max(Ei, r.E_face[f]);
    }
    r.boundary_length = static_cast<int>(t.outer_walk.size());
    return r;
}

namespace {

bool has_tie(const Diagram& dg, const Topology& t, int upto) {
    for (std::size_t e = 0; e < dg.edges.size(); ++e) {
        if (!t.internal[e]) continue;
        int a = 2 * static_cast<int>(e), b = a + 1;
        int f1 = at(t.dart_face, a), f2 = at(t.dart_face, b);
        const auto &F1 = at(dg.faces, f1), &F2 = at(dg.faces, f2);
        if (F1.bears > upto || F2.bears > upto) continue;
        if (F1.bears == F2.bears && F1.orientation == F2.orientation &&
            dg.reading_index(static_cast<std::size_t>(f1), at(t.dart_pos, a)) ==
                dg.reading_index(static_cast<std::size_t>(f2), at(t.dart_pos, b)))
            return true;
    }
    return false;
}

struct FillSearch {
    const std::vector<Word>& words;
    const FillOptions& opt;
    std::vector<std::vector<std::pair<std::size_t, std::vector<std::pair<int, Letter>>>>> cand;  // per index
    std::vector<int> label;
    std::vector<std::size_t> chosen;
    FillResult res;
    bool stop = false;

    FillSearch(const std::vector<Word>& w, const FillOptions& o) : words(w), opt(o) {}

    void run(std::size_t idx) {
        if (stop) return;
        if (idx == cand.size()) {
            ++res.count;
            if (opt.mode != FillMode::Count && static_cast<long long>(res.fillings.size()) < opt.limit)
                res.fillings.push_back(chosen);
            if (opt.mode == FillMode::First) stop = true;
            return;
        }
        for (const auto& [wi, labs] : cand[idx]) {
            if (opt.distinct) {
                bool dup = false;
                for (std::size_t j = 0; j < idx && !dup; ++j) dup = words[chosen[j]] == words[wi];
                if (dup) continue;
            }
            bool ok = true;
            for (auto [e, x] : labs)
                if (at(label, e) != -1 && at(label, e) != x) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            std::vector<int> set_here;
            for (auto [e, x] : labs)
                if (at(label, e) == -1) {
                    at(label, e) = x;
                    set_here.push_back(e);
                }
            chosen[idx] = wi;
            run(idx + 1);
            for (int e : set_here) at(label, e) = -1;
            if (stop) return;
        }
    }
};

}  // namespace

FillResult fill(const Diagram& dg, const std::vector<Word>& words, const FillOptions& opt) {
    Topology t = require_valid(dg);
    if (!is_reduced(dg, t)) throw PreconditionError("fill requires a reduced diagram", "not-reduced");
    const int L = dg.face_length();
    for (const Word& w : words)
        if (static_cast<int>(w.size()) != L) throw DomainError("relator length differs from the face size");
    const int n = dg.relator_count();
    const int k = opt.upto > 0 ? std::min(opt.upto, n) : n;
    FillSearch s(words, opt);
    if (has_tie(dg, t, k)) return s.res;
    const int E = static_cast<int>(dg.edges.size());
    s.cand.resize(static_cast<std::size_t>(k));
    std::vector<int> local(static_cast<std::size_t>(E), -1);
    for (int i = 1; i <= k; ++i) {
        std::vector<std::size_t> faces;
        for (std::size_t f = 0; f < dg.faces.size(); ++f)
            if (dg.faces[f].bears == i) faces.push_back(f);
        for (std::size_t wi = 0; wi < words.size(); ++wi) {
            const Word& w = words[wi];
            std::vector<std::pair<int, Letter>> labs;
            bool ok = true;
            for (std::size_t f : faces) {
                for (int kk = 0; kk < L && ok; ++kk) {
                    int d = dg.reading_dart(f, kk);
                    int e = dart_edge(d);
                    Letter x = w[static_cast<std::size_t>(kk)];
                    auto fwd = static_cast<Letter>((d & 1) ? inv(x) : x);
                    if (auto it = dg.restrictions.find(e); it != dg.restrictions.end() && it->second != x) ok = false;
                    if (at(local, e) == -1) {
                        at(local, e) = fwd;
                        labs.emplace_back(e, fwd);
                    } else if (at(local, e) != fwd) {
                        ok = false;
                    }
                }
                if (!ok) break;
            }
            for (auto [e, x] : labs) at(local, e) = -1;
            if (ok) s.cand[static_cast<std::size_t>(i - 1)].emplace_back(wi, std::move(labs));
        }
    }
    s.label.assign(static_cast<std::size_t>(E), -1);
    s.chosen.assign(static_cast<std::size_t>(k), 0);
    s.run(0);
    return s.res;
}

bool verify_filling(const Diagram& dg, const std::vector<Word>& ws) {
    Topology t = require_valid(dg);
    const int L = dg.face_length();
    const int k = static_cast<int>(ws.size());
    for (const Word& w : ws)
        if (static_cast<int>(w.size()) != L) return false;
    auto kth = [&](int d) {
        int f = at(t.dart_face, d);
        const auto& face = at(dg.faces, f);
        int pos = at(t.dart_pos, d);
        int idx = face.orientation > 0 ? (pos - face.distinguished + L) % L : (face.distinguished - pos + L) % L;
        return std::make_tuple(f, face.bears, idx);
    };
    for (int e = 0; e < static_cast<int>(dg.edges.size()); ++e) {
        std::vector<std::tuple<int, int, int>> inc;
        for (int d : {2 * e, 2 * e + 1})
            if (at(t.dart_face, d) != -1) inc.push_back(kth(d));
        if (inc.size() == 2) {
            auto [f1, i1, k1] = inc[0];
            auto [f2, i2, k2] = inc[1];
            if (i1 > k || i2 > k) continue;
            Letter a = at(ws, i1 - 1)[static_cast<std::size_t>(k1)], b = at(ws, i2 - 1)[static_cast<std::size_t>(k2)];
            bool same = at(dg.faces, f1).orientation == at(dg.faces, f2).orientation;
            if (same ? a != inv(b) : a != b) return false;
        }
        if (auto it = dg.restrictions.find(e); it != dg.restrictions.end() && inc.size() == 1) {
            auto [f, i, kk] = inc[0];
            if (i <= k && at(ws, i - 1)[static_cast<std::size_t>(kk)] != it->second) return false;
        }
    }
    return true;
}

namespace {
std::vector<int> edge_labels(const Diagram& dg, const std::vector<Word>& ws) {
    const int L = dg.face_length();
    std::vector<int> lab(dg.edges.size(), -1);
    for (std::size_t f = 0; f < dg.faces.size(); ++f) {
        int i = dg.faces[f].bears;
        if (i > static_cast<int>(ws.size())) throw DomainError("filling does not cover every relator index");
        const Word& w = at(ws, i - 1);
        if (static_cast<int>(w.size()) != L) throw DomainError("filling word has the wrong length");
        for (int k = 0; k < L; ++k) {
            int d = dg.reading_dart(f, k);
            Letter x = w[static_cast<std::size_t>(k)];
            at(lab, dart_edge(d)) = (d & 1) ? inv(x) : x;
        }
    }
    return lab;
}
}  // namespace

BoundaryWord boundary_word(const Diagram& dg, const std::vector<Word>& ws) {
    Topology t = require_valid(dg);
    auto lab = edge_labels(dg, ws);
    BoundaryWord b;
    for (auto it = t.outer_walk.rbegin(); it != t.outer_walk.rend(); ++it) {
        int d = rev_dart(*it);
        int x = at(lab, dart_edge(d));
        if (x < 0) throw DomainError("boundary edge without a label");
        b.raw.push_back(static_cast<Letter>((d & 1) ? inv(static_cast<Letter>(x)) : x));
    }
    b.reduced = reduce(b.raw);
    return b;
}

IsoperimetricResult isoperimetric_check(const Diagram& dg, const mpq_class& d, const mpq_class& epsilon) {
    Topology t = require_valid(dg);
    if (epsilon <= 0) throw DomainError("epsilon must be positive");
    IsoperimetricResult r;
    r.exact_ratio = mpq_class(static_cast<long>(t.outer_walk.size()),
                              static_cast<long>(dg.face_length()) * static_cast<long>(dg.faces.size()));
    r.exact_ratio.canonicalize();
    r.ratio = r.exact_ratio.get_d();
    r.threshold = 1 - 2 * d - epsilon;
    r.passes = r.exact_ratio >= r.threshold;
    return r;
}

LadderVerdict classify_ladder(const Diagram& dg, const BoundaryPath& beta1, const BoundaryPath& beta2) {
    Topology t = require_valid(dg);
    const int E = static_cast<int>(dg.edges.size());
    struct Cell {
        LadderCell id;
        std::set<int> verts, edges;
    };
    std::vector<Cell> cells;
    for (std::size_t f = 0; f < dg.faces.size(); ++f) {
        Cell c{{true, static_cast<int>(f)}, {}, {}};
        for (int d : dg.faces[f].boundary) {
            c.verts.insert(dg.tail(d));
            c.edges.insert(dart_edge(d));
        }
        cells.push_back(std::move(c));
    }
    for (int e = 0; e < E; ++e)
        if (at(t.dart_face, 2 * e) == -1 && at(t.dart_face, 2 * e + 1) == -1)
            cells.push_back({{false, e}, {at(dg.edges, e).src, at(dg.edges, e).dst}, {e}});

    std::set<int> boundary_verts;
    for (int d : t.outer_walk) boundary_verts.insert(dg.tail(d));
    auto points = [&](const BoundaryPath& b, const char* name) {
        std::pair<std::set<int>, std::set<int>> p;
        if (b.edges.empty()) {
            if (!boundary_verts.count(b.vertex))
                throw MalformedInput(std::string(name) + " vertex is not on the boundary");
            p.first.insert(b.vertex);
            return p;
        }
        for (int e : b.edges) {
            if (e < 0 || e >= E || !at(t.on_boundary, e))
                throw MalformedInput(std::string(name) + " uses an edge not on the boundary");
            p.first.insert(at(dg.edges, e).src);
            p.first.insert(at(dg.edges, e).dst);
            p.second.insert(e);
        }
        return p;
    };
    auto b1 = points(beta1, "beta1"), b2 = points(beta2, "beta2");

    const std::size_t k = cells.size();
    auto meets = [&](std::size_t i, std::size_t j) {
        for (int v : cells[i].verts)
            if (cells[j].verts.count(v)) return true;
        return false;
    };
    auto inside = [&](const std::pair<std::set<int>, std::set<int>>& b, std::size_t in, long not_in) {
        for (int v : b.first)
            if (!cells[in].verts.count(v) || (not_in >= 0 && cells[static_cast<std::size_t>(not_in)].verts.count(v)))
                return false;
        for (int e : b.second)
            if (!cells[in].edges.count(e)) return false;
        return true;
    };
    LadderVerdict v;
    if (k == 1) {
        v.is_ladder = inside(b1, 0, -1) && inside(b2, 0, -1);
        if (v.is_ladder) v.cells.push_back(cells[0].id);
        else v.reason = "beta paths not contained in the single cell";
        return v;
    }
    std::vector<std::vector<std::size_t>> adj(k);
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            if (meets(i, j)) {
                adj[i].push_back(j);
                adj[j].push_back(i);
                ++pairs;
            }
    std::vector<std::size_t> ends;
    for (std::size_t i = 0; i < k; ++i) {
        if (adj[i].size() > 2) {
            v.reason = "a cell meets three or more others";
            return v;
        }
        if (adj[i].size() == 1) ends.push_back(i);
    }
    if (pairs != k - 1 || ends.size() != 2) {
        v.reason = "cells do not form a chain";
        return v;
    }
    for (std::size_t start : ends) {
        std::vector<std::size_t> order{start};
        std::size_t prev = k;
        while (order.size() < k) {
            std::size_t cur = order.back(), nxt = k;
            for (std::size_t j : adj[cur])
                if (j != prev) nxt = j;
            if (nxt == k) break;
            prev = cur;
            order.push_back(nxt);
        }
        if (order.size() != k) {
            v.reason = "cells do not form a chain";
            return v;
        }
        if (inside(b1, order[0], static_cast<long>(order[1])) && inside(b2, order[k - 1], static_cast<long>(order[k - 2]))) {
            v.is_ladder = true;
            for (std::size_t i : order) v.cells.push_back(cells[i].id);
            return v;
        }
    }
    v.reason = "beta paths are not at opposite ends of the chain";
    return v;
}

namespace {

// breadth-first dart labelling from root along alpha and rho
std::vector<int> bfs_order(const Topology& t, int root, std::vector<int>& label) {
    const std::size_t D = t.rho.size();
    label.assign(D, -1);
    std::vector<int> order{root};
    at(label, root) = 0;
    for (std::size_t h = 0; h < order.size(); ++h) {
        int d = order[h];
        for (int x : {rev_dart(d), at(t.rho, d)})
            if (at(label, x) == -1) {
                at(label, x) = static_cast<int>(order.size());
                order.push_back(x);
            }
    }
    return order;
}

template <class Info>
std::vector<int> code_from(const Diagram& dg, const Topology& t, int root, Info info) {
    std::vector<int> label;
    auto order = bfs_order(t, root, label);
    std::vector<int> code{dg.num_vertices, static_cast<int>(dg.edges.size()), static_cast<int>(dg.faces.size())};
    for (int d : order) {
        code.push_back(at(label, rev_dart(d)));
        code.push_back(at(label, at(t.rho, d)));
        info(d, code);
    }
    return code;
}

}  // namespace

std::vector<int> canonical_code(const Diagram& dg) {
    Topology t = require_valid(dg);
    auto info = [&](int d, std::vector<int>& code) {
        int f = at(t.dart_face, d);
        if (f < 0) {
            code.insert(code.end(), {0, 0, 0});
        } else {
            const auto& face = at(dg.faces, f);
            code.push_back(face.bears);
            code.push_back(face.orientation);
            code.push_back(face.boundary[static_cast<std::size_t>(face.distinguished)] == d ? 1 : 0);
        }
        auto it = dg.restrictions.find(dart_edge(d));
        code.push_back(it == dg.restrictions.end() ? -1 : it->second);
    };
    std::vector<int> best;
    for (const auto& face : dg.faces) {
        if (face.bears != 1) continue;
        auto c = code_from(dg, t, face.boundary[static_cast<std::size_t>(face.distinguished)], info);
        if (best.empty() || c < best) best = std::move(c);
    }
    return best;
}

std::vector<int> shape_code(const Diagram& dg) {
    Topology t = require_valid(dg);
    auto info = [&](int d, std::vector<int>& code) { code.push_back(at(t.dart_face, d) < 0 ? 0 : 1); };
    std::vector<int> best;
    for (int d = 0; d < static_cast<int>(t.rho.size()); ++d) {
        auto c = code_from(dg, t, d, info);
        if (best.empty() || c < best) best = std::move(c);
    }
    return best;
}

Diagram glue_polygons(int faces, int l,
                      const std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>>& glued) {
    if (faces < 1 || l < 1) throw DomainError("glue_polygons needs faces >= 1 and l >= 1");
    auto corner = [&](int f, int k) { return f * l + ((k % l) + l) % l; };
    auto side = [&](int f, int k) { return f * l + k; };
    const int S = faces * l;
    UnionFind uf(static_cast<std::size_t>(S));
    std::vector<int> partner(static_cast<std::size_t>(S), -1);
    for (auto [a, b] : glued) {
        int sa = side(a.first, a.second), sb = side(b.first, b.second);
        if (sa == sb || at(partner, sa) != -1 || at(partner, sb) != -1)
            throw DomainError("each side may be glued at most once");
        at(partner, sa) = sb;
        at(partner, sb) = sa;
        uf.unite(corner(a.first, a.second), corner(b.first, b.second + 1));
        uf.unite(corner(a.first, a.second + 1), corner(b.first, b.second));
    }
    Diagram dg;
    std::map<int, int> vid;
    for (int c = 0; c < S; ++c) {
        int r = uf.find(c);
        if (!vid.count(r)) vid[r] = static_cast<int>(vid.size());
    }
    dg.num_vertices = static_cast<int>(vid.size());
    std::vector<int> dart_of(static_cast<std::size_t>(S), -1);
    for (int f = 0; f < faces; ++f)
        for (int k = 0; k < l; ++k) {
            int s = side(f, k);
            if (at(dart_of, s) != -1) continue;
            int e = static_cast<int>(dg.edges.size());
            dg.edges.push_back({vid[uf.find(corner(f, k))], vid[uf.find(corner(f, k + 1))]});
            at(dart_of, s) = 2 * e;
            if (at(partner, s) != -1) at(dart_of, at(partner, s)) = 2 * e + 1;
        }
    for (int f = 0; f < faces; ++f) {
        DiagramFace face;
        for (int k = 0; k < l; ++k) face.boundary.push_back(at(dart_of, side(f, k)));
        dg.faces.push_back(face);
    }
    return dg;
}

namespace {

// attach a new l-gon along darts outer[s..s+j) of the boundary
Diagram attach(const Diagram& base, const Topology& t, int l, std::size_t s, std::size_t j) {
    Diagram dg = base;
    const std::size_t beta = t.outer_walk.size();
    DiagramFace face;
    for (std::size_t i = 0; i < j; ++i) face.boundary.push_back(t.outer_walk[(s + i) % beta]);
    int from = base.head(face.boundary.back()), to = base.tail(face.boundary.front());
    int cur = from;
    const int extra = l - static_cast<int>(j);
    for (int i = 0; i < extra; ++i) {
        int nxt = (i == extra - 1) ? to : dg.num_vertices++;
        int e = static_cast<int>(dg.edges.size());
        dg.edges.push_back({cur, nxt});
        face.boundary.push_back(2 * e);
        cur = nxt;
    }
    dg.faces.push_back(face);
    return dg;
}

// orientation-preserving automorphisms as dart permutations
std::vector<std::vector<int>> automorphisms(const Topology& t) {
    const int D = static_cast<int>(t.rho.size());
    std::vector<std::vector<int>> out;
    for (int x = 0; x < D; ++x) {
        std::vector<int> map(static_cast<std::size_t>(D), -1), inv_map(static_cast<std::size_t>(D), -1);
        std::vector<int> queue{0};
        map[0] = x;
        inv_map[static_cast<std::size_t>(x)] = 0;
        bool ok = (at(t.dart_face, 0) < 0) == (at(t.dart_face, x) < 0);
        for (std::size_t h = 0; h < queue.size() && ok; ++h) {
            int d = queue[h];
            int img = at(map, d);
            for (int op = 0; op < 2 && ok; ++op) {
                int y = op ? at(t.rho, d) : rev_dart(d);
                int z = op ? at(t.rho, img) : rev_dart(img);
                if (at(map, y) == -1) {
                    if (at(inv_map, z) != -1 || (at(t.dart_face, y) < 0) != (at(t.dart_face, z) < 0)) {
                        ok = false;
                        break;
                    }
                    at(map, y) = z;
                    at(inv_map, z) = y;
                    queue.push_back(y);
                } else if (at(map, y) != z) {
                    ok = false;
                }
            }
        }
        if (ok) out.push_back(std::move(map));
    }
    return out;
}

}  // namespace

std::vector<Diagram> enumerate_shapes(int C, int l) {
    if (C < 1 || l < 1) throw DomainError("enumeration needs C >= 1 and l >= 1");
    Diagram poly = glue_polygons(1, l, {});
    std::vector<Diagram> all{poly};
    std::vector<Diagram> level{poly};
    for (int F = 1; F < C; ++F) {
        std::map<std::vector<int>, Diagram> next;
        for (const Diagram& dg : level) {
            Topology t = require_valid(dg);
            const std::size_t beta = t.outer_walk.size();
            for (std::size_t s = 0; s < beta; ++s)
                for (std::size_t j = 1; j <= beta && j < static_cast<std::size_t>(l); ++j) {
                    Diagram nd = attach(dg, t, l, s, j);
                    auto rep = validate(nd);
                    if (!rep.valid || !rep.topology.disk) continue;
                    auto code = shape_code(nd);
                    next.emplace(std::move(code), std::move(nd));
                }
        }
        level.clear();
        for (auto& [c, dg] : next) level.push_back(dg);
        all.insert(all.end(), level.begin(), level.end());
    }
    return all;
}

EnumerationResult enumerate_diagrams(int C, int l, long long budget) {
    if (C < 1 || l < 1) throw DomainError("enumeration needs C >= 1 and l >= 1");
    auto shapes = enumerate_shapes(C, l);
    EnumerationResult res;
    res.count_by_faces.assign(static_cast<std::size_t>(C) + 1, 0);
    res.shapes_by_faces.assign(static_cast<std::size_t>(C) + 1, 0);
    // work estimate before decorating
    long double work = 0;
    for (const auto& s : shapes) {
        auto F = static_cast<int>(s.faces.size());
        long double bearings = 0;
        for (int n = 1; n <= F; ++n) {
            // surjections F -> n by inclusion-exclusion
            long double sj = 0, binom = 1;
            for (int i = 0; i <= n; ++i) {
                sj += ((i % 2) ? -1 : 1) * binom * std::pow(static_cast<long double>(n - i), F);
                binom = binom * (n - i) / (i + 1);
            }
            bearings += sj;
        }
        work += bearings * std::pow(2.0L * l, F);
    }
    if (work > static_cast<long double>(budget))
        throw BudgetExceeded("diagram enumeration needs about " + std::to_string(static_cast<long long>(work)) +
                                 " decorations, over budget " + std::to_string(budget),
                             budget);
    for (const auto& shape : shapes) {
        Topology t = require_valid(shape);
        const int F = static_cast<int>(shape.faces.size());
        ++res.shapes_by_faces[static_cast<std::size_t>(F)];
        auto autos = automorphisms(t);
        // per automorphism: face permutation and position map
        struct Image {
            std::vector<int> face;
            std::vector<std::vector<int>> pos;
        };
        std::vector<Image> imgs;
        for (const auto& a : autos) {
            Image im;
            for (int f = 0; f < F; ++f) {
                const auto& b = at(shape.faces, f).boundary;
                im.face.push_back(at(t.dart_face, at(a, b[0])));
                std::vector<int> p;
                for (int d : b) p.push_back(at(t.dart_pos, at(a, d)));
                im.pos.push_back(std::move(p));
            }
            imgs.push_back(std::move(im));
        }
        std::vector<int> bear(static_cast<std::size_t>(F)), dist(static_cast<std::size_t>(F)), ori(static_cast<std::size_t>(F));
        std::vector<int> tuple(static_cast<std::size_t>(3 * F)), other(static_cast<std::size_t>(3 * F));
        Diagram dg = shape;
        for (int n = 1; n <= F; ++n) {
            std::fill(bear.begin(), bear.end(), 1);
            for (;;) {
                std::vector<bool> hit(static_cast<std::size_t>(n) + 1, false);
                for (int b : bear) hit[static_cast<std::size_t>(b)] = true;
                bool surj = std::all_of(hit.begin() + 1, hit.end(), [](bool x) { return x; });
                if (surj) {
                    long long combos = 1;
                    for (int f = 0; f < F; ++f) combos *= 2L * l;
                    for (long long c = 0; c < combos; ++c) {
                        long long x = c;
                        for (int f = 0; f < F; ++f) {
                            at(dist, f) = static_cast<int>(x % l);
                            x /= l;
                            at(ori, f) = (x % 2) ? -1 : 1;
                            x /= 2;
                        }
                        for (int f = 0; f < F; ++f) {
                            at(tuple, 3 * f) = at(bear, f);
                            at(tuple, 3 * f + 1) = at(dist, f);
                            at(tuple, 3 * f + 2) = at(ori, f);
                        }
                        bool minimal = true;
                        for (const auto& im : imgs) {
                            for (int f = 0; f < F; ++f) {
                                int g = at(im.face, f);
                                at(other, 3 * g) = at(bear, f);
                                at(other, 3 * g + 1) = at(at(im.pos, f), at(dist, f));
                                at(other, 3 * g + 2) = at(ori, f);
                            }
                            if (other < tuple) {
                                minimal = false;
                                break;
                            }
                        }
                        if (!minimal) continue;
                        dg.n = n;
                        for (int f = 0; f < F; ++f) {
                            auto& face = at(dg.faces, f);
                            face.bears = at(bear, f);
                            face.distinguished = at(dist, f);
                            face.orientation = at(ori, f);
                        }
                        if (!is_reduced(dg, t)) continue;
                        res.diagrams.push_back(dg);
                        ++res.count_by_faces[static_cast<std::size_t>(F)];
                    }
                }
                int i = 0;
                while (i < F && at(bear, i) == n) at(bear, i++) = 1;
                if (i == F) break;
                ++at(bear, i);
            }
        }
    }
    long long total = static_cast<long long>(res.diagrams.size());
    res.log_count = total > 0 ? std::log(static_cast<double>(total)) / std::log(static_cast<double>(l)) : 0;
    res.log_shape_factor = 4.0 * C;
    return res;
}

Diagram diagram_from_json(const nlohmann::json& j) {
    try {
        Diagram dg;
        std::map<long long, int> vid, eid;
        for (const auto& v : j.at("vertices")) {
            long long id = v.is_object() ? v.at("id").get<long long>() : v.get<long long>();
            if (!vid.emplace(id, static_cast<int>(vid.size())).second) throw MalformedInput("duplicate vertex id");
        }
        dg.num_vertices = static_cast<int>(vid.size());
        for (const auto& e : j.at("edges")) {
            long long id = e.at("id").get<long long>();
            if (id <= 0) throw MalformedInput("edge ids must be positive");
            auto s = vid.find(e.at("src").get<long long>()), d = vid.find(e.at("dst").get<long long>());
            if (s == vid.end() || d == vid.end()) throw MalformedInput("edge endpoint is not a vertex");
            if (!eid.emplace(id, static_cast<int>(dg.edges.size())).second) throw MalformedInput("duplicate edge id");
            dg.edges.push_back({s->second, d->second});
        }
        for (const auto& f : j.at("faces")) {
            DiagramFace face;
            face.bears = f.at("bears").get<int>();
            face.orientation = f.value("orientation", 1);
            face.distinguished = f.value("distinguished", 0);
            for (const auto& x : f.at("boundary")) {
                long long s = x.get<long long>();
                auto it = eid.find(s < 0 ? -s : s);
                if (it == eid.end()) throw MalformedInput("face boundary uses unknown edge " + std::to_string(s));
                face.boundary.push_back(2 * it->second + (s < 0 ? 1 : 0));
            }
            dg.faces.push_back(std::move(face));
        }
        dg.n = j.value("n", 0);
        if (j.contains("restrictions"))
            for (const auto& r : j.at("restrictions")) {
                auto it = eid.find(r.at("edge").get<long long>());
                if (it == eid.end()) throw MalformedInput("restriction on unknown edge");
                std::string lab = r.at("label").get<std::string>();
                if (lab.size() != 1) throw MalformedInput("restriction label must be one letter");
                dg.restrictions[it->second] = parse_letter(lab[0]);
            }
        return dg;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedInput(std::string("diagram json: ") + e.what());
    }
}

nlohmann::json diagram_to_json(const Diagram& dg) {
    nlohmann::json j;
    j["vertices"] = nlohmann::json::array();
    for (int v = 0; v < dg.num_vertices; ++v) j["vertices"].push_back(v);
    j["edges"] = nlohmann::json::array();
    for (std::size_t e = 0; e < dg.edges.size(); ++e)
        j["edges"].push_back({{"id", e + 1}, {"src", dg.edges[e].src}, {"dst", dg.edges[e].dst}});
    j["faces"] = nlohmann::json::array();
    for (std::size_t f = 0; f < dg.faces.size(); ++f) {
        const auto& face = dg.faces[f];
        nlohmann::json b = nlohmann::json::array();
        for (int d : face.boundary) b.push_back((d & 1) ? -(dart_edge(d) + 1) : dart_edge(d) + 1);
        j["faces"].push_back({{"id", f + 1},
                              {"bears", face.bears},
                              {"orientation", face.orientation},
                              {"boundary", b},
                              {"distinguished", face.distinguished}});
    }
    j["n"] = dg.relator_count();
    j["restrictions"] = nlohmann::json::array();
    for (auto [e, lab] : dg.restrictions)
        j["restrictions"].push_back({{"edge", e + 1}, {"label", std::string(1, letter_char(lab))}});
    return j;
}

}  // namespace gromov
