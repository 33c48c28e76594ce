#include <doctest.h>

#include <functional>
#include <set>

#include "gromov/diagrams.hpp"
#include "gromov/errors.hpp"
#include "oracles.hpp"

using namespace gromov;

namespace {

using Glue = std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>>;

// two l-gons sharing an arc of length j (sides 0..j-1 of face 0 with the mirrored sides of face 1)
Diagram two_faces(int l, int j) {
    Glue g;
    for (int i = 0; i < j; ++i) g.push_back({{0, i}, {1, j - 1 - i}});
    return glue_polygons(2, l, g);
}

// every partial matching of the sides of C l-gons
void all_matchings(int C, int l, const std::function<void(const Glue&)>& visit) {
    const int S = C * l;
    std::vector<int> partner(static_cast<std::size_t>(S), -2);
    Glue cur;
    std::function<void(int)> rec = [&](int s) {
        while (s < S && partner[static_cast<std::size_t>(s)] != -2) ++s;
        if (s == S) {
            visit(cur);
            return;
        }
        partner[static_cast<std::size_t>(s)] = -1;
        rec(s + 1);
        for (int t = s + 1; t < S; ++t) {
            if (partner[static_cast<std::size_t>(t)] != -2) continue;
            partner[static_cast<std::size_t>(s)] = t;
            partner[static_cast<std::size_t>(t)] = s;
            cur.push_back({{s / l, s % l}, {t / l, t % l}});
            rec(s + 1);
            cur.pop_back();
            partner[static_cast<std::size_t>(t)] = -2;
        }
        partner[static_cast<std::size_t>(s)] = -2;
    };
    rec(0);
}

// reduced disk shapes with exactly C faces, by exhaustive gluing
std::set<std::vector<int>> oracle_shapes(int C, int l) {
    std::set<std::vector<int>> out;
    all_matchings(C, l, [&](const Glue& g) {
        Diagram dg = glue_polygons(C, l, g);
        auto rep = validate(dg);
        if (!rep.valid || !rep.topology.disk) return;
        for (int deg : rep.topology.degree)
            if (deg == 1) return;
        out.insert(shape_code(dg));
    });
    return out;
}

std::set<std::vector<int>> shapes_with(int C, int l) {
    std::set<std::vector<int>> out;
    for (const auto& s : enumerate_shapes(C, l))
        if (static_cast<int>(s.faces.size()) == C) out.insert(shape_code(s));
    return out;
}

// all decorations of all shapes, deduplicated by canonical code only
std::set<std::vector<int>> oracle_decorated(int C, int l) {
    std::set<std::vector<int>> out;
    for (const auto& shape : enumerate_shapes(C, l)) {
        const int F = static_cast<int>(shape.faces.size());
        std::vector<int> bear(static_cast<std::size_t>(F), 1);
        std::function<void(int)> rec_b = [&](int f) {
            if (f == F) {
                int n = *std::max_element(bear.begin(), bear.end());
                std::set<int> hit(bear.begin(), bear.end());
                if (static_cast<int>(hit.size()) != n) return;
                Diagram dg = shape;
                std::function<void(int)> rec_d = [&](int g) {
                    if (g == F) {
                        if (is_reduced(dg)) out.insert(canonical_code(dg));
                        return;
                    }
                    for (int dd = 0; dd < l; ++dd)
                        for (int o : {1, -1}) {
                            dg.faces[static_cast<std::size_t>(g)].bears = bear[static_cast<std::size_t>(g)];
                            dg.faces[static_cast<std::size_t>(g)].distinguished = dd;
                            dg.faces[static_cast<std::size_t>(g)].orientation = o;
                            rec_d(g + 1);
                        }
                };
                rec_d(0);
                return;
            }
            for (int b = 1; b <= F; ++b) {
                bear[static_cast<std::size_t>(f)] = b;
                rec_b(f + 1);
            }
        };
        rec_b(0);
    }
    return out;
}

using oracle::brute_fill;

}  // namespace

TEST_CASE("validate examples") {
    Diagram poly = glue_polygons(1, 5, {});
    CHECK(validate(poly).valid);

    Diagram spike = poly;
    spike.num_vertices += 1;
    spike.edges.push_back({0, 5});
    CHECK(validate(spike).valid);
    spike.restrictions[5] = parse_letter('a');
    CHECK_FALSE(validate(spike).valid);

    Diagram skip = glue_polygons(3, 3, {{{0, 0}, {1, 0}}, {{1, 1}, {2, 0}}});
    skip.faces[0].bears = 1;
    skip.faces[1].bears = 3;
    skip.faces[2].bears = 3;
    skip.n = 3;
    CHECK(validate(skip).valid == false);
    skip.faces[1].bears = 2;
    CHECK(validate(skip).valid);

    // a ring of faces around a hole
    Diagram ring = glue_polygons(3, 4, {{{0, 1}, {1, 3}}, {{1, 1}, {2, 3}}, {{2, 1}, {0, 3}}});
    auto rr = validate(ring);
    CHECK_FALSE(rr.valid);

    // two faces glued along every side close up into a sphere
    Diagram sphere = glue_polygons(2, 3, {{{0, 0}, {1, 2}}, {{0, 1}, {1, 1}}, {{0, 2}, {1, 0}}});
    CHECK_FALSE(validate(sphere).valid);

    Diagram bad_ori = poly;
    bad_ori.faces[0].orientation = 0;
    CHECK_FALSE(validate(bad_ori).valid);
}

TEST_CASE("reducedness") {
    Diagram dg = two_faces(4, 1);
    // shared edge: side 0 of face 0, side 0 of face 1
    dg.faces[0].orientation = 1;
    dg.faces[1].orientation = -1;
    dg.faces[0].distinguished = 0;
    dg.faces[1].distinguished = 0;
    CHECK_FALSE(is_reduced(dg));
    dg.faces[1].bears = 2;
    CHECK(is_reduced(dg));

    Diagram spike = glue_polygons(1, 4, {});
    spike.num_vertices += 1;
    spike.edges.push_back({0, 4});
    CHECK_FALSE(is_reduced(spike));
}

TEST_CASE("belonging examples") {
    Diagram dg = two_faces(4, 1);
    dg.faces[1].bears = 2;
    auto r = belonging(dg);
    CHECK(r.d_c == 1);
    CHECK(r.E_face[1] == 1);
    CHECK(r.E_face[0] == 0);
    CHECK(r.E_relator == std::vector<int>{0, 1});

    Diagram one = glue_polygons(1, 5, {});
    for (int e : {0, 2, 3}) one.restrictions[e] = parse_letter('a');
    auto s = belonging(one);
    CHECK(s.d_c == 3);
    CHECK(s.E_relator == std::vector<int>{3});

    // same relator, same orientation, same position: tie
    Diagram tie = two_faces(4, 1);
    CHECK(belonging(tie).tie);
}

TEST_CASE("fill examples") {
    Diagram two = glue_polygons(1, 2, {});
    auto r = fill(two, {parse_word("ab")});
    CHECK(r.fillable());
    CHECK(r.fillings.front() == std::vector<std::size_t>{0});

    auto words = enumerate_cyclically_reduced(2, 3);
    for (int pos = 0; pos < 3; ++pos)
        for (int dist = 0; dist < 3; ++dist)
            for (int o : {1, -1})
                for (Letter x = 0; x < 4; ++x) {
                    Diagram dg = glue_polygons(1, 3, {});
                    dg.faces[0].distinguished = dist;
                    dg.faces[0].orientation = o;
                    dg.restrictions[pos] = x;
                    int k = o > 0 ? (pos - dist + 3) % 3 : (dist - pos + 3) % 3;
                    for (const Word& w : words) {
                        bool expect = w[static_cast<std::size_t>(k)] == x;
                        CHECK(fill(dg, {w}).fillable() == expect);
                    }
                }

    Diagram tie = two_faces(4, 1);
    auto all4 = enumerate_cyclically_reduced(2, 4);
    CHECK(fill(tie, all4, {FillMode::Count}).count == 0);
}

TEST_CASE("boundary words") {
    Diagram one = glue_polygons(1, 5, {});
    Word r = parse_word("abAAb");
    for (int dist = 0; dist < 5; ++dist) {
        one.faces[0].distinguished = dist;
        one.faces[0].orientation = 1;
        auto b = boundary_word(one, {r});
        CHECK(cyclically_reduce(b.raw).canonical() == cyclically_reduce(r).canonical());
        one.faces[0].orientation = -1;
        b = boundary_word(one, {r});
        CHECK(cyclically_reduce(b.raw).canonical() == cyclically_reduce(inverse(r)).canonical());
    }
    // l=3, arc of length 1: r = abA, r' = aab glued where face 0 side 0 meets face 1 side 0
    Diagram dg = two_faces(3, 1);
    dg.faces[1].bears = 2;
    auto all = fill(dg, enumerate_cyclically_reduced(2, 3), {FillMode::All});
    CHECK(all.count > 0);
    for (auto& f : all.fillings) {
        auto words = enumerate_cyclically_reduced(2, 3);
        Word a = words[f[0]], b = words[f[1]];
        auto bw = boundary_word(dg, {a, b});
        // boundary = (a without the shared letter)(b without it), cyclically
        Word expect = concat(rotate(a, 1), rotate(b, 1));
        expect.erase(expect.begin() + 2);
        expect.pop_back();
        CHECK(cyclically_reduce(bw.raw).canonical() == cyclically_reduce(expect).canonical());
        CHECK(bw.raw.size() == 4);
    }
}

TEST_CASE("isoperimetric ratios") {
    Diagram one = glue_polygons(1, 6, {});
    auto r = isoperimetric_check(one, mpq_class(2, 5), mpq_class(1, 100));
    CHECK(r.exact_ratio == 1);
    CHECK(r.passes);
    for (int j = 1; j < 6; ++j) {
        auto t = isoperimetric_check(two_faces(6, j), mpq_class(1, 4), mpq_class(1, 100));
        CHECK(t.exact_ratio == mpq_class(12 - 2 * j) / 12);
    }
    auto planted = isoperimetric_check(two_faces(6, 5), mpq_class(1, 4), mpq_class(1, 100));
    CHECK_FALSE(planted.passes);
}

TEST_CASE("ladders") {
    Diagram one = glue_polygons(1, 6, {});
    auto v = classify_ladder(one, {{0}}, {{3}});
    CHECK(v.is_ladder);
    CHECK(v.cells.size() == 1);

    // chain of three squares: 0-1 glued, 1-2 glued on the opposite side
    Diagram chain = glue_polygons(3, 4, {{{0, 2}, {1, 0}}, {{1, 2}, {2, 0}}});
    REQUIRE(validate(chain).valid);
    // outer side of face 0 is side 0, of face 2 is side 2
    auto edge_of = [&](const Diagram& dg, int f, int k) { return dart_edge(dg.faces[static_cast<std::size_t>(f)].boundary[static_cast<std::size_t>(k)]); };
    auto c = classify_ladder(chain, {{edge_of(chain, 0, 0)}}, {{edge_of(chain, 2, 2)}});
    CHECK(c.is_ladder);
    CHECK(c.cells.size() == 3);
    CHECK(c.cells[0].index == 0);
    CHECK(c.cells[2].index == 2);

    // three triangles around a vertex pairwise sharing edges (fan with a gap)
    Diagram tri = glue_polygons(3, 3, {{{0, 0}, {1, 2}}, {{1, 0}, {2, 2}}});
    REQUIRE(validate(tri).valid);
    auto t = classify_ladder(tri, {{edge_of(tri, 0, 1)}}, {{edge_of(tri, 2, 1)}});
    CHECK_FALSE(t.is_ladder);

    CHECK_THROWS_AS(classify_ladder(chain, {{edge_of(chain, 0, 2)}}, {{edge_of(chain, 2, 2)}}), MalformedInput);
}

TEST_CASE("enumeration: one face") {
    for (int l : {2, 3, 4, 5}) {
        auto res = enumerate_diagrams(1, l);
        // oracle: all (distinguished, orientation) data, deduplicated by canonical code
        std::set<std::vector<int>> codes;
        for (int d = 0; d < l; ++d)
            for (int o : {1, -1}) {
                Diagram dg = glue_polygons(1, l, {});
                dg.faces[0].distinguished = d;
                dg.faces[0].orientation = o;
                codes.insert(canonical_code(dg));
            }
        CHECK(res.diagrams.size() == codes.size());
        CHECK(res.diagrams.size() == 2);
    }
}

TEST_CASE("enumeration: shapes match exhaustive gluing") {
    for (auto [C, l] : std::vector<std::pair<int, int>>{{2, 3}, {2, 4}, {2, 6}, {3, 3}, {3, 4}}) {
        CAPTURE(C);
        CAPTURE(l);
        auto a = shapes_with(C, l), b = oracle_shapes(C, l);
        CAPTURE(a.size());
        CAPTURE(b.size());
        std::size_t missing = 0;
        for (auto& x : b) missing += a.count(x) ? 0 : 1;
        CAPTURE(missing);
        CHECK(a == b);
    }
}

TEST_CASE("enumeration: two triangles share one arc") {
    auto res = enumerate_diagrams(2, 3);
    for (const auto& dg : res.diagrams) {
        if (dg.faces.size() != 2) continue;
        auto rep = belonging(dg);
        CHECK((rep.internal_edges == 1 || rep.internal_edges == 2));
        CHECK(rep.boundary_length == 6 - 2 * rep.internal_edges);
    }
}

TEST_CASE("enumeration: decorations are complete and duplicate free") {
    for (auto [C, l] : std::vector<std::pair<int, int>>{{2, 3}, {2, 4}, {3, 3}}) {
        CAPTURE(C);
        CAPTURE(l);
        auto res = enumerate_diagrams(C, l);
        std::set<std::vector<int>> codes;
        for (const auto& dg : res.diagrams) {
            CHECK(validate(dg).valid);
            CHECK(is_reduced(dg));
            codes.insert(canonical_code(dg));
        }
        CHECK(codes.size() == res.diagrams.size());
        CHECK(codes == oracle_decorated(C, l));
    }
    CHECK_THROWS_AS(enumerate_diagrams(3, 12), BudgetExceeded);
}

TEST_CASE("constraint identities over enumerated diagrams") {
    auto res = enumerate_diagrams(2, 4);
    for (const auto& dg : res.diagrams) {
        auto r = belonging(dg);
        CHECK(r.l * r.faces <= r.boundary_length + 2 * r.internal_edges);
        CHECK(r.d_c == r.internal_edges + r.restricted_edges);
        // add restrictions on every other boundary edge and recheck
        Diagram rd = dg;
        Topology t = require_valid(rd);
        int flip = 0;
        for (std::size_t e = 0; e < rd.edges.size(); ++e)
            if (t.on_boundary[e] && (flip++ % 2 == 0)) rd.restrictions[static_cast<int>(e)] = static_cast<Letter>(e % 4);
        auto q = belonging(rd);
        CHECK(q.d_c == q.internal_edges + q.restricted_edges);
        int sum = 0;
        for (int x : q.E_face) sum += x;
        CHECK(sum == q.d_c);
    }
}

TEST_CASE("fill agrees with brute-force tuple filtering") {
    for (int l : {2, 3, 4}) {
        auto words = enumerate_cyclically_reduced(2, l);
        auto res = enumerate_diagrams(2, l);
        int idx = 0;
        for (const auto& base : res.diagrams) {
            for (int variant = 0; variant < 2; ++variant) {
                Diagram dg = base;
                if (variant == 1) {
                    Topology t = require_valid(dg);
                    int c = 0;
                    for (std::size_t e = 0; e < dg.edges.size(); ++e)
                        if (t.on_boundary[e] && (c++ + idx) % 3 == 0) dg.restrictions[static_cast<int>(e)] = static_cast<Letter>((e + static_cast<std::size_t>(idx)) % 4);
                }
                ++idx;
                const int n = dg.relator_count();
                auto got = fill(dg, words, {FillMode::All});
                auto want = brute_fill(dg, words, n, false);
                std::set<std::vector<std::size_t>> a(got.fillings.begin(), got.fillings.end()), b(want.begin(), want.end());
                CHECK(a == b);
                CHECK(got.count == static_cast<long long>(want.size()));
                for (const auto& f : got.fillings) {
                    std::vector<Word> ws;
                    for (auto i : f) ws.push_back(words[i]);
                    CHECK(verify_filling(dg, ws));
                }
                if (n == 2) {
                    auto d = fill(dg, words, {FillMode::Count, true});
                    CHECK(d.count == static_cast<long long>(brute_fill(dg, words, 2, true).size()));
                    auto p1 = fill(dg, words, {FillMode::Count, false, 1});
                    CHECK(p1.count == static_cast<long long>(brute_fill(dg, words, 1, false).size()));
                }
            }
        }
    }
}

TEST_CASE("json round trip") {
    Diagram dg = two_faces(4, 2);
    dg.faces[1].bears = 2;
    dg.faces[1].orientation = -1;
    dg.faces[0].distinguished = 3;
    Topology t = require_valid(dg);
    for (std::size_t e = 0; e < dg.edges.size(); ++e)
        if (t.on_boundary[e]) {
            dg.restrictions[static_cast<int>(e)] = parse_letter('B');
            break;
        }
    auto j = diagram_to_json(dg);
    Diagram back = diagram_from_json(nlohmann::json::parse(j.dump()));
    CHECK(canonical_code(back) == canonical_code(dg));
    CHECK(diagram_to_json(back) == j);
    CHECK_THROWS_AS(diagram_from_json(nlohmann::json::parse(R"({"vertices":[0]})")), MalformedInput);
}
