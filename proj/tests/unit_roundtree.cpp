#include <doctest.h>

#include <algorithm>
#include <functional>
#include <set>

#include "gromov/errors.hpp"
#include "gromov/rng.hpp"
#include "gromov/roundtree.hpp"

using namespace gromov;

namespace {

Word W(const char* s) { return parse_word(s); }

Presentation surface() { return Presentation::from_relators(4, 8, 0, {W("abABcdCD")}); }

RoundTreeParams small_params() {
    RoundTreeParams p;
    p.ext_offset = 0;
    p.ext_len = 1;
    p.seg_len = 2;
    return p;
}

struct Built {
    PlantedHost planted;
    RoundTree tree;
};

// first planted seed whose host the builder fills
Built planted_tree(int m, int levels) {
    RoundTreeParams prm;
    for (std::uint64_t seed = 1; seed < 50; ++seed) {
        try {
            auto ph = plant_round_tree_host(m, 16, prm, levels, seed);
            auto t = build_round_tree(ph.host, prm, levels);
            return {ph, t};
        } catch (const ConstructionObstructed&) {
        }
    }
    FAIL("no planted seed built");
    return {};
}

std::vector<int> outer_vertices(const RoundTree& t, const Sector& s) {
    std::vector<int> vs{t.tail(s.outer.front())};
    for (int d : s.outer) vs.push_back(t.head(d));
    return vs;
}

}  // namespace

TEST_CASE("init round tree") {
    auto p = surface();
    auto t = init_round_tree(p, small_params());
    CHECK(t.cells.size() == 1);
    CHECK(t.cells[0].darts.size() == 8);
    CHECK(t.cells[0].word == p.relators[0]);
    auto vs = t.cell_vertices(0);
    CHECK(std::binary_search(vs.begin(), vs.end(), t.base));
    CHECK(check_round_tree_axioms(t).all_pass());
    Presentation empty;
    empty.m = 2;
    empty.l = 8;
    CHECK_THROWS_AS(init_round_tree(empty, small_params()), DomainError);
}

TEST_CASE("round tree parameter validation") {
    auto p = surface();
    RoundTreeParams bad = small_params();
    bad.V = 1;
    CHECK_THROWS_AS(init_round_tree(p, bad), DomainError);
    bad = small_params();
    bad.ext_len = 3;
    bad.seg_len = 3;
    CHECK_THROWS_AS(init_round_tree(p, bad), DomainError);
    bad = small_params();
    bad.strict_lengths = true;
    CHECK_THROWS_AS(init_round_tree(p, bad), DomainError);
    auto sp = sample_presentation(2, 64, 0, 3);
    RoundTreeParams ok;
    ok.ext_offset = 2;
    ok.ext_len = 2;
    ok.seg_len = 4;
    ok.strict_lengths = true;
    CHECK_NOTHROW(init_round_tree(sp, ok));
    auto sp40 = sample_presentation(2, 40, 0, 3);
    CHECK_THROWS_AS(init_round_tree(sp40, ok), DomainError);
}

TEST_CASE("density for count") {
    for (long long n : {1LL, 2LL, 3LL, 27LL, 77LL, 500LL}) {
        auto d = density_for_count(2, 16, n);
        CHECK(relator_count(2, 16, d) == n);
    }
}

TEST_CASE("density-model host at toy parameters is obstructed cleanly") {
    RoundTreeParams prm;
    int obstructed = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto p = sample_presentation(2, 16, mpq_class(1, 16), seed);
        try {
            build_round_tree(p, prm, 3);
        } catch (const ConstructionObstructed& e) {
            ++obstructed;
            CHECK((e.kind() == "construction-obstructed" || e.kind() == "bracket-unfillable"));
            CHECK(std::string(e.what()).find("sector") != std::string::npos);
        }
    }
    CHECK(obstructed == 5);
}

TEST_CASE("planted host builds and satisfies the axioms after each level") {
    for (int m : {2, 3}) {
        auto b = planted_tree(m, 3);
        const auto& prm = b.tree.params;
        RoundTree t = init_round_tree(b.planted.host, prm);
        for (int n = 0; n < 3; ++n) {
            t = grow_level(t);
            auto rep = check_round_tree_axioms(t);
            INFO(rep.to_json().dump());
            CHECK(rep.all_pass());
        }
        CHECK(t.cells.size() == b.tree.cells.size());
        // V branches per partition point
        auto x = extension_words(t, prm.k());
        for (const auto& pp : t.partition_points) CHECK(x.per_vertex.at(pp.vertex).size() == static_cast<std::size_t>(prm.V));
        CHECK(x.max_per_vertex <= static_cast<std::size_t>(prm.V));
        CHECK(x.words.size() <= x.classes * static_cast<std::size_t>(prm.V));
        CHECK(x.uniform);
        // bracket shape and arithmetic
        for (const auto& br : t.brackets) {
            CHECK(static_cast<int>(br.label.size()) == 2 * prm.k() + br.segment_length);
            CHECK(br.segment_length <= prm.seg_len);
            CHECK(static_cast<int>(br.label.size()) <= 2 * prm.k() + prm.seg_len);
            const auto& cell = t.cells[static_cast<std::size_t>(br.cell)];
            CHECK(std::equal(br.label.begin(), br.label.end(), cell.word.begin()));
            CHECK(br.path.front() == br.v1);
            CHECK(br.path.back() == br.v2);
            CHECK(br.path[static_cast<std::size_t>(prm.k())] == br.p1);
            CHECK(br.path[static_cast<std::size_t>(prm.k() + br.segment_length)] == br.p2);
            // the cell meets the old complex exactly along p
            int old = 0;
            for (int v : t.cell_vertices(br.cell)) old += t.vertex_level[static_cast<std::size_t>(v)] < br.level;
            CHECK(old == br.segment_length + 1);
        }
        // every cell word is a host relator up to rotation and inversion
        for (const auto& c : t.cells) {
            const Word& r = b.planted.host.relators[static_cast<std::size_t>(c.relator)];
            CHECK((least_rotation(c.word) == least_rotation(r) || least_rotation(c.word) == least_rotation(inverse(r))));
        }
        auto j = t.to_json();
        CHECK(j["levels"].size() == 4);
        CHECK(j["brackets"].size() == t.brackets.size());
    }
}

TEST_CASE("corrupted trees trip the detectors") {
    auto b = planted_tree(2, 2);
    const RoundTree& t = b.tree;
    REQUIRE(check_round_tree_axioms(t).all_pass());

    RoundTree c1 = t;
    std::size_t other = 1;
    while (c1.brackets[other].label == c1.brackets[0].label) ++other;
    c1.brackets[other].label = c1.brackets[0].label;
    auto r1 = check_round_tree_axioms(c1);
    CHECK(!r1.get("bracket-consistency").pass);
    CHECK(r1.get("bracket-consistency").witness.find("share label") != std::string::npos);

    RoundTree c2 = t;
    for (int q = 0; q <= c2.params.V * c2.params.H; ++q) {
        int v = c2.num_vertices();
        c2.vertex_level.push_back(1);
        c2.edges.push_back({c2.base, v, 0, 1});
        RTCell cell;
        cell.level = 1;
        int e = static_cast<int>(c2.edges.size() - 1);
        cell.darts = {2 * e, 2 * e + 1};
        c2.cells.push_back(cell);
    }
    auto r2 = check_round_tree_axioms(c2);
    CHECK(!r2.get("branching").pass);
    CHECK(r2.get("branching").witness.find("cell 0") != std::string::npos);

    RoundTree c3 = t;
    RTCell extra = c3.cells[0];
    c3.cells.push_back(extra);
    CHECK(!check_round_tree_axioms(c3).get("initial-cell").pass);

    RoundTree c4 = t;
    auto& ch = c4.extensions.begin()->second;
    (void)ch;
    // a third branch at one partition point
    const auto& pp = c4.partition_points.front();
    int v = c4.num_vertices();
    c4.vertex_level.push_back(1);
    c4.edges.push_back({pp.vertex, v, 0, 1});
    int prev = v;
    for (int q = 1; q < c4.params.k(); ++q) {
        int w = c4.num_vertices();
        c4.vertex_level.push_back(1);
        c4.edges.push_back({prev, w, 2, 1});
        prev = w;
    }
    CHECK(!check_round_tree_axioms(c4).get("extension-cap").pass);
}

TEST_CASE("emanating words") {
    auto b = planted_tree(2, 3);
    const RoundTree& t = b.tree;
    auto dist = t.distances(t.base);
    auto inc = t.incidence();
    int D = max_emanating_depth(t);
    CHECK_THROWS_AS(enumerate_emanating(t, D + 1), DomainError);
    CHECK_THROWS_AS(enumerate_emanating(t, 0), DomainError);
    auto e1 = enumerate_emanating(t, 1);
    std::set<Word> at_base;
    for (int d : inc[static_cast<std::size_t>(t.base)]) at_base.insert(Word{t.dart_label(d)});
    for (const auto& w : e1.words) CHECK(at_base.count(w) == 1);
    CHECK(e1.words.size() <= inc[static_cast<std::size_t>(t.base)].size());
    for (int k = 1; k <= D; ++k) {
        auto e = enumerate_emanating(t, k);
        CHECK(static_cast<double>(e.words.size()) <= e.path_count);
        CHECK(e.dominated);
        CHECK(e.log_size <= e.bound_log + 1e-9);
        // depth-first oracle over distance-increasing walks from the base
        std::set<Word> oracle;
        Word lab;
        std::function<void(int)> dfs = [&](int v) {
            if (static_cast<int>(lab.size()) == k) {
                oracle.insert(reduce(lab));
                return;
            }
            for (int d : inc[static_cast<std::size_t>(v)])
                if (dist[static_cast<std::size_t>(t.head(d))] == dist[static_cast<std::size_t>(v)] + 1) {
                    lab.push_back(t.dart_label(d));
                    dfs(t.head(d));
                    lab.pop_back();
                }
        };
        dfs(t.base);
        CHECK(oracle == e.words);
        auto s = enumerate_emanating(t, k, EmanatingMode::Subpath);
        CHECK(std::includes(s.words.begin(), s.words.end(), e.words.begin(), e.words.end()));
        CHECK(static_cast<double>(s.words.size()) <= s.path_count);
    }
}

TEST_CASE("extension words need a grown level") {
    auto t = init_round_tree(surface(), small_params());
    CHECK_THROWS_AS(extension_words(t, 1), DomainError);
}

TEST_CASE("geodesic probe on a verified host") {
    auto p = surface();
    auto t = init_round_tree(p, small_params());
    std::vector<int> path{0, 1, 2, 3, 4};
    auto r1 = local_geodesic_probe(t, path, 1, p);
    CHECK(r1.verdict == ProbeVerdict::Pass);
    auto r4 = local_geodesic_probe(t, path, 4, p);
    CHECK(r4.verdict == ProbeVerdict::Pass);
    CHECK(r4.certified);
    // five letters of the relator are not geodesic
    auto r5 = local_geodesic_probe(t, {0, 1, 2, 3, 4, 5}, 5, p);
    CHECK(r5.verdict == ProbeVerdict::Violation);
    CHECK(r5.violation_distance == 3);
    CHECK_THROWS_AS(local_geodesic_probe(t, {0, 2}, 1, p), MalformedInput);
    auto other = Presentation::from_relators(4, 8, 0, {W("acACbdBD")});
    CHECK_THROWS_AS(local_geodesic_probe(t, path, 2, other), PreconditionError);
}

TEST_CASE("distortion probe on a verified host") {
    auto p = surface();
    auto t = init_round_tree(p, small_params());
    auto a = distortion_probe(t, p, 4, 40, 9);
    CHECK(a.certified == 40);
    CHECK(a.max_ratio == doctest::Approx(1.0));
    for (const auto& s : a.samples) CHECK(s.ratio >= 1.0);
    auto b = distortion_probe(t, p, 4, 40, 9);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.to_csv().rfind("p,q,rho_a", 0) == 0);
}

TEST_CASE("planted shortcut is reported") {
    auto b = planted_tree(2, 3);
    const RoundTree& t = b.tree;
    const Presentation& host = b.planted.host;
    auto dist = t.distances(t.base);
    auto inc = t.incidence();
    int far = static_cast<int>(std::find(dist.begin(), dist.end(), 9) - dist.begin());
    REQUIRE(far < t.num_vertices());
    std::vector<int> path{far};
    while (path.back() != t.base) {
        int v = path.back(), nx = -1;
        for (int d : inc[static_cast<std::size_t>(v)])
            if (dist[static_cast<std::size_t>(t.head(d))] == dist[static_cast<std::size_t>(v)] - 1) nx = t.head(d);
        REQUIRE(nx >= 0);
        path.push_back(nx);
    }
    std::reverse(path.begin(), path.end());
    Word w = t.path_label(path);
    REQUIRE(w.size() == 9);
    Rng rng(4);
    Word extra;
    for (;;) {
        Word tail = sample_cyclically_reduced(2, 7, rng);
        extra = w;
        extra.insert(extra.end(), tail.begin(), tail.end());
        if (is_cyclically_reduced(extra)) break;
    }
    auto rels = host.relators;
    rels.push_back(extra);
    auto target = Presentation::from_relators(2, 16, density_for_count(2, 16, static_cast<long long>(rels.size())), rels, 1,
                                              fingerprint(host));
    auto r = local_geodesic_probe(t, path, 9, target);
    CHECK(r.verdict == ProbeVerdict::Violation);
    CHECK(r.violation_distance <= 7);
    CHECK(!r.certified);
    BallOptions bo;
    bo.verified = false;
    CHECK(distance(target, r.violation_word, bo) == r.violation_distance);
    CHECK_THROWS_WITH_AS(distortion_probe(t, host, 3, 10, 1), "no sampled pair had a certified target distance", Error);
}
