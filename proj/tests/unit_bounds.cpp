#include <doctest.h>

#include <cmath>

#include "gromov/bounds.hpp"
#include "gromov/errors.hpp"
#include "gromov/model.hpp"

using namespace gromov;

namespace {
Diagram two_faces(int l, int j) {
    std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>> g;
    for (int i = 0; i < j; ++i) g.push_back({{0, i}, {1, j - 1 - i}});
    return glue_polygons(2, l, g);
}
}  // namespace

TEST_CASE("inductive bounds examples") {
    Diagram one = glue_polygons(1, 5, {});
    for (int e : {0, 1, 2}) one.restrictions[e] = parse_letter('a');
    auto b = inductive_fill_bounds(belonging(one), 2, 5, mpq_class(1, 4));
    REQUIRE(b.size() == 1);
    CHECK(b[0].p_exact == mpq_class(4, 27));
    CHECK(std::fabs(std::pow(3.0, b[0].p_log) - 4.0 / 27) < 1e-12);

    Diagram two = two_faces(4, 2);
    two.faces[1].bears = 2;
    two.faces[0].orientation = -1;
    auto rep = belonging(two);
    auto bb = inductive_fill_bounds(rep, 2, 4, mpq_class(1, 4));
    REQUIRE(bb.size() == 2);
    CHECK(bb[0].p_exact == 4);
    CHECK(bb[1].p_exact == mpq_class(16, 9));
    REQUIRE(bb[1].P_exact);
    CHECK(*bb[1].P_exact == mpq_class(16, 9) * 9);

    Diagram free2 = glue_polygons(1, 4, {});
    auto fb = inductive_fill_bounds(belonging(free2), 2, 4, mpq_class(1, 3));
    CHECK(fb[0].p_exact == 4);
    CHECK_FALSE(fb[0].P_exact.has_value());
}

TEST_CASE("rule-out bound") {
    auto a = rule_out_bound(2, 8, mpq_class(1, 4));
    REQUIRE(a.value);
    CHECK(*a.value == mpq_class(4, 9));
    auto b = rule_out_bound(2, 4, mpq_class(1, 4));
    CHECK(*b.value == mpq_class(4, 3));
    double prev = 1e300;
    for (int l = 2; l < 60; l += 2) {
        auto r = rule_out_bound(3, l, mpq_class(1, 3));
        CHECK(r.value_log < prev);
        prev = r.value_log;
        if (r.value) CHECK(std::fabs(r.value->get_d() - std::pow(5.0, r.value_log)) <= 1e-9 * r.value->get_d());
    }
    CHECK_THROWS_AS(rule_out_bound(2, 8, mpq_class(1, 2)), DomainError);
}

TEST_CASE("exact fillability examples") {
    Diagram one = glue_polygons(1, 3, {});
    CHECK(*exact_fillability(one, 2, 3).exact == 1);
    one.restrictions[0] = parse_letter('a');
    CHECK(*exact_fillability(one, 2, 3).exact == mpq_class(1, 4));
    Diagram tie = two_faces(4, 1);
    CHECK(*exact_fillability(tie, 2, 4).exact == 0);
    CHECK_THROWS_AS(exact_fillability(two_faces(10, 1), 2, 10, 0, 1000), BudgetExceeded);
}

TEST_CASE("exact p_i dominated by inductive bounds on enumerated diagrams") {
    auto res = enumerate_diagrams(2, 4);
    for (const auto& dg0 : res.diagrams) {
        Diagram dg = dg0;
        Topology t = require_valid(dg);
        int c = 0;
        for (std::size_t e = 0; e < dg.edges.size(); ++e)
            if (t.on_boundary[e] && c++ % 2 == 0) dg.restrictions[static_cast<int>(e)] = static_cast<Letter>(e % 4);
        auto bounds = inductive_fill_bounds(belonging(dg), 2, 4, mpq_class(1, 4));
        for (int i = 1; i <= dg.relator_count(); ++i) {
            auto p = exact_fillability(dg, 2, 4, i);
            CHECK(*p.exact <= bounds[static_cast<std::size_t>(i - 1)].p_exact);
        }
    }
}

TEST_CASE("monte carlo fillability") {
    Diagram one = glue_polygons(1, 3, {});
    one.restrictions[0] = parse_letter('a');
    one.restrictions[1] = parse_letter('b');
    auto ex = exact_fillability(one, 2, 3);
    CHECK(*ex.exact == mpq_class(1, 14));
    // count = 1 at d = 1/8 with l = 3
    REQUIRE(relator_count(2, 3, mpq_class(1, 8)) == 1);
    auto mc = mc_fillability(one, 2, 3, mpq_class(1, 8), 20000, 7, 4);
    CHECK(mc.ci_low <= ex.exact->get_d());
    CHECK(ex.exact->get_d() <= mc.ci_high);
    auto mc1 = mc_fillability(one, 2, 3, mpq_class(1, 8), 20000, 7, 1);
    CHECK(mc1.successes == mc.successes);
    CHECK_THROWS_AS(mc_fillability(one, 2, 3, mpq_class(1, 8), 0, 1), DomainError);

    int covered = 0;
    for (int rep = 0; rep < 100; ++rep) {
        auto r = mc_fillability(one, 2, 3, mpq_class(1, 8), 400, 1000 + static_cast<std::uint64_t>(rep));
        if (r.ci_low <= ex.exact->get_d() && ex.exact->get_d() <= r.ci_high) ++covered;
    }
    CHECK(covered >= 97);
}

TEST_CASE("emanating bound") {
    auto a = emanating_bound(4, 2, 10, 0.4, 0.5, 100, 0.1);
    double expect = std::log(50) / std::log(3) + 40 * std::log(4) / std::log(3) + 8.4 + 16;
    CHECK(std::fabs(a.value_log - expect) < 1e-9 * expect);
    double dl = 0.3 * 20;
    auto b = emanating_bound(dl, 2, 20, 0.3, 0, 1e300, 0);
    double e2 = std::log(200) / std::log(3) + 40 * std::log(dl) / std::log(3) + 4 * dl;
    CHECK(std::fabs(b.value_log - e2) < 1e-9 * e2);
    double prev = -1e300;
    for (double k = 1; k < 50; k += 1) {
        double v = emanating_bound(k, 3, 30, 0.2, 0.1, 50, 0.05).value_log;
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("transfer parameters") {
    auto t = transfer_params(mpq_class(1, 4));
    CHECK(t.epsilon == mpq_class(1, 4));
    CHECK(t.d_s == mpq_class(1, 640000000));
    CHECK(t.beta == mpq_class(1, 160000000));
    CHECK(t.eta == mpq_class(mpz_class(1), mpz_class("25600000000")));
    CHECK(t.H == mpq_class(mpz_class("4096000000000000000")));
    CHECK(t.eta == t.d_s / 40);
    for (int i = 0; i < 50; ++i) {
        mpq_class d = mpq_class(1, 8) + mpq_class(3, 8) * mpq_class(i, 50);
        d.canonicalize();
        auto p = transfer_params(d);
        CHECK(p.d_s_below_1_18);
        CHECK(p.H_above_2_over_d_s);
    }
    CHECK_THROWS_AS(transfer_params(mpq_class(1, 10)), DomainError);
    CHECK_THROWS_AS(transfer_params(mpq_class(1, 2)), DomainError);
}

TEST_CASE("confdim and round-tree bounds") {
    CHECK(roundtree_lower(7, 7) == doctest::Approx(2.0));
    CHECK(roundtree_lower(4, 2) == doctest::Approx(3.0));
    auto a = confdim_bounds(2, 100, 0.2), b = confdim_bounds(2, 200, 0.2);
    CHECK(b.lower.approx / a.lower.approx == doctest::Approx(2.0));
    CHECK(b.upper.approx / a.upper.approx == doctest::Approx(2.0));
    CHECK(a.lower.approx < a.upper.approx);
    CHECK_THROWS_AS(confdim_bounds(2, 10, 0.5), DomainError);
    CHECK_THROWS_AS(roundtree_lower(1, 3), DomainError);
    CHECK(q_evaluator_log2(3, 8, 2) == doctest::Approx(10.0));
}

TEST_CASE("hyperbolicity constant") {
    CHECK(hyperbolicity_delta_bound(100, mpq_class(1, 4)) == 800);
    CHECK(hyperbolicity_delta_bound(10, 0) == 40);
    mpq_class prev = 0;
    for (int i = 0; i < 49; ++i) {
        auto v = hyperbolicity_delta_bound(12, mpq_class(i, 100));
        CHECK(v > prev);
        prev = v;
    }
    CHECK_THROWS_AS(hyperbolicity_delta_bound(10, mpq_class(1, 2)), DomainError);
}
