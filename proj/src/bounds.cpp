#include "gromov/bounds.hpp"

#include <cmath>
#include <thread>

#include "gromov/errors.hpp"
#include "gromov/model.hpp"

namespace gromov {

namespace {

double logb(double x, int m) { return std::log(x) / std::log(2.0 * m - 1); }

mpq_class qpow(long base, long e) {
    mpz_class b = base, r;
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), static_cast<unsigned long>(e < 0 ? -e : e));
    mpq_class q = e < 0 ? mpq_class(1) / mpq_class(r) : mpq_class(r);
    q.canonicalize();
    return q;
}

void check_m(int m) {
    if (m < 2) throw DomainError("bounds need m >= 2");
}

void check_open_half(const mpq_class& d) {
    if (d <= 0 || d >= mpq_class(1, 2)) throw DomainError("density must lie in (0, 1/2), got " + rational_string(d));
}

BoundReport make(std::string name, int m, double vlog) {
    BoundReport b;
    b.name = std::move(name);
    b.value_log = vlog;
    b.approx = std::pow(2.0 * m - 1, vlog);
    return b;
}

}  // namespace

nlohmann::json BoundReport::to_json() const {
    nlohmann::json j{{"name", name}, {"value_log", value_log}, {"approx", approx}, {"inputs", inputs}};
    j["value"] = value ? nlohmann::json(rational_string(*value)) : nlohmann::json(nullptr);
    return j;
}

std::vector<InductiveBound> inductive_fill_bounds(const ConstraintReport& report, int m, int l, const mpq_class& d) {
    check_m(m);
    check_density(d);
    std::vector<InductiveBound> out;
    const int n = static_cast<int>(report.E_relator.size());
    double plog = 0;
    mpq_class p = 1;
    for (int i = 1; i <= n; ++i) {
        int Ei = report.E_relator[static_cast<std::size_t>(i - 1)];
        plog += logb(2.0 * m, m) - Ei;
        p *= mpq_class(2 * m) * qpow(2 * m - 1, -Ei);
        p.canonicalize();
        InductiveBound b;
        b.i = i;
        b.p_log = plog;
        b.p_exact = p;
        mpq_class expo = d * i * l;
        expo.canonicalize();
        b.P_log = expo.get_d() + plog;
        if (expo.get_den() == 1 && expo.get_num().fits_slong_p()) {
            b.P_exact = qpow(2 * m - 1, expo.get_num().get_si()) * p;
            b.P_exact->canonicalize();
        }
        out.push_back(b);
    }
    return out;
}

BoundReport rule_out_bound(int m, int l, const mpq_class& d) {
    check_m(m);
    check_open_half(d);
    mpq_class expo = (d - mpq_class(1, 2)) * l;
    expo.canonicalize();
    BoundReport b = make("rule_out_bound", m, logb(2.0 * m, m) + expo.get_d());
    if (expo.get_den() == 1) b.value = mpq_class(2 * m) * qpow(2 * m - 1, expo.get_num().get_si());
    if (b.value) b.value->canonicalize();
    b.inputs = {{"m", m}, {"l", l}, {"d", rational_string(d)}};
    return b;
}

std::pair<double, double> wilson_interval(long long s, long long n, double z) {
    if (n <= 0) throw DomainError("wilson interval needs at least one trial");
    double p = static_cast<double>(s) / static_cast<double>(n), nn = static_cast<double>(n);
    double den = 1 + z * z / nn;
    double centre = (p + z * z / (2 * nn)) / den;
    double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / den;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

nlohmann::json FillProbability::to_json() const {
    nlohmann::json j{{"estimate", estimate}, {"trials", trials}, {"successes", successes},
                     {"ci_low", ci_low},     {"ci_high", ci_high}};
    j["exact"] = exact ? nlohmann::json(rational_string(*exact)) : nlohmann::json(nullptr);
    return j;
}

FillProbability exact_fillability(const Diagram& dg, int m, int l, int upto, long long budget) {
    check_m(m);
    if (dg.face_length() != l) throw DomainError("face size differs from l");
    const int n = dg.relator_count();
    const int k = upto > 0 ? std::min(upto, n) : n;
    mpz_class N = rivin_count(m, l), total;
    mpz_pow_ui(total.get_mpz_t(), N.get_mpz_t(), static_cast<unsigned long>(k));
    if (total > mpz_class(std::to_string(budget)))
        throw BudgetExceeded("exact fillability needs " + total.get_str() + " tuples, over budget " + std::to_string(budget),
                             budget);
    auto words = enumerate_cyclically_reduced(m, l);
    FillOptions opt;
    opt.mode = FillMode::Count;
    opt.upto = k;
    auto r = fill(dg, words, opt);
    FillProbability p;
    p.exact = mpq_class(mpz_class(std::to_string(r.count)), total);
    p.exact->canonicalize();
    p.estimate = p.exact->get_d();
    p.trials = static_cast<long long>(total.get_d());
    p.successes = r.count;
    p.ci_low = p.ci_high = p.estimate;
    return p;
}

FillProbability mc_fillability(const Diagram& dg, int m, int l, const mpq_class& d, long long trials,
                               std::uint64_t seed, int jobs) {
    check_m(m);
    if (trials <= 0) throw DomainError("mc_fillability needs trials >= 1");
    if (dg.face_length() != l) throw DomainError("face size differs from l");
    require_valid(dg);
    relator_count(m, l, d);
    jobs = std::max(1, jobs);
    std::vector<char> hit(static_cast<std::size_t>(trials), 0);
    auto work = [&](int w) {
        FillOptions opt;
        opt.mode = FillMode::First;
        opt.distinct = true;
        for (long long t = w; t < trials; t += jobs) {
            Rng r = Rng::derive(seed, static_cast<std::uint64_t>(t));
            auto p = sample_presentation(m, l, d, r.next());
            hit[static_cast<std::size_t>(t)] = fill(dg, p.relators, opt).fillable() ? 1 : 0;
        }
    };
    if (jobs == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    FillProbability p;
    p.trials = trials;
    for (char c : hit) p.successes += c;
    p.estimate = static_cast<double>(p.successes) / static_cast<double>(trials);
    std::tie(p.ci_low, p.ci_high) = wilson_interval(p.successes, trials);
    return p;
}

BoundReport emanating_bound(double k, int m, int l, double d, double beta, double H, double epsilon) {
    check_m(m);
    if (k <= 0 || l <= 0 || d <= 0 || beta < 0 || H <= 0 || epsilon < 0)
        throw DomainError("emanating_bound needs positive parameters");
    if (d >= 0.5) throw DomainError("emanating_bound needs d < 1/2");
    double vlog = logb(static_cast<double>(l) * l / 2.0, m) + (40.0 * k / (d * l)) * logb(k, m) +
                  (2 * beta + 40.0 / (d * H) + epsilon) * k + 4 * d * l;
    BoundReport b = make("emanating_bound", m, vlog);
    b.inputs = {{"k", k}, {"m", m}, {"l", l}, {"d", d}, {"beta", beta}, {"H", H}, {"epsilon", epsilon}};
    return b;
}

nlohmann::json TransferParams::to_json() const {
    return {{"d_t", rational_string(d_t)},       {"epsilon", rational_string(epsilon)},
            {"d_s", rational_string(d_s)},       {"beta", rational_string(beta)},
            {"eta", rational_string(eta)},       {"H", rational_string(H)},
            {"d_s_below_1_18", d_s_below_1_18}, {"H_above_2_over_d_s", H_above_2_over_d_s}};
}

TransferParams transfer_params(const mpq_class& d_t) {
    if (d_t < mpq_class(1, 8) || d_t >= mpq_class(1, 2))
        throw DomainError("transfer parameters need 1/8 <= d_t < 1/2, got " + rational_string(d_t));
    TransferParams t;
    t.d_t = d_t;
    t.epsilon = mpq_class(1, 2) - d_t;
    t.epsilon.canonicalize();
    const mpq_class e = t.epsilon;
    const mpq_class e2 = e * e, e3 = e2 * e, e5 = e3 * e2;
    t.d_s = e3 / mpq_class(10000000);
    t.beta = e2 / mpq_class(10000000);
    t.eta = e3 / mpq_class(400000000);
    t.H = mpq_class(mpz_class("4000000000000000")) / e5;
    for (auto* q : {&t.d_s, &t.beta, &t.eta, &t.H}) q->canonicalize();
    t.d_s_below_1_18 = t.d_s < mpq_class(1, 18);
    t.H_above_2_over_d_s = t.H > mpq_class(2) / t.d_s;
    return t;
}

ConfdimBounds confdim_bounds(int m, int l, double d, double C) {
    check_m(m);
    if (!(d > 0 && d < 0.5)) throw DomainError("confdim bounds need 0 < d < 1/2");
    if (C <= 0) throw DomainError("constant C must be positive");
    double a = std::log(d * (0.5 - d)), b = std::log(d);
    if (a == 0 || b == 0) throw DomainError("degenerate logarithm in confdim bound");
    const double lg = std::log(2.0 * m - 1);
    ConfdimBounds r;
    double low = d * std::pow(1 - 2 * d, 5) * l / (C * std::fabs(a)) * lg;
    double up = C * d * l / ((1 - 2 * d) * std::fabs(b)) * lg;
    auto fill_in = [&](BoundReport& br, const char* name, double v) {
        br.name = name;
        br.approx = v;
        br.value_log = std::log(v) / lg;
        br.inputs = {{"m", m}, {"l", l}, {"d", d}, {"C", C}};
    };
    fill_in(r.lower, "confdim_lower", low);
    fill_in(r.upper, "confdim_upper", up);
    if (d >= 0.125) {
        double lin = std::pow(1 - 2 * d, 5) * l / (C * std::fabs(std::log(0.5 - d))) * lg;
        fill_in(r.linear_lower, "confdim_linear_lower", lin);
    } else {
        r.linear_lower.name = "confdim_linear_lower";
        r.linear_lower.inputs = {{"note", "requires d >= 1/8"}};
    }
    return r;
}

double roundtree_lower(double V, double H) {
    if (V < 2 || H < 2) throw DomainError("roundtree_lower needs V, H >= 2");
    return 1 + std::log(V) / std::log(H);
}

double q_evaluator_log2(double C, double N, double P) {
    if (C < 0 || N <= 0 || P <= 0) throw DomainError("Q evaluator needs C >= 0 and N, P > 0");
    return 2 * C + std::log2(N) + std::log2(P);
}

mpq_class hyperbolicity_delta_bound(int l, const mpq_class& d) {
    if (l < 1) throw DomainError("l must be positive");
    if (d < 0 || d >= mpq_class(1, 2)) throw DomainError("hyperbolicity bound needs 0 <= d < 1/2");
    mpq_class r = mpq_class(4 * l) / (1 - 2 * d);
    r.canonicalize();
    return r;
}

}  // namespace gromov
