#pragma once

#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "gromov/diagrams.hpp"

namespace gromov {

struct BoundReport {
    std::string name;
    double value_log = 0;  // log base (2m-1)
    double approx = 0;     // (2m-1)^value_log, may be inf
    std::optional<mpq_class> value;
    nlohmann::json inputs;
    nlohmann::json to_json() const;
};

struct InductiveBound {
    int i = 0;
    double p_log = 0, P_log = 0;
    mpq_class p_exact;  // always rational
    std::optional<mpq_class> P_exact;
};

std::vector<InductiveBound> inductive_fill_bounds(const ConstraintReport& report, int m, int l, const mpq_class& d);

BoundReport rule_out_bound(int m, int l, const mpq_class& d);

struct FillProbability {
    std::optional<mpq_class> exact;
    double estimate = 0;
    long long trials = 0;
    long long successes = 0;
    double ci_low = 0, ci_high = 1;
    nlohmann::json to_json() const;
};

inline constexpr double kWilsonZ99 = 2.5758293035489004;
std::pair<double, double> wilson_interval(long long successes, long long trials, double z = kWilsonZ99);

inline constexpr long long kDefaultTupleBudget = 10'000'000;
// p_i for relators 1..upto (0 = all), over uniformly random cyclically reduced words
FillProbability exact_fillability(const Diagram& dg, int m, int l, int upto = 0,
                                  long long budget = kDefaultTupleBudget);
FillProbability mc_fillability(const Diagram& dg, int m, int l, const mpq_class& d, long long trials,
                               std::uint64_t seed, int jobs = 1);

BoundReport emanating_bound(double k, int m, int l, double d, double beta, double H, double epsilon);

struct TransferParams {
    mpq_class d_t, epsilon, d_s, beta, eta, H;
    bool d_s_below_1_18 = false;
    bool H_above_2_over_d_s = false;
    nlohmann::json to_json() const;
};
TransferParams transfer_params(const mpq_class& d_t);

struct ConfdimBounds {
    BoundReport lower, upper, linear_lower;
};
inline constexpr double kDefaultConfdimC = 1e17;
ConfdimBounds confdim_bounds(int m, int l, double d, double C = kDefaultConfdimC);
double roundtree_lower(double V, double H);

// log2 of Q = 2^(2C) N P
double q_evaluator_log2(double C, double N, double P);

mpq_class hyperbolicity_delta_bound(int l, const mpq_class& d);

}  // namespace gromov
