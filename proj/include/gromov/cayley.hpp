#pragma once

#include <string>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "gromov/model.hpp"
#include "gromov/words.hpp"

namespace gromov {

// relators verified C'(1/6) once; Dehn's algorithm on top
class DehnSolver {
public:
    DehnSolver(int m, const std::vector<Word>& relators);
    explicit DehnSolver(const Presentation& p) : DehnSolver(p.m, p.relators) {}
    Word reduce(const Word& w) const;
    bool is_trivial(const Word& w) const { return reduce(w).empty(); }
    int m() const { return m_; }

private:
    int m_;
    std::size_t window_ = 0;
    std::vector<std::pair<std::string, Word>> table_;  // sorted by key
    const Word* lookup(const Word& w, std::size_t at) const;
};

Word dehn_reduce(const Word& w, const Presentation& p);

// cached C'(1/6) verdict for a relator list
bool verified_small_cancellation(const std::vector<Word>& relators);

inline constexpr long long kDefaultBallBudget = 1'000'000;

struct BallOptions {
    long long vertex_budget = kDefaultBallBudget;
    bool verified = true;  // false: unverified relator-closure mode
};

struct CayleyBall {
    int m = 2;
    int radius = 0;
    bool verified = true;
    bool warning = false;      // distances are only upper bounds
    bool inconsistent = false;  // unverified closure met a conflict
    std::vector<Word> words;   // least geodesic word per vertex
    std::vector<int> dist;
    std::vector<int> adj;      // vertex * 2m + letter, -1 outside

    std::size_t size() const { return words.size(); }
    int neighbour(int v, Letter s) const { return adj[static_cast<std::size_t>(v) * static_cast<std::size_t>(2 * m) + s]; }
    // vertex reached by reading w from the identity, -1 if it leaves the ball
    int trace(const Word& w) const;
    std::vector<long long> sphere_sizes() const;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

CayleyBall cayley_ball(int m, const std::vector<Word>& relators, int radius, const BallOptions& opt = {});
CayleyBall cayley_ball(const Presentation& p, int radius, const BallOptions& opt = {});

int distance(const Presentation& p, const Word& w, const BallOptions& opt = {});
int distance(int m, const std::vector<Word>& relators, const Word& w, const BallOptions& opt = {});
bool is_geodesic(const Presentation& p, const Word& w, const BallOptions& opt = {});

struct GenericityCell {
    mpq_class d;
    long long relators = 0;
    long long trials = 0;
    long long passes = 0;
    double probability = 0;
    double ci_low = 0, ci_high = 0;
    bool empty = false;
};

struct GenericityScanReport {
    int m = 2, l = 1;
    mpq_class lambda;
    std::vector<GenericityCell> cells;
    nlohmann::json to_json() const;
};

GenericityScanReport cprime_genericity_scan(int m, int l, const mpq_class& lambda, const std::vector<mpq_class>& d_grid,
                                            long long trials, std::uint64_t seed, int jobs = 1);

}  // namespace gromov
