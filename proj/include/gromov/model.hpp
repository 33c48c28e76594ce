#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "gromov/words.hpp"

namespace gromov {

inline constexpr long long kDefaultModelBudget = 1'000'000;

struct Presentation {
    int m = 2;
    int l = 1;
    mpq_class d = 0;
    std::vector<Word> relators;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> parent_fingerprint;

    // validates every invariant, including the relator count
    static Presentation from_relators(int m, int l, const mpq_class& d, std::vector<Word> relators,
                                      std::uint64_t seed = 0,
                                      std::optional<std::uint64_t> parent = std::nullopt,
                                      long long budget = kDefaultModelBudget);

    bool operator==(const Presentation& o) const {
        return m == o.m && l == o.l && d == o.d && relators == o.relators && seed == o.seed &&
               parent_fingerprint == o.parent_fingerprint;
    }
};

// relator list with no count constraint, e.g. hand-written presentations
struct RelatorSet {
    int m = 2;
    std::vector<Word> relators;
};

void check_density(const mpq_class& d);
long long relator_count(int m, int l, const mpq_class& d, long long budget = kDefaultModelBudget);

Presentation sample_presentation(int m, int l, const mpq_class& d, std::uint64_t seed,
                                 long long budget = kDefaultModelBudget);
Presentation extend_presentation(const Presentation& base, const mpq_class& d_target, std::uint64_t seed,
                                 long long budget = kDefaultModelBudget);

std::string serialize_presentation(const Presentation& p);
Presentation parse_presentation(const std::string& text, long long budget = kDefaultModelBudget);
void save_presentation(const Presentation& p, const std::string& path);
Presentation load_presentation(const std::string& path, long long budget = kDefaultModelBudget);

std::uint64_t fingerprint(const Presentation& p);
std::string hex64(std::uint64_t x);

// true when `host` relators form a prefix of `target` or target names host as parent
bool extends(const Presentation& target, const Presentation& host);

}  // namespace gromov
