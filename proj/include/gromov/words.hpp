#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "gromov/rng.hpp"

namespace gromov {

// letter code = 2*generator + (1 if inverse); order a < A < b < B < ...
using Letter = std::uint8_t;
using Word = std::vector<Letter>;

inline constexpr Letter inv(Letter x) { return static_cast<Letter>(x ^ 1); }

struct Alphabet {
    int m = 2;
    explicit Alphabet(int m_);
    int size() const { return 2 * m; }
    bool contains(Letter x) const { return x < 2 * m; }
};

char letter_char(Letter x);
Letter parse_letter(char c);

// "1" and "" both give the empty word
Word parse_word(const std::string& s);
Word parse_word(const std::string& s, const Alphabet& alph);
std::string to_string(const Word& w);

Word inverse(const Word& w);
Word rotate(const Word& w, std::size_t k);
Word concat(const Word& a, const Word& b);
bool is_reduced(const Word& w);
bool is_cyclically_reduced(const Word& w);
Word reduce(const Word& w);
void check_alphabet(const Word& w, const Alphabet& alph);

// lexicographic on codes, shorter first
bool shortlex_less(const Word& a, const Word& b);

struct CyclicWord {
    Word representative;
    std::size_t canonical_rotation = 0;  // rotation index of the least rotation
    Word canonical() const { return rotate(representative, canonical_rotation); }
};

std::size_t least_rotation(const Word& w);
CyclicWord cyclically_reduce(const Word& w);
CyclicWord make_cyclic(const Word& w);  // throws unless cyclically reduced

mpz_class rivin_count(int m, int l);

inline constexpr long long kDefaultEnumerationBudget = 10'000'000;
std::vector<Word> enumerate_cyclically_reduced(int m, int l,
                                               long long budget = kDefaultEnumerationBudget);

Word sample_cyclically_reduced(int m, int l, Rng& rng);

struct PieceWitness {
    std::size_t relator_a = 0, relator_b = 0;
    std::size_t position_a = 0, position_b = 0;
    bool inverse_a = false, inverse_b = false;
    Word subword;
};

struct PieceReport {
    std::size_t max_piece_length = 0;
    bool has_witness = false;
    PieceWitness witness;
    bool relator_coincidence = false;  // full-length match between distinct slots
    std::map<std::string, bool> lambda_threshold_passed;  // keyed "p/q"

    // strict test max_piece_length < lambda * l
    bool passes(const mpq_class& lambda, int l) const;
};

// suffix-automaton scan
PieceReport max_piece_length(const std::vector<Word>& relators);
// quadratic all-pairs scan, kept as oracle
PieceReport max_piece_length_naive(const std::vector<Word>& relators);

bool check_c_prime(const std::vector<Word>& relators, const mpq_class& lambda);
PieceReport piece_report(const std::vector<Word>& relators,
                         const std::vector<mpq_class>& lambdas);

mpq_class parse_rational(const std::string& s);  // "p/q", integer, or finite decimal
std::string rational_string(const mpq_class& q);

}  // namespace gromov
