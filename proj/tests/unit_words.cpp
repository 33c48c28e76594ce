#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <map>

#include "gromov/errors.hpp"
#include "gromov/words.hpp"
#include "oracles.hpp"

using namespace gromov;

namespace {
Word W(const char* s) { return parse_word(s); }
std::string S(const Word& w) { return to_string(w); }
}  // namespace

TEST_CASE("reduce examples") {
    CHECK(S(reduce(W("aA"))) == "1");
    CHECK(S(reduce(W("abBA"))) == "1");
    CHECK(S(reduce(W("abA"))) == "abA");
    CHECK_THROWS_AS(parse_word("a-b"), MalformedInput);
    CHECK_THROWS_AS(parse_word("abc", Alphabet(2)), MalformedInput);
}

TEST_CASE("reduce is idempotent and matches naive cancellation") {
    Rng rng(11);
    for (int t = 0; t < 2000; ++t) {
        Word w(rng.below(14));
        for (auto& x : w) x = static_cast<Letter>(rng.below(6));
        Word r = reduce(w);
        CHECK(is_reduced(r));
        CHECK(reduce(r) == r);
        // naive: delete the first cancelling pair until none remain
        Word n = w;
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t i = 0; i + 1 < n.size(); ++i)
                if (n[i + 1] == inv(n[i])) {
                    n.erase(n.begin() + static_cast<long>(i), n.begin() + static_cast<long>(i) + 2);
                    changed = true;
                    break;
                }
        }
        CHECK(n == r);
    }
}

TEST_CASE("cyclically_reduce examples") {
    CHECK(S(cyclically_reduce(W("Aba")).representative) == "b");
    CHECK(S(cyclically_reduce(W("ab")).representative) == "ab");
    CHECK(S(cyclically_reduce(W("aBAb")).representative) == "aBAb");
    CHECK(S(cyclically_reduce(W("bA")).canonical()) == "Ab");
}

TEST_CASE("cyclic reduction is rotation stable") {
    Rng rng(3);
    for (int t = 0; t < 300; ++t) {
        Word w = sample_cyclically_reduced(3, 1 + static_cast<int>(rng.below(9)), rng);
        Word canon = cyclically_reduce(w).canonical();
        for (std::size_t k = 0; k < w.size(); ++k) CHECK(cyclically_reduce(rotate(w, k)).canonical() == canon);
    }
}

TEST_CASE("least rotation agrees with brute force") {
    for (auto& w : oracle::all_strings(2, 6)) {
        Word best = w;
        for (std::size_t k = 0; k < w.size(); ++k) best = std::min(best, rotate(w, k));
        CHECK(rotate(w, least_rotation(w)) == best);
    }
}

TEST_CASE("rivin count") {
    CHECK(rivin_count(2, 1) == 4);
    CHECK(rivin_count(2, 2) == 12);
    CHECK(rivin_count(2, 3) == 28);
    CHECK(rivin_count(2, 4) == 84);
    for (int m = 1; m <= 3; ++m)
        for (int l = 1; l <= 7; ++l) CHECK(rivin_count(m, l) == oracle::cyc_reduced_words(m, l).size());
    mpz_class big = rivin_count(26, 200);
    CHECK(mpz_sizeinbase(big.get_mpz_t(), 10) > 300);
    CHECK_THROWS_AS(rivin_count(2, 0), DomainError);
}

TEST_CASE("enumeration") {
    auto one = enumerate_cyclically_reduced(2, 1);
    REQUIRE(one.size() == 4);
    CHECK(S(one[0]) == "a");
    CHECK(S(one[1]) == "A");
    CHECK(S(one[2]) == "b");
    CHECK(S(one[3]) == "B");
    for (int m = 2; m <= 3; ++m)
        for (int l = 1; l <= 8; ++l) {
            auto e = enumerate_cyclically_reduced(m, l);
            CHECK(rivin_count(m, l) == e.size());
            CHECK(std::is_sorted(e.begin(), e.end()));
            if (m == 2 && l <= 6) CHECK(e == oracle::cyc_reduced_words(m, l));
        }
    CHECK_THROWS_AS(enumerate_cyclically_reduced(2, 20, 1000), BudgetExceeded);
}

TEST_CASE("sampler: support and goodness of fit") {
    Rng rng(2024);
    auto support = enumerate_cyclically_reduced(2, 3);
    std::map<Word, long> hist;
    const long draws = 100000;
    for (long i = 0; i < draws; ++i) {
        Word w = sample_cyclically_reduced(2, 3, rng);
        REQUIRE(is_cyclically_reduced(w));
        ++hist[w];
    }
    CHECK(hist.size() == support.size());
    double chi = 0, expect = static_cast<double>(draws) / static_cast<double>(support.size());
    for (auto& w : support) {
        double o = static_cast<double>(hist[w]);
        chi += (o - expect) * (o - expect) / expect;
    }
    boost::math::chi_squared dist(static_cast<double>(support.size() - 1));
    CHECK(chi < boost::math::quantile(boost::math::complement(dist, 1e-3)));

    std::map<Word, long> letters;
    for (int i = 0; i < 40000; ++i) ++letters[sample_cyclically_reduced(2, 1, rng)];
    CHECK(letters.size() == 4);
    for (auto& [w, c] : letters) CHECK(std::abs(c - 10000) < 500);

    for (int l = 1; l <= 3; ++l) {
        std::map<Word, long> h;
        for (int i = 0; i < 100000; ++i) ++h[sample_cyclically_reduced(2, l, rng)];
        CHECK(h.size() == enumerate_cyclically_reduced(2, l).size());
    }
    CHECK_THROWS_AS(sample_cyclically_reduced(1, 3, rng), DomainError);
}

TEST_CASE("sampler is deterministic given the stream") {
    Rng a(77), b(77);
    for (int i = 0; i < 50; ++i) CHECK(sample_cyclically_reduced(3, 12, a) == sample_cyclically_reduced(3, 12, b));
}

TEST_CASE("piece examples") {
    auto r = max_piece_length({W("abab")});
    CHECK(r.max_piece_length == 3);
    REQUIRE(r.has_witness);
    CHECK(r.witness.subword.size() == 3);
    CHECK(r.relator_coincidence);
    CHECK(max_piece_length({W("ab")}).max_piece_length == 0);
    CHECK(max_piece_length({}).max_piece_length == 0);
    CHECK_FALSE(check_c_prime({W("abab")}, mpq_class(1, 2)));
    CHECK(check_c_prime({W("ab")}, mpq_class(1, 6)));
    CHECK(check_c_prime({}, mpq_class(1, 6)));
    CHECK_THROWS_AS(check_c_prime({W("ab"), W("abb")}, mpq_class(1, 6)), DomainError);
}

TEST_CASE("suffix automaton agrees with the quadratic scan") {
    Rng rng(99);
    for (int t = 0; t < 600; ++t) {
        int m = 2 + static_cast<int>(rng.below(2));
        int k = static_cast<int>(rng.below(5));
        bool mixed = t % 3 == 0;
        int l = 1 + static_cast<int>(rng.below(12));
        std::vector<Word> rels;
        for (int i = 0; i < k; ++i)
            rels.push_back(sample_cyclically_reduced(m, mixed ? 1 + static_cast<int>(rng.below(12)) : l, rng));
        auto fast = max_piece_length(rels);
        auto slow = max_piece_length_naive(rels);
        CHECK(fast.max_piece_length == slow.max_piece_length);
        CHECK(fast.relator_coincidence == slow.relator_coincidence);
        if (fast.max_piece_length > 0) {
            REQUIRE(fast.has_witness);
            CHECK(fast.witness.subword.size() == fast.max_piece_length);
            // the witness slots really read the subword
            auto read = [&](std::size_t rel, bool inv_, std::size_t pos) {
                Word w = inv_ ? inverse(rels[rel]) : rels[rel];
                Word out;
                for (std::size_t i = 0; i < fast.max_piece_length; ++i) out.push_back(w[(pos + i) % w.size()]);
                return out;
            };
            const auto& wt = fast.witness;
            CHECK(read(wt.relator_a, wt.inverse_a, wt.position_a) == wt.subword);
            CHECK(read(wt.relator_b, wt.inverse_b, wt.position_b) == wt.subword);
            CHECK_FALSE((wt.relator_a == wt.relator_b && wt.inverse_a == wt.inverse_b && wt.position_a == wt.position_b));
        }
    }
}

TEST_CASE("piece length invariant under inversion and rotation") {
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
        std::vector<Word> rels;
        for (int i = 0; i < 3; ++i) rels.push_back(sample_cyclically_reduced(2, 10, rng));
        auto base = max_piece_length(rels).max_piece_length;
        auto moved = rels;
        moved[0] = inverse(moved[0]);
        moved[1] = rotate(moved[1], rng.below(10));
        moved[2] = inverse(rotate(moved[2], rng.below(10)));
        CHECK(max_piece_length(moved).max_piece_length == base);
    }
}

TEST_CASE("large inputs stay fast") {
    Rng rng(8);
    std::vector<Word> rels;
    for (int i = 0; i < 40; ++i) rels.push_back(sample_cyclically_reduced(2, 300, rng));
    auto r = max_piece_length(rels);
    CHECK(r.max_piece_length > 5);
    CHECK(r.max_piece_length < 60);
}

TEST_CASE("rationals") {
    CHECK(parse_rational("0.25") == mpq_class(1, 4));
    CHECK(parse_rational("3/12") == mpq_class(1, 4));
    CHECK(parse_rational("2") == 2);
    CHECK(rational_string(parse_rational("0.1")) == "1/10");
    CHECK_THROWS_AS(parse_rational("x"), MalformedInput);
    CHECK_THROWS_AS(parse_rational("1/0"), MalformedInput);
}
