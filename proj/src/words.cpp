#include "gromov/words.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <unordered_set>

#include "gromov/errors.hpp"

namespace gromov {

Alphabet::Alphabet(int m_) : m(m_) {
    if (m < 1 || m > 26) throw DomainError("alphabet size m must be in [1, 26], got " + std::to_string(m));
}

char letter_char(Letter x) {
    if (x >= 52) throw MalformedInput("letter code out of range");
    char base = static_cast<char>('a' + (x >> 1));
    return (x & 1) ? static_cast<char>(base - 'a' + 'A') : base;
}

Letter parse_letter(char c) {
    if (c >= 'a' && c <= 'z') return static_cast<Letter>(2 * (c - 'a'));
    if (c >= 'A' && c <= 'Z') return static_cast<Letter>(2 * (c - 'A') + 1);
    throw MalformedInput(std::string("not a letter: '") + c + "'");
}

Word parse_word(const std::string& s) {
    Word w;
    if (s == "1") return w;
    w.reserve(s.size());
    for (char c : s) w.push_back(parse_letter(c));
    return w;
}

void check_alphabet(const Word& w, const Alphabet& alph) {
    for (Letter x : w)
        if (!alph.contains(x))
            throw MalformedInput(std::string("letter '") + letter_char(x) + "' outside alphabet of rank " +
                                 std::to_string(alph.m));
}

Word parse_word(const std::string& s, const Alphabet& alph) {
    Word w = parse_word(s);
    check_alphabet(w, alph);
    return w;
}

std::string to_string(const Word& w) {
    if (w.empty()) return "1";
    std::string s;
    s.reserve(w.size());
    for (Letter x : w) s.push_back(letter_char(x));
    return s;
}

Word inverse(const Word& w) {
    Word r(w.rbegin(), w.rend());
    for (auto& x : r) x = inv(x);
    return r;
}

Word rotate(const Word& w, std::size_t k) {
    if (w.empty()) return w;
    k %= w.size();
    Word r;
    r.reserve(w.size());
    r.insert(r.end(), w.begin() + static_cast<long>(k), w.end());
    r.insert(r.end(), w.begin(), w.begin() + static_cast<long>(k));
    return r;
}

Word concat(const Word& a, const Word& b) {
    Word r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

bool is_reduced(const Word& w) {
    for (std::size_t i = 1; i < w.size(); ++i)
        if (w[i] == inv(w[i - 1])) return false;
    return true;
}

bool is_cyclically_reduced(const Word& w) {
    if (!is_reduced(w)) return false;
    return w.size() <= 1 || w.back() != inv(w.front());
}

Word reduce(const Word& w) {
    Word r;
    r.reserve(w.size());
    for (Letter x : w) {
        if (!r.empty() && r.back() == inv(x))
            r.pop_back();
        else
            r.push_back(x);
    }
    return r;
}

bool shortlex_less(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

std::size_t least_rotation(const Word& w) {
    std::size_t n = w.size();
    if (n == 0) return 0;
    std::size_t i = 0, j = 1, k = 0;
    while (i < n && j < n && k < n) {
        Letter a = w[(i + k) % n], b = w[(j + k) % n];
        if (a == b) {
            ++k;
            continue;
        }
        if (a > b)
            i += k + 1;
        else
            j += k + 1;
        if (i == j) ++j;
        k = 0;
    }
    return std::min(i, j);
}

CyclicWord cyclically_reduce(const Word& w) {
    Word r = reduce(w);
    std::size_t lo = 0, hi = r.size();
    while (hi - lo >= 2 && r[hi - 1] == inv(r[lo])) {
        ++lo;
        --hi;
    }
    CyclicWord c;
    c.representative.assign(r.begin() + static_cast<long>(lo), r.begin() + static_cast<long>(hi));
    c.canonical_rotation = least_rotation(c.representative);
    return c;
}

CyclicWord make_cyclic(const Word& w) {
    if (!is_cyclically_reduced(w)) throw MalformedInput("word " + to_string(w) + " is not cyclically reduced");
    return CyclicWord{w, least_rotation(w)};
}

mpz_class rivin_count(int m, int l) {
    if (m < 1 || l < 1) throw DomainError("rivin_count needs m >= 1 and l >= 1");
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(2 * m - 1), static_cast<unsigned long>(l));
    r += 1;
    if (l % 2 == 0) r += 2 * (m - 1);
    return r;
}

std::vector<Word> enumerate_cyclically_reduced(int m, int l, long long budget) {
    if (m < 1 || l < 1) throw DomainError("enumeration needs m >= 1 and l >= 1");
    mpz_class size;
    mpz_ui_pow_ui(size.get_mpz_t(), static_cast<unsigned long>(2 * m - 1), static_cast<unsigned long>(l));
    if (size > mpz_class(std::to_string(budget)))
        throw BudgetExceeded("enumeration of length-" + std::to_string(l) + " words over m=" + std::to_string(m) +
                                 " exceeds enumeration budget " + std::to_string(budget),
                             budget, "enumeration-too-large");
    std::vector<Word> out;
    Word cur(static_cast<std::size_t>(l));
    const int A = 2 * m;
    // iterative DFS in lexicographic order
    std::vector<int> choice(static_cast<std::size_t>(l), -1);
    int depth = 0;
    while (depth >= 0) {
        auto d = static_cast<std::size_t>(depth);
        int c = choice[d] + 1;
        while (c < A && d > 0 && static_cast<Letter>(c) == inv(cur[d - 1])) ++c;
        if (c >= A) {
            choice[d] = -1;
            --depth;
            continue;
        }
        choice[d] = c;
        cur[d] = static_cast<Letter>(c);
        if (depth == l - 1) {
            if (l == 1 || cur.back() != inv(cur.front())) out.push_back(cur);
        } else {
            ++depth;
        }
    }
    return out;
}

Word sample_cyclically_reduced(int m, int l, Rng& rng) {
    if (m < 2) throw DomainError("sampling requires m >= 2");
    if (l < 1) throw DomainError("sampling requires l >= 1");
    const auto A = static_cast<std::uint64_t>(2 * m);
    Word w(static_cast<std::size_t>(l));
    for (;;) {
        w[0] = static_cast<Letter>(rng.below(A));
        for (std::size_t i = 1; i < w.size(); ++i) {
            auto c = static_cast<Letter>(rng.below(A - 1));
            // skip the cancelling letter
            if (c >= inv(w[i - 1])) ++c;
            w[i] = c;
        }
        if (l == 1 || w.back() != inv(w.front())) return w;
    }
}

bool PieceReport::passes(const mpq_class& lambda, int l) const {
    return mpq_class(static_cast<long>(max_piece_length)) < lambda * l;
}

namespace {

// the relators and their inverses as cyclic strings
struct Slots {
    std::vector<Word> words;
    std::vector<std::size_t> relator;
    std::vector<bool> inverted;
};

Slots make_slots(const std::vector<Word>& relators) {
    Slots s;
    for (std::size_t i = 0; i < relators.size(); ++i) {
        if (!is_cyclically_reduced(relators[i]))
            throw MalformedInput("relator " + to_string(relators[i]) + " is not cyclically reduced");
        s.words.push_back(relators[i]);
        s.relator.push_back(i);
        s.inverted.push_back(false);
        s.words.push_back(inverse(relators[i]));
        s.relator.push_back(i);
        s.inverted.push_back(true);
    }
    return s;
}

bool coincidence(const Slots& s) {
    std::set<Word> seen;
    for (const Word& w : s.words) {
        if (w.empty()) continue;
        // proper power: w equals a nontrivial rotation of itself
        std::size_t n = w.size();
        for (std::size_t p = 1; p < n; ++p) {
            if (n % p) continue;
            if (std::equal(w.begin(), w.end() - static_cast<long>(p), w.begin() + static_cast<long>(p))) return true;
        }
        if (!seen.insert(rotate(w, least_rotation(w))).second) return true;
    }
    return false;
}

void fill_witness(PieceReport& r, const Slots& s, const Word& sub) {
    // find two distinct slots reading sub
    std::vector<std::pair<std::size_t, std::size_t>> hits;
    for (std::size_t j = 0; j < s.words.size() && hits.size() < 2; ++j) {
        const Word& w = s.words[j];
        std::size_t n = w.size();
        if (n <= sub.size()) continue;
        for (std::size_t p = 0; p < n && hits.size() < 2; ++p) {
            bool ok = true;
            for (std::size_t k = 0; k < sub.size() && ok; ++k) ok = w[(p + k) % n] == sub[k];
            if (ok) hits.emplace_back(j, p);
        }
    }
    if (hits.size() < 2) return;
    r.has_witness = true;
    r.witness.relator_a = s.relator[hits[0].first];
    r.witness.inverse_a = s.inverted[hits[0].first];
    r.witness.position_a = hits[0].second;
    r.witness.relator_b = s.relator[hits[1].first];
    r.witness.inverse_b = s.inverted[hits[1].first];
    r.witness.position_b = hits[1].second;
    r.witness.subword = sub;
}

// generalized suffix automaton with signed occurrence weights
class SuffixAutomaton {
public:
    explicit SuffixAutomaton(int alphabet) : A_(alphabet) { new_state(0, -1, 0, 0); }

    void add(const Word& s, std::size_t id, long weight) {
        last_ = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            extend(s[i], id, i);
            weight_[static_cast<std::size_t>(last_)] += weight;
        }
    }

    void finish() {
        std::vector<int> order(len_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return len_[static_cast<std::size_t>(a)] > len_[static_cast<std::size_t>(b)]; });
        for (int v : order) {
            int p = link_[static_cast<std::size_t>(v)];
            if (p >= 0) weight_[static_cast<std::size_t>(p)] += weight_[static_cast<std::size_t>(v)];
        }
    }

    std::size_t states() const { return len_.size(); }
    int len(std::size_t v) const { return len_[v]; }
    int link(std::size_t v) const { return link_[v]; }
    long weight(std::size_t v) const { return weight_[v]; }
    std::size_t end_string(std::size_t v) const { return end_id_[v]; }
    std::size_t end_pos(std::size_t v) const { return end_pos_[v]; }

private:
    int A_;
    int last_ = 0;
    std::vector<int> next_, len_, link_;
    std::vector<long> weight_;
    std::vector<std::size_t> end_id_, end_pos_;

    int new_state(int len, int link, std::size_t id, std::size_t pos) {
        len_.push_back(len);
        link_.push_back(link);
        weight_.push_back(0);
        end_id_.push_back(id);
        end_pos_.push_back(pos);
        next_.insert(next_.end(), static_cast<std::size_t>(A_), -1);
        return static_cast<int>(len_.size() - 1);
    }
    int& nx(int v, Letter c) { return next_[static_cast<std::size_t>(v) * static_cast<std::size_t>(A_) + c]; }

    int clone(int p, int q, Letter c) {
        int cl = new_state(len_[static_cast<std::size_t>(p)] + 1, link_[static_cast<std::size_t>(q)],
                           end_id_[static_cast<std::size_t>(q)], end_pos_[static_cast<std::size_t>(q)]);
        for (int a = 0; a < A_; ++a) nx(cl, static_cast<Letter>(a)) = nx(q, static_cast<Letter>(a));
        link_[static_cast<std::size_t>(q)] = cl;
        while (p >= 0 && nx(p, c) == q) {
            nx(p, c) = cl;
            p = link_[static_cast<std::size_t>(p)];
        }
        return cl;
    }

    void extend(Letter c, std::size_t id, std::size_t pos) {
        int p = last_;
        if (nx(p, c) >= 0) {
            int q = nx(p, c);
            if (len_[static_cast<std::size_t>(q)] == len_[static_cast<std::size_t>(p)] + 1)
                last_ = q;
            else
                last_ = clone(p, q, c);
            return;
        }
        int cur = new_state(len_[static_cast<std::size_t>(p)] + 1, 0, id, pos);
        while (p >= 0 && nx(p, c) < 0) {
            nx(p, c) = cur;
            p = link_[static_cast<std::size_t>(p)];
        }
        if (p >= 0) {
            int q = nx(p, c);
            if (len_[static_cast<std::size_t>(p)] + 1 == len_[static_cast<std::size_t>(q)])
                link_[static_cast<std::size_t>(cur)] = q;
            else
                link_[static_cast<std::size_t>(cur)] = clone(p, q, c);
        }
        last_ = cur;
    }
};

}  // namespace

PieceReport max_piece_length_naive(const std::vector<Word>& relators) {
    PieceReport r;
    Slots s = make_slots(relators);
    r.relator_coincidence = coincidence(s);
    Word best;
    for (std::size_t a = 0; a < s.words.size(); ++a) {
        const Word& wa = s.words[a];
        for (std::size_t pa = 0; pa < wa.size(); ++pa)
            for (std::size_t b = a; b < s.words.size(); ++b) {
                const Word& wb = s.words[b];
                for (std::size_t pb = (a == b ? pa + 1 : 0); pb < wb.size(); ++pb) {
                    std::size_t cap = std::min(wa.size(), wb.size()) - 1, k = 0;
                    while (k < cap && wa[(pa + k) % wa.size()] == wb[(pb + k) % wb.size()]) ++k;
                    if (k > r.max_piece_length) {
                        r.max_piece_length = k;
                        r.has_witness = true;
                        r.witness = {s.relator[a], s.relator[b], pa, pb, s.inverted[a], s.inverted[b], {}};
                        r.witness.subword.clear();
                        for (std::size_t i = 0; i < k; ++i) r.witness.subword.push_back(wa[(pa + i) % wa.size()]);
                    }
                }
            }
    }
    return r;
}

PieceReport max_piece_length(const std::vector<Word>& relators) {
    PieceReport r;
    Slots s = make_slots(relators);
    if (s.words.empty()) return r;
    r.relator_coincidence = coincidence(s);
    int A = 0;
    for (const Word& w : s.words)
        for (Letter x : w) A = std::max(A, static_cast<int>(x) + 1);
    A = std::max(A, 2);

    std::set<std::size_t, std::greater<>> lengths;
    for (const Word& w : s.words) lengths.insert(w.size());

    std::size_t best = 0;
    Word best_sub;
    for (std::size_t t : lengths) {
        if (t < 2 || t - 1 <= best) continue;
        // strings with length >= t; pieces of length <= t-1 counted by slot
        SuffixAutomaton sam(A);
        std::vector<Word> texts;
        for (const Word& w : s.words) {
            if (w.size() < t) continue;
            Word doubled = w;
            doubled.insert(doubled.end(), w.begin(), w.end() - 1);
            Word head(w.begin(), w.end() - 1);
            texts.push_back(doubled);
            sam.add(texts.back(), texts.size() - 1, +1);
            texts.push_back(head);
            sam.add(texts.back(), texts.size() - 1, -1);
        }
        sam.finish();
        for (std::size_t v = 1; v < sam.states(); ++v) {
            if (sam.weight(v) < 2) continue;
            auto L = std::min<std::size_t>(static_cast<std::size_t>(sam.len(v)), t - 1);
            if (static_cast<int>(L) <= sam.len(static_cast<std::size_t>(sam.link(v))) || L <= best) continue;
            best = L;
            const Word& txt = texts[sam.end_string(v)];
            std::size_t e = sam.end_pos(v);
            best_sub.assign(txt.begin() + static_cast<long>(e + 1 - L), txt.begin() + static_cast<long>(e + 1));
        }
    }
    r.max_piece_length = best;
    if (best > 0) fill_witness(r, s, best_sub);
    return r;
}

namespace {
int common_length(const std::vector<Word>& relators) {
    if (relators.empty()) return 0;
    std::size_t l = relators.front().size();
    for (const Word& w : relators)
        if (w.size() != l) throw DomainError("relators of unequal length", "heterogeneous-length");
    return static_cast<int>(l);
}
}  // namespace

bool check_c_prime(const std::vector<Word>& relators, const mpq_class& lambda) {
    int l = common_length(relators);
    if (relators.empty()) return true;
    return max_piece_length(relators).passes(lambda, l);
}

PieceReport piece_report(const std::vector<Word>& relators, const std::vector<mpq_class>& lambdas) {
    int l = common_length(relators);
    PieceReport r = max_piece_length(relators);
    for (const auto& lam : lambdas)
        r.lambda_threshold_passed[rational_string(lam)] = relators.empty() || r.passes(lam, l);
    return r;
}

mpq_class parse_rational(const std::string& s) {
    if (s.empty()) throw MalformedInput("empty rational");
    auto bad = [&] { return MalformedInput("not a rational number: '" + s + "'"); };
    auto digits = [](const std::string& t) {
        return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    std::string body = s;
    bool neg = false;
    if (body[0] == '-' || body[0] == '+') {
        neg = body[0] == '-';
        body = body.substr(1);
    }
    mpq_class q;
    if (auto slash = body.find('/'); slash != std::string::npos) {
        std::string a = body.substr(0, slash), b = body.substr(slash + 1);
        if (!digits(a) || !digits(b)) throw bad();
        mpz_class den(b, 10);
        if (den == 0) throw bad();
        q = mpq_class(mpz_class(a, 10), den);
    } else if (auto dot = body.find('.'); dot != std::string::npos) {
        std::string a = body.substr(0, dot), b = body.substr(dot + 1);
        if (a.empty()) a = "0";
        if (!digits(a) || (!b.empty() && !digits(b))) throw bad();
        mpz_class den;
        mpz_ui_pow_ui(den.get_mpz_t(), 10, b.size());
        q = mpq_class(mpz_class(a + b, 10), den);
    } else {
        if (!digits(body)) throw bad();
        q = mpq_class(mpz_class(body, 10));
    }
    q.canonicalize();
    return neg ? mpq_class(-q) : q;
}

std::string rational_string(const mpq_class& q) {
    mpq_class c = q;
    c.canonicalize();
    return c.get_num().get_str() + "/" + c.get_den().get_str();
}

}  // namespace gromov
