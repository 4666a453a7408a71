#include "tbss/ordinal.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace tbss {

Ordinal::Ordinal(unsigned long long n) : Ordinal(BigInt(n)) {}

Ordinal::Ordinal(const BigInt& n) {
    if (n < 0) throw std::invalid_argument("negative ordinal");
    if (n > 0) terms_.push_back({Ordinal(), n});
}

Ordinal Ordinal::omega() { return power(Ordinal(1ULL)); }

Ordinal Ordinal::power(const Ordinal& exp, BigInt coeff) {
    if (coeff <= 0) throw std::invalid_argument("ordinal coefficient must be positive");
    Ordinal o;
    o.terms_.push_back({exp, std::move(coeff)});
    return o;
}

bool Ordinal::is_limit() const { return !terms_.empty() && !terms_.back().exp.is_zero(); }

bool Ordinal::is_finite() const { return terms_.empty() || (terms_.size() == 1 && terms_[0].exp.is_zero()); }

std::optional<BigInt> Ordinal::as_natural() const {
    if (terms_.empty()) return BigInt(0);
    if (is_finite()) return terms_[0].coeff;
    return std::nullopt;
}

bool Ordinal::below_omega_omega() const {
    for (const auto& t : terms_)
        if (!t.exp.is_finite()) return false;
    return true;
}

std::strong_ordering Ordinal::cmp(const Ordinal& a, const Ordinal& b) {
    const std::size_t n = std::min(a.terms_.size(), b.terms_.size());
    for (std::size_t i = 0; i < n; ++i) {
        auto c = cmp(a.terms_[i].exp, b.terms_[i].exp);
        if (c != std::strong_ordering::equal) return c;
        if (a.terms_[i].coeff != b.terms_[i].coeff)
            return a.terms_[i].coeff < b.terms_[i].coeff ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    if (a.terms_.size() == b.terms_.size()) return std::strong_ordering::equal;
    return a.terms_.size() < b.terms_.size() ? std::strong_ordering::less : std::strong_ordering::greater;
}

Ordinal operator+(const Ordinal& a, const Ordinal& b) {
    if (b.is_zero()) return a;
    Ordinal r;
    const Ordinal& lead = b.terms_[0].exp;
    for (const auto& t : a.terms_) {
        if (t.exp > lead) {
            r.terms_.push_back(t);
        } else if (t.exp == lead) {
            r.terms_.push_back({lead, t.coeff + b.terms_[0].coeff});
            r.terms_.insert(r.terms_.end(), b.terms_.begin() + 1, b.terms_.end());
            return r;
        } else {
            break;
        }
    }
    r.terms_.insert(r.terms_.end(), b.terms_.begin(), b.terms_.end());
    return r;
}

Ordinal operator*(const Ordinal& a, const Ordinal& b) {
    if (a.is_zero() || b.is_zero()) return Ordinal();
    Ordinal acc;
    for (const auto& t : b.terms_) {
        Ordinal piece;
        if (t.exp.is_zero()) {
            // a * finite d: the leading coefficient multiplies, the tail stays.
            piece = a;
            piece.terms_[0].coeff = a.terms_[0].coeff * t.coeff;
        } else {
            piece = Ordinal::power(a.terms_[0].exp + t.exp, t.coeff);
        }
        acc = acc + piece;
    }
    return acc;
}

Ordinal Ordinal::minus_left(const Ordinal& a) const {
    if (a > *this) throw std::invalid_argument("ordinal subtraction requires a <= b");
    // Find the first CNF position where a and *this differ.
    std::size_t k = 0;
    while (k < a.terms_.size() && k < terms_.size() && a.terms_[k] == terms_[k]) ++k;
    if (k == a.terms_.size()) {
        Ordinal d;
        d.terms_.assign(terms_.begin() + k, terms_.end());
        return d;
    }
    // a.terms_[k] differs; since a <= *this, either exponents differ (ours
    // larger) or ours has the bigger coefficient at the same exponent.
    Ordinal d;
    if (a.terms_[k].exp == terms_[k].exp && terms_[k].coeff > a.terms_[k].coeff) {
        d.terms_.push_back({terms_[k].exp, terms_[k].coeff - a.terms_[k].coeff});
        d.terms_.insert(d.terms_.end(), terms_.begin() + k + 1, terms_.end());
    } else {
        d.terms_.assign(terms_.begin() + k, terms_.end());
    }
    return d;
}

Ordinal Ordinal::round_up_to_limit(std::size_t depth) const {
    Ordinal step = Ordinal::power(Ordinal(static_cast<unsigned long long>(depth)));
    Ordinal head;
    for (const auto& t : terms_)
        if (t.exp >= step.terms_[0].exp) head.terms_.push_back(t);
    return head + step;
}

std::string Ordinal::str() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& t : terms_) {
        if (!first) out += " + ";
        first = false;
        if (t.exp.is_zero()) {
            out += t.coeff.str();
            continue;
        }
        if (t.exp == Ordinal(1ULL)) {
            out += "w";
        } else if (t.exp.is_finite()) {
            out += "w^" + t.exp.as_natural()->str();
        } else {
            out += "w^(" + t.exp.str() + ")";
        }
        if (t.coeff != 1) out += "*" + t.coeff.str();
    }
    return out;
}

namespace {

struct OrdParser {
    std::string_view s;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    BigInt number() {
        skip_ws();
        std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (start == pos) throw ParseError(0, "expected number in ordinal at '" + std::string(s.substr(pos)) + "'");
        return BigInt(std::string(s.substr(start, pos - start)));
    }

    Ordinal parse_sum() {
        Ordinal acc = parse_term();
        while (true) {
            skip_ws();
            if (!eat('+')) break;
            acc = acc + parse_term();
        }
        return acc;
    }

    Ordinal parse_term() {
        skip_ws();
        if (pos < s.size() && (s[pos] == 'w' || s[pos] == 'W')) {
            ++pos;
            Ordinal exp(1ULL);
            if (eat('^')) {
                skip_ws();
                if (eat('(')) {
                    exp = parse_sum();
                    if (!eat(')')) throw ParseError(0, "missing ')' in ordinal exponent");
                } else {
                    exp = Ordinal(number());
                }
            }
            BigInt coeff = 1;
            if (eat('*')) coeff = number();
            return Ordinal::power(exp, coeff);
        }
        return Ordinal(number());
    }
};

} // namespace

Ordinal Ordinal::parse(std::string_view text) {
    OrdParser p{text};
    p.skip_ws();
    if (p.pos >= text.size()) throw ParseError(0, "empty ordinal");
    Ordinal o = p.parse_sum();
    p.skip_ws();
    if (p.pos != text.size())
        throw ParseError(0, "trailing characters in ordinal '" + std::string(text) + "'");
    return o;
}

std::uint64_t rho(std::uint64_t n, std::uint64_t m) {
    std::uint64_t s = n + m;
    return s * (s + 1) / 2 + n;
}

std::pair<std::uint64_t, std::uint64_t> rho_inv(std::uint64_t k) {
    std::uint64_t s = static_cast<std::uint64_t>((std::sqrt(8.0 * static_cast<double>(k) + 1.0) - 1.0) / 2.0);
    while (s * (s + 1) / 2 > k) --s;
    while ((s + 1) * (s + 2) / 2 <= k) ++s;
    std::uint64_t n = k - s * (s + 1) / 2;
    return {n, s - n};
}

namespace {

std::uint64_t term_weight(const Ordinal& o) {
    std::uint64_t w = 0;
    for (const auto& t : o.terms()) {
        auto e = t.exp.as_natural();
        w += static_cast<std::uint64_t>(*e) + static_cast<std::uint64_t>(t.coeff);
    }
    return w;
}

std::vector<std::uint64_t> flattened(const Ordinal& o) {
    std::vector<std::uint64_t> v;
    for (const auto& t : o.terms()) {
        v.push_back(static_cast<std::uint64_t>(*t.exp.as_natural()));
        v.push_back(static_cast<std::uint64_t>(t.coeff));
    }
    return v;
}

// All ordinals < w^w of the given weight, in canonical order (term count, then
// flattened lex).
std::vector<Ordinal> ordinals_of_weight(std::uint64_t w) {
    std::vector<Ordinal> out;
    // Build CNF term lists with strictly decreasing natural exponents.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> terms;
    auto rec = [&](auto&& self, std::uint64_t remaining, std::uint64_t max_exp_plus1) -> void {
        if (remaining == 0) {
            if (terms.empty() && w != 0) return;
            Ordinal o;
            for (const auto& [e, c] : terms) o = o + Ordinal::power(Ordinal(e), BigInt(c));
            out.push_back(o);
            return;
        }
        for (std::uint64_t e = 0; e < max_exp_plus1 && e < remaining; ++e) {
            for (std::uint64_t c = 1; e + c <= remaining; ++c) {
                terms.push_back({e, c});
                self(self, remaining - e - c, e);
                terms.pop_back();
            }
        }
    };
    if (w == 0) {
        out.push_back(Ordinal());
        return out;
    }
    // Exponents must appear in decreasing order; generate with the largest
    // exponent first, bounded by the remaining weight.
    rec(rec, w, w + 1);
    std::sort(out.begin(), out.end(), [](const Ordinal& a, const Ordinal& b) {
        if (a.terms().size() != b.terms().size()) return a.terms().size() < b.terms().size();
        return flattened(a) < flattened(b);
    });
    return out;
}

} // namespace

OrdinalEnumeration::OrdinalEnumeration(Ordinal alpha) : alpha_(std::move(alpha)) {
    if (!alpha_.below_omega_omega()) throw std::invalid_argument("enumeration requires alpha < w^w");
}

void OrdinalEnumeration::grow(std::size_t upto) {
    auto limit = alpha_.as_natural();
    while (cache_.size() <= upto) {
        if (limit && BigInt(cache_.size()) >= *limit)
            throw std::out_of_range("enumeration index beyond finite ordinal");
        for (const auto& o : ordinals_of_weight(next_weight_))
            if (o < alpha_) cache_.push_back(o);
        ++next_weight_;
    }
}

const Ordinal& OrdinalEnumeration::at(std::size_t k) {
    grow(k);
    return cache_[k];
}

std::size_t OrdinalEnumeration::rank_of(const Ordinal& beta) {
    if (!(beta < alpha_)) throw std::out_of_range("rank_of: not an element of alpha");
    std::uint64_t w = term_weight(beta);
    // Every element of weight <= w appears once all weights <= w are expanded.
    std::size_t probe = 0;
    while (true) {
        grow(probe);
        for (; probe < cache_.size(); ++probe)
            if (cache_[probe] == beta) return probe;
        if (next_weight_ > w + 1 && probe >= cache_.size())
            throw std::logic_error("rank_of: element not found");
    }
}

OrderCode ordinal_to_code(const Ordinal& alpha, std::size_t bound) {
    if (!alpha.below_omega_omega()) throw std::invalid_argument("order codes require alpha < w^w");
    OrdinalEnumeration h(alpha);
    std::size_t k = bound;
    if (auto n = alpha.as_natural(); n && *n < BigInt(static_cast<unsigned long long>(bound)))
        k = static_cast<std::size_t>(static_cast<unsigned long long>(*n));
    std::vector<std::uint8_t> bits;
    auto set = [&](std::size_t i) {
        if (bits.size() <= i) bits.resize(i + 1, 0);
        bits[i] = 1;
    };
    for (std::size_t n = 0; n < k; ++n)
        for (std::size_t m = 0; m < k; ++m)
            if (n != m && h.at(n) < h.at(m)) set(rho(n, m));
    return {EventuallyPeriodicBits::finite(std::move(bits))};
}

Ordinal code_to_ordinal(const OrderCode& code, std::size_t bound) {
    // Relation on the consulted square.
    std::vector<std::vector<bool>> rel(bound, std::vector<bool>(bound, false));
    for (std::size_t n = 0; n < bound; ++n)
        for (std::size_t m = 0; m < bound; ++m)
            if (code.bits.bit(rho(n, m))) rel[n][m] = true;

    for (std::size_t n = 0; n < bound; ++n)
        if (rel[n][n]) throw NotAWellOrderCode("reflexive pair");

    // Participating indices must form an initial segment.
    std::vector<bool> used(bound, false);
    for (std::size_t n = 0; n < bound; ++n)
        for (std::size_t m = 0; m < bound; ++m)
            if (rel[n][m]) used[n] = used[m] = true;
    std::size_t field = 0;
    while (field < bound && used[field]) ++field;
    for (std::size_t n = field; n < bound; ++n)
        if (used[n]) throw NotAWellOrderCode("field is not an initial segment");

    // Strict linear order on the field.
    for (std::size_t n = 0; n < field; ++n)
        for (std::size_t m = 0; m < field; ++m) {
            if (n == m) continue;
            if (rel[n][m] && rel[m][n]) throw NotAWellOrderCode("antisymmetry violated");
            if (!rel[n][m] && !rel[m][n]) throw NotAWellOrderCode("incomparable field elements");
        }
    for (std::size_t a = 0; a < field; ++a)
        for (std::size_t b = 0; b < field; ++b)
            for (std::size_t c = 0; c < field; ++c)
                if (a != b && b != c && a != c && rel[a][b] && rel[b][c] && !rel[a][c])
                    throw NotAWellOrderCode("transitivity violated");

    if (field < bound) {
        // Unsaturated: a finite linear order; its type is its size.
        return Ordinal(static_cast<unsigned long long>(field));
    }

    // Saturated: search canonical codes of infinite ordinals in canonical
    // global order.
    constexpr std::size_t kCandidateCap = 4096;
    std::size_t seen = 0;
    for (std::uint64_t w = 2; seen < kCandidateCap; ++w) {
        for (const auto& cand : ordinals_of_weight(w)) {
            if (cand.is_finite()) continue;
            ++seen;
            OrderCode c = ordinal_to_code(cand, bound);
            bool match = true;
            for (std::size_t n = 0; n < bound && match; ++n)
                for (std::size_t m = 0; m < bound && match; ++m)
                    if (static_cast<bool>(c.bits.bit(rho(n, m))) != rel[n][m]) match = false;
            if (match) return cand;
            if (seen >= kCandidateCap) break;
        }
    }
    throw NotAWellOrderCode("no canonical ordinal matches the saturated code");
}

} // namespace tbss
