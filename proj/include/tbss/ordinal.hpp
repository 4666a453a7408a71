#pragma once

#include "tbss/bits.hpp"
#include "tbss/rational.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tbss {

struct OrdTerm;

struct NotAWellOrderCode : std::runtime_error {
    NotAWellOrderCode(const std::string& why) : std::runtime_error("not a well-order code: " + why) {}
};

/// Ordinal below epsilon_0 in Cantor normal form: sum of w^exp * coeff with
/// strictly decreasing exponents and positive integer coefficients; the empty
/// sum is 0.
class Ordinal {
public:
    Ordinal() = default;
    Ordinal(unsigned long long n);
    Ordinal(const BigInt& n);

    static Ordinal omega();
    /// w^exp * coeff (coeff >= 1).
    static Ordinal power(const Ordinal& exp, BigInt coeff = 1);

    static Ordinal parse(std::string_view text);

    bool is_zero() const { return terms_.empty(); }
    bool is_limit() const;
    bool is_finite() const;
    /// Value as an integer when < omega.
    std::optional<BigInt> as_natural() const;
    bool below_omega_omega() const;

    const std::vector<OrdTerm>& terms() const { return terms_; }

    friend std::strong_ordering operator<=>(const Ordinal& a, const Ordinal& b) { return cmp(a, b); }
    friend bool operator==(const Ordinal& a, const Ordinal& b) { return cmp(a, b) == std::strong_ordering::equal; }

    friend Ordinal operator+(const Ordinal& a, const Ordinal& b);
    friend Ordinal operator*(const Ordinal& a, const Ordinal& b);
    Ordinal succ() const { return *this + Ordinal(1); }

    /// Least delta with a + delta = *this; requires a <= *this.
    Ordinal minus_left(const Ordinal& a) const;

    /// Least multiple of w^depth strictly greater than *this.
    Ordinal round_up_to_limit(std::size_t depth) const;

    std::string str() const;

private:
    static std::strong_ordering cmp(const Ordinal& a, const Ordinal& b);

    std::vector<OrdTerm> terms_; // strictly decreasing exponents
};

struct OrdTerm {
    Ordinal exp;
    BigInt coeff;
    friend bool operator==(const OrdTerm&, const OrdTerm&) = default;
};

/// Cantor pairing (n+m)(n+m+1)/2 + n and its inverse.
std::uint64_t rho(std::uint64_t n, std::uint64_t m);
std::pair<std::uint64_t, std::uint64_t> rho_inv(std::uint64_t k);

/// Canonical enumeration of the elements of alpha < w^w: ordered by weight
/// (sum of exponents and coefficients of the CNF terms), then by term count,
/// then lexicographically on the flattened (exp, coeff) list.
class OrdinalEnumeration {
public:
    explicit OrdinalEnumeration(Ordinal alpha);

    /// h(k): the k-th element; for finite alpha, k must be < alpha.
    const Ordinal& at(std::size_t k);
    /// h^-1(beta): the rank of an element beta < alpha.
    std::size_t rank_of(const Ordinal& beta);

    const Ordinal& alpha() const { return alpha_; }

private:
    void grow(std::size_t upto);

    Ordinal alpha_;
    std::vector<Ordinal> cache_;
    std::uint64_t next_weight_ = 0;
};

/// The set A coding (alpha,<) via bits at rho(n,m): related(n,m) iff bit rho(n,m).
struct OrderCode {
    EventuallyPeriodicBits bits;
};

OrderCode ordinal_to_code(const Ordinal& alpha, std::size_t bound);
Ordinal code_to_ordinal(const OrderCode& code, std::size_t bound);

} // namespace tbss
