#pragma once

#include "tbss/rational.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tbss {

/// Exponent vector indexed by 0-based variable, trailing zeros trimmed.
using Monomial = std::vector<std::uint32_t>;

/// Sparse multivariate polynomial with Rational coefficients.
class Polynomial {
public:
    Polynomial() = default;

    static Polynomial constant(Rational c);
    /// Variable with 1-based index (matches register numbering R1..Rn).
    static Polynomial variable(std::size_t index1);

    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty()); }
    Rational constant_value() const;

    /// Largest 1-based variable index used, 0 if none.
    std::size_t max_var_index() const;

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    Polynomial operator-() const;
    Polynomial scaled(const Rational& c) const;

    Rational eval(std::span<const Rational> args) const;

    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

    const std::map<Monomial, Rational>& terms() const { return terms_; }

    /// Substitute variable i (1-based) with the given polynomials.
    Polynomial substituted(const std::vector<Polynomial>& subs) const;

    std::string str() const;

private:
    void add_term(const Monomial& m, const Rational& c);

    std::map<Monomial, Rational> terms_;
};

/// Quotient of polynomials. Canonical form: denominator has integer primitive
/// coefficients with positive leading term; constant denominators fold into the
/// numerator (den = 1). The degenerate always-crashing quotient 1/0 can only be
/// produced by the program parser (a written zero denominator crashes at run
/// time, not at parse time).
class RationalFunction {
public:
    RationalFunction() : num_(Polynomial::constant(0)), den_(Polynomial::constant(1)) {}
    RationalFunction(Polynomial num, Polynomial den);

    static RationalFunction constant(Rational c) { return {Polynomial::constant(std::move(c)), Polynomial::constant(1)}; }
    static RationalFunction variable(std::size_t index1) { return {Polynomial::variable(index1), Polynomial::constant(1)}; }

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }

    bool is_degenerate() const { return den_.is_zero(); }
    std::size_t max_var_index() const { return std::max(num_.max_var_index(), den_.max_var_index()); }

    friend RationalFunction operator+(const RationalFunction& a, const RationalFunction& b);
    friend RationalFunction operator-(const RationalFunction& a, const RationalFunction& b);
    friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b);
    friend RationalFunction operator/(const RationalFunction& a, const RationalFunction& b);
    RationalFunction operator-() const;

    friend bool operator==(const RationalFunction& a, const RationalFunction& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

    /// Exact evaluation; throws DivisionByZero when the denominator vanishes.
    Rational eval(std::span<const Rational> args) const;

    /// Symbolic composition: substitute variable i with subs[i-1]. Total; a
    /// degenerate operand yields the degenerate quotient.
    RationalFunction composed(const std::vector<RationalFunction>& subs) const;

    /// True when the function depends on no variable other than index1 (it may
    /// ignore it entirely).
    bool univariate_in(std::size_t index1) const;

    std::string str() const;

private:
    Polynomial num_, den_;
};

RationalFunction eval_partial(const RationalFunction& f, std::span<const Rational> args);

} // namespace tbss
