#include "tbss/ratfun.hpp"

#include <algorithm>

namespace tbss {

namespace {

Monomial mono_mul(const Monomial& a, const Monomial& b) {
    Monomial m(std::max(a.size(), b.size()), 0);
    for (std::size_t i = 0; i < a.size(); ++i) m[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) m[i] += b[i];
    while (!m.empty() && m.back() == 0) m.pop_back();
    return m;
}

std::uint32_t total_degree(const Monomial& m) {
    std::uint32_t d = 0;
    for (auto e : m) d += e;
    return d;
}

} // namespace

void Polynomial::add_term(const Monomial& m, const Rational& c) {
    if (c.is_zero()) return;
    auto it = terms_.find(m);
    if (it == terms_.end()) {
        terms_.emplace(m, c);
    } else {
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

Polynomial Polynomial::constant(Rational c) {
    Polynomial p;
    p.add_term({}, c);
    return p;
}

Polynomial Polynomial::variable(std::size_t index1) {
    Polynomial p;
    Monomial m(index1, 0);
    m[index1 - 1] = 1;
    p.add_term(m, 1);
    return p;
}

Rational Polynomial::constant_value() const {
    if (terms_.empty()) return 0;
    return terms_.begin()->second;
}

std::size_t Polynomial::max_var_index() const {
    std::size_t mx = 0;
    for (const auto& [m, c] : terms_) mx = std::max(mx, m.size());
    return mx;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    Polynomial r = a;
    for (const auto& [m, c] : b.terms_) r.add_term(m, c);
    return r;
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    Polynomial r = a;
    for (const auto& [m, c] : b.terms_) r.add_term(m, -c);
    return r;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial r;
    for (const auto& [ma, ca] : a.terms_)
        for (const auto& [mb, cb] : b.terms_) r.add_term(mono_mul(ma, mb), ca * cb);
    return r;
}

Polynomial Polynomial::operator-() const {
    Polynomial r;
    for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
    return r;
}

Polynomial Polynomial::scaled(const Rational& c) const {
    Polynomial r;
    if (c.is_zero()) return r;
    for (const auto& [m, coef] : terms_) r.terms_.emplace(m, coef * c);
    return r;
}

Rational Polynomial::eval(std::span<const Rational> args) const {
    Rational acc = 0;
    for (const auto& [m, c] : terms_) {
        Rational t = c;
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::uint32_t e = 0; e < m[i]; ++e) t *= args[i];
        acc += t;
    }
    return acc;
}

Polynomial Polynomial::substituted(const std::vector<Polynomial>& subs) const {
    Polynomial acc;
    for (const auto& [m, c] : terms_) {
        Polynomial t = Polynomial::constant(c);
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::uint32_t e = 0; e < m[i]; ++e) t = t * subs[i];
        acc = acc + t;
    }
    return acc;
}

std::string Polynomial::str() const {
    if (terms_.empty()) return "0";
    // Leading terms first: total degree descending, then reverse-lex on exponents.
    std::vector<const std::pair<const Monomial, Rational>*> order;
    for (const auto& t : terms_) order.push_back(&t);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) {
        auto da = total_degree(a->first), db = total_degree(b->first);
        if (da != db) return da > db;
        return a->first > b->first;
    });
    std::string out;
    bool first = true;
    for (auto* t : order) {
        const auto& [m, c] = *t;
        Rational coef = c;
        if (first) {
            if (coef.sign() < 0) {
                out += "-";
                coef = -coef;
            }
        } else {
            out += coef.sign() < 0 ? " - " : " + ";
            if (coef.sign() < 0) coef = -coef;
        }
        first = false;
        std::string vars;
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::uint32_t e = 0; e < m[i]; ++e) {
                if (!vars.empty()) vars += "*";
                vars += "R" + std::to_string(i + 1);
            }
        if (vars.empty()) {
            out += coef.str();
        } else {
            if (!(coef == Rational(1))) out += coef.str() + "*";
            out += vars;
        }
    }
    return out;
}

RationalFunction::RationalFunction(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) {
        num_ = Polynomial::constant(1);
        return;
    }
    if (den_.is_constant()) {
        num_ = num_.scaled(Rational(1) / den_.constant_value());
        den_ = Polynomial::constant(1);
        return;
    }
    // Content-normalize the denominator: integer primitive coefficients,
    // lexicographically-leading coefficient positive.
    BigInt num_gcd = 0, den_lcm = 1;
    for (const auto& [m, c] : den_.terms()) {
        num_gcd = boost::multiprecision::gcd(num_gcd, c.num() < 0 ? BigInt(-c.num()) : c.num());
        den_lcm = den_lcm / boost::multiprecision::gcd(den_lcm, c.den()) * c.den();
    }
    Rational content(num_gcd, den_lcm);
    if (den_.terms().rbegin()->second.sign() < 0) content = -content;
    Rational inv = Rational(1) / content;
    num_ = num_.scaled(inv);
    den_ = den_.scaled(inv);
}

RationalFunction operator+(const RationalFunction& a, const RationalFunction& b) {
    if (a.is_degenerate() || b.is_degenerate()) return {Polynomial::constant(1), Polynomial()};
    return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
}

RationalFunction operator-(const RationalFunction& a, const RationalFunction& b) {
    if (a.is_degenerate() || b.is_degenerate()) return {Polynomial::constant(1), Polynomial()};
    return {a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_};
}

RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
    if (a.is_degenerate() || b.is_degenerate()) return {Polynomial::constant(1), Polynomial()};
    return {a.num_ * b.num_, a.den_ * b.den_};
}

RationalFunction operator/(const RationalFunction& a, const RationalFunction& b) {
    if (a.is_degenerate() || b.is_degenerate()) return {Polynomial::constant(1), Polynomial()};
    return {a.num_ * b.den_, a.den_ * b.num_};
}

RationalFunction RationalFunction::operator-() const {
    if (is_degenerate()) return *this;
    RationalFunction r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
}

Rational RationalFunction::eval(std::span<const Rational> args) const {
    if (is_degenerate()) throw DivisionByZero();
    Rational d = den_.eval(args);
    if (d.is_zero()) throw DivisionByZero();
    return num_.eval(args) / d;
}

RationalFunction RationalFunction::composed(const std::vector<RationalFunction>& subs) const {
    if (is_degenerate()) return *this;
    for (const auto& s : subs)
        if (s.is_degenerate()) return {Polynomial::constant(1), Polynomial()};
    // Put the substitutions over a common denominator D = prod den_i^maxdeg_i,
    // then substitute numerators scaled by the complementary powers.
    const std::size_t nvars = max_var_index();
    std::vector<std::uint32_t> maxdeg(nvars, 0);
    auto track = [&](const Polynomial& p) {
        for (const auto& [m, c] : p.terms())
            for (std::size_t i = 0; i < m.size(); ++i) maxdeg[i] = std::max(maxdeg[i], m[i]);
    };
    track(num_);
    track(den_);

    auto lift = [&](const Polynomial& p) {
        // sum over terms: c * prod num_i^e_i * prod den_i^(maxdeg_i - e_i)
        Polynomial acc;
        for (const auto& [m, c] : p.terms()) {
            Polynomial t = Polynomial::constant(c);
            for (std::size_t i = 0; i < nvars; ++i) {
                std::uint32_t e = i < m.size() ? m[i] : 0;
                for (std::uint32_t k = 0; k < e; ++k) t = t * subs[i].num();
                for (std::uint32_t k = e; k < maxdeg[i]; ++k) t = t * subs[i].den();
            }
            acc = acc + t;
        }
        return acc;
    };

    return {lift(num_), lift(den_)};
}

bool RationalFunction::univariate_in(std::size_t index1) const {
    auto check = [&](const Polynomial& p) {
        for (const auto& [m, c] : p.terms())
            for (std::size_t i = 0; i < m.size(); ++i)
                if (m[i] != 0 && i + 1 != index1) return false;
        return true;
    };
    return check(num_) && check(den_);
}

std::string RationalFunction::str() const {
    if (is_degenerate()) return "(" + num_.str() + ")/(0)";
    if (den_.is_constant()) return num_.str();
    bool np = num_.terms().size() > 1;
    bool dp = den_.terms().size() > 1 || !(den_.terms().begin()->second == Rational(1));
    std::string n = np ? "(" + num_.str() + ")" : num_.str();
    std::string d = dp ? "(" + den_.str() + ")" : den_.str();
    return n + "/" + d;
}

RationalFunction eval_partial(const RationalFunction& f, std::span<const Rational> args) {
    std::vector<RationalFunction> subs;
    subs.reserve(args.size());
    for (const auto& a : args) subs.push_back(RationalFunction::constant(a));
    return f.composed(subs);
}

} // namespace tbss
