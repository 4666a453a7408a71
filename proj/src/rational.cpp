#include "tbss/rational.hpp"

#include <cctype>

namespace tbss {

void Rational::normalize() {
    if (den_ == 0) throw DivisionByZero();
    if (den_ < 0) {
        num_ = -num_;
        den_ = -den_;
    }
    if (num_ == 0) {
        den_ = 1;
        return;
    }
    BigInt g = boost::multiprecision::gcd(num_ < 0 ? BigInt(-num_) : num_, den_);
    if (g > 1) {
        num_ /= g;
        den_ /= g;
    }
}

BigInt Rational::floor() const {
    BigInt q = num_ / den_;
    if (num_ < 0 && q * den_ != num_) q -= 1;
    return q;
}

Rational Rational::pow2(long long k) {
    BigInt p = 1;
    p <<= static_cast<unsigned>(k < 0 ? -k : k);
    return k >= 0 ? Rational(p) : Rational(1, p);
}

std::string Rational::str() const {
    std::string s = num_.str();
    if (den_ != 1) s += "/" + den_.str();
    return s;
}

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

} // namespace

Rational Rational::parse(std::string_view text) {
    std::string_view s = text;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    bool neg = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    if (s.empty()) throw ParseError(0, "empty rational literal");
    Rational out;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        std::string_view n = s.substr(0, slash), d = s.substr(slash + 1);
        if (!all_digits(n) || !all_digits(d)) throw ParseError(0, "bad rational literal '" + std::string(text) + "'");
        out = Rational(BigInt(std::string(n)), BigInt(std::string(d)));
    } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
        std::string_view ip = s.substr(0, dot), fp = s.substr(dot + 1);
        if ((!ip.empty() && !all_digits(ip)) || !all_digits(fp))
            throw ParseError(0, "bad decimal literal '" + std::string(text) + "'");
        BigInt scale = 1;
        for (std::size_t i = 0; i < fp.size(); ++i) scale *= 10;
        BigInt whole = ip.empty() ? BigInt(0) : BigInt(std::string(ip));
        out = Rational(whole * scale + BigInt(std::string(fp)), scale);
    } else {
        if (!all_digits(s)) throw ParseError(0, "bad integer literal '" + std::string(text) + "'");
        out = Rational(BigInt(std::string(s)));
    }
    return neg ? -out : out;
}

} // namespace tbss
