#include "tbss/bits.hpp"

#include <algorithm>
#include <map>

namespace tbss {

namespace {

// Smallest q such that the cyclic word is a power of its first q letters.
std::size_t primitive_period(const std::vector<std::uint8_t>& w) {
    for (std::size_t q = 1; q < w.size(); ++q) {
        if (w.size() % q != 0) continue;
        bool ok = true;
        for (std::size_t i = q; i < w.size() && ok; ++i) ok = w[i] == w[i % q];
        if (ok) return q;
    }
    return w.empty() ? 1 : w.size();
}

} // namespace

EventuallyPeriodicBits::EventuallyPeriodicBits(std::vector<std::uint8_t> prefix, std::vector<std::uint8_t> period)
    : prefix_(std::move(prefix)), period_(std::move(period)) {
    if (period_.empty()) period_ = {0};
    period_.resize(primitive_period(period_));
    // Shift the boundary left while the last prefix bit matches the cyclically
    // preceding period bit.
    while (!prefix_.empty() && prefix_.back() == period_.back()) {
        prefix_.pop_back();
        std::rotate(period_.begin(), period_.end() - 1, period_.end());
    }
    period_.resize(primitive_period(period_));
}

EventuallyPeriodicBits EventuallyPeriodicBits::finite(std::vector<std::uint8_t> bits) {
    return EventuallyPeriodicBits(std::move(bits), {0});
}

bool EventuallyPeriodicBits::all_zero() const {
    if (!finite_support()) return false;
    for (auto b : prefix_)
        if (b) return false;
    return true;
}

bool EventuallyPeriodicBits::finite_support() const { return period_.size() == 1 && period_[0] == 0; }

std::vector<std::size_t> EventuallyPeriodicBits::support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < prefix_.size(); ++i)
        if (prefix_[i]) s.push_back(i);
    return s;
}

std::string EventuallyPeriodicBits::str() const {
    std::string out;
    for (auto b : prefix_) out += b ? '1' : '0';
    out += '(';
    for (auto b : period_) out += b ? '1' : '0';
    out += ')';
    return out;
}

EventuallyPeriodicBits binary_expansion(const Rational& r) {
    if (r.sign() < 0 || r >= Rational(1)) throw NotASequenceCode("value outside [0,1)");
    std::vector<std::uint8_t> bits;
    std::map<Rational, std::size_t> seen;
    Rational x = r;
    while (true) {
        if (x.is_zero()) return EventuallyPeriodicBits(std::move(bits), {0});
        auto it = seen.find(x);
        if (it != seen.end()) {
            std::vector<std::uint8_t> prefix(bits.begin(), bits.begin() + it->second);
            std::vector<std::uint8_t> period(bits.begin() + it->second, bits.end());
            return EventuallyPeriodicBits(std::move(prefix), std::move(period));
        }
        seen.emplace(x, bits.size());
        x += x;
        if (x >= Rational(1)) {
            bits.push_back(1);
            x -= Rational(1);
        } else {
            bits.push_back(0);
        }
    }
}

namespace {

Rational bits_value(const EventuallyPeriodicBits& b) {
    // prefix part + 2^-|prefix| * (period as integer) / (2^p - 1)
    Rational acc = 0;
    const auto& pre = b.prefix();
    for (std::size_t i = 0; i < pre.size(); ++i)
        if (pre[i]) acc += Rational::pow2(-static_cast<long long>(i) - 1);
    const auto& per = b.period();
    BigInt v = 0;
    for (auto bit : per) v = (v << 1) + (bit ? 1 : 0);
    if (v != 0) {
        BigInt denom = (BigInt(1) << static_cast<unsigned>(per.size())) - 1;
        acc += Rational::pow2(-static_cast<long long>(pre.size())) * Rational(v, denom);
    }
    return acc;
}

} // namespace

Rational seq_to_real(const EventuallyPeriodicBits& t) {
    // Expansion bit 2n+1 is t(n), even bits are 0.
    std::vector<std::uint8_t> prefix;
    prefix.reserve(2 * t.prefix().size());
    for (auto b : t.prefix()) {
        prefix.push_back(0);
        prefix.push_back(b);
    }
    std::vector<std::uint8_t> period;
    for (auto b : t.period()) {
        period.push_back(0);
        period.push_back(b);
    }
    return bits_value(EventuallyPeriodicBits(std::move(prefix), std::move(period)));
}

EventuallyPeriodicBits real_to_seq(const Rational& r) {
    EventuallyPeriodicBits e = binary_expansion(r);
    const std::size_t L = e.prefix().size(), p = e.period().size();
    // Even positions must all be 0; beyond the prefix they cycle, so one
    // 2p-window covers every residue an even index can hit.
    for (std::size_t i = 0; i < L + 2 * p; i += 2)
        if (e.bit(i)) throw NotASequenceCode("even-position bit set");
    // Odd-position subsequence t(n) = e(2n+1), periodic with period p (p odd)
    // or p/2 (p even) past the prefix.
    const std::size_t q = p % 2 == 0 ? p / 2 : p;
    std::vector<std::uint8_t> prefix, period;
    for (std::size_t n = 0; n < L; ++n) prefix.push_back(static_cast<std::uint8_t>(e.bit(2 * n + 1)));
    for (std::size_t k = 0; k < q; ++k)
        period.push_back(static_cast<std::uint8_t>(e.bit(2 * (L + k) + 1)));
    return EventuallyPeriodicBits(std::move(prefix), std::move(period));
}

int get_bit(const Rational& r, std::size_t n) { return real_to_seq(r).bit(n); }

Rational set_bit(const Rational& r, std::size_t n, int v) {
    int old = get_bit(r, n);
    if (old == v) return r;
    Rational delta = Rational::pow2(-2 * static_cast<long long>(n) - 2);
    return v ? r + delta : r - delta;
}

} // namespace tbss
