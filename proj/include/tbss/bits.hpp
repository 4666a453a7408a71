#pragma once

#include "tbss/rational.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tbss {

struct NotASequenceCode : std::runtime_error {
    NotASequenceCode(const std::string& why) : std::runtime_error("not a sequence code: " + why) {}
};

struct NonPeriodicResult : std::runtime_error {
    NonPeriodicResult(const std::string& why) : std::runtime_error("result not eventually periodic: " + why) {}
};

/// An eventually periodic infinite bit sequence, canonical form: the period is
/// primitive and the prefix is shortest. The all-zero tail is period "0".
class EventuallyPeriodicBits {
public:
    EventuallyPeriodicBits() : period_{0} {}
    EventuallyPeriodicBits(std::vector<std::uint8_t> prefix, std::vector<std::uint8_t> period);

    /// Finite-support sequence: the given bits then zeros forever.
    static EventuallyPeriodicBits finite(std::vector<std::uint8_t> bits);

    int bit(std::size_t n) const {
        return n < prefix_.size() ? prefix_[n] : period_[(n - prefix_.size()) % period_.size()];
    }

    const std::vector<std::uint8_t>& prefix() const { return prefix_; }
    const std::vector<std::uint8_t>& period() const { return period_; }

    bool all_zero() const;
    /// True when only finitely many bits are 1 (canonical period is "0").
    bool finite_support() const;
    std::vector<std::size_t> support() const; // requires finite_support()

    friend bool operator==(const EventuallyPeriodicBits&, const EventuallyPeriodicBits&) = default;

    /// Renders as prefix(period), e.g. "10(01)".
    std::string str() const;

private:
    std::vector<std::uint8_t> prefix_, period_;
};

/// Raw fractional binary expansion of r ∈ [0,1): r = Σ bits[i]·2^-(i+1),
/// terminating expansion for dyadics.
EventuallyPeriodicBits binary_expansion(const Rational& r);

/// The real in [0,1) whose odd-position expansion bits carry t and whose even
/// positions are 0.
Rational seq_to_real(const EventuallyPeriodicBits& t);

/// Inverse of seq_to_real; throws NotASequenceCode if r is out of range or an
/// even-position bit is set.
EventuallyPeriodicBits real_to_seq(const Rational& r);

int get_bit(const Rational& r, std::size_t n);
Rational set_bit(const Rational& r, std::size_t n, int v);

} // namespace tbss
