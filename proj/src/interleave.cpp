#include "tbss/interleave.hpp"

namespace tbss {

Rational interleave(const std::map<Ordinal, Rational>& values, OrdinalEnumeration& h, const Ordinal& lambda) {
    std::vector<std::uint8_t> bits;
    auto set = [&](std::uint64_t i) {
        if (bits.size() <= i) bits.resize(i + 1, 0);
        bits[static_cast<std::size_t>(i)] = 1;
    };
    for (const auto& [alpha, value] : values) {
        if (!(alpha < lambda)) throw std::invalid_argument("interleave: position not below lambda");
        if (value.is_zero()) continue;
        EventuallyPeriodicBits t = real_to_seq(value);
        if (!t.finite_support())
            throw NonPeriodicResult("strand at rank " + std::to_string(h.rank_of(alpha)) + " has infinite support");
        std::uint64_t rank = h.rank_of(alpha);
        for (std::size_t i : t.support()) set(rho(i, rank));
    }
    return seq_to_real(EventuallyPeriodicBits::finite(std::move(bits)));
}

} // namespace tbss
