#pragma once

#include "tbss/bits.hpp"
#include "tbss/ordinal.hpp"

#include <map>

namespace tbss {

/// The paper's ⊕ operator: bit rho(i, rank of alpha) of the result is bit i of
/// values[alpha]; all other bits are 0. Positions absent from the map are zero
/// strands. Throws NonPeriodicResult when a nonzero strand has infinitely many
/// 1-bits (the spread through rho is then not eventually periodic, so the
/// result leaves the rationals).
Rational interleave(const std::map<Ordinal, Rational>& values, OrdinalEnumeration& h, const Ordinal& lambda);

} // namespace tbss
