#pragma once

#include "tbss/ratfun.hpp"

#include <optional>
#include <vector>

namespace tbss {

/// Exact, certificate-backed classification of the forward orbit
/// v0, f(v0), f^2(v0), ... of a univariate rational self-map.
struct OrbitClass {
    enum class Kind {
        Constant,            // every value from some point on equals `value`
        FiniteCycle,         // values repeat exactly through `cycle`
        Convergent,          // converges to `limit` (never attained)
        ConvergentPair,      // even/odd subsequences converge to two limits
        DivergesPlus,        // eventually exceeds every bound (strong +inf)
        DivergesMinus,       // strong -inf
        OscillatesUnbounded, // unbounded in both directions (weak +-inf)
        HitsPole,            // a concrete future step evaluates a vanishing denominator
        Unclassified
    };
    enum class Side { Below, Above, Alternating };

    Kind kind = Kind::Unclassified;
    Rational value;                    // Constant
    std::vector<Rational> cycle;       // FiniteCycle: the recurring values in orbit order
    Rational limit;                    // Convergent
    Rational limit_even, limit_odd;    // ConvergentPair
    Side side = Side::Below;           // Convergent approach

    // Exact bounds over the whole orbit including transients; nullopt means
    // unbounded on that side. Bounds are closures (an unattained convergent
    // limit may be the bound).
    std::optional<Rational> inf, sup;

    // Orbit reproduction for replay checks and comparisons.
    RationalFunction map;
    std::size_t var = 1;
    Rational start;

    // Monotonicity certificate: the map is strictly increasing on an interval
    // containing the whole orbit (order of starts is preserved forever).
    bool monotone_map = false;

    /// Finite limit points contributed by this orbit tail.
    std::vector<Rational> finite_limit_points() const;
    bool strong_plus() const { return kind == Kind::DivergesPlus; }
    bool strong_minus() const { return kind == Kind::DivergesMinus; }
    bool weak_both() const { return kind == Kind::OscillatesUnbounded; }
    bool infinite_value_set() const {
        return kind == Kind::Convergent || kind == Kind::ConvergentPair || kind == Kind::DivergesPlus ||
               kind == Kind::DivergesMinus || kind == Kind::OscillatesUnbounded;
    }

    /// The k-th orbit value, by iterated exact evaluation.
    Rational value_at(std::size_t k) const;
};

/// Classify the orbit of `f` (which must involve no variable other than `var`)
/// from start value v0.
OrbitClass classify_orbit(const RationalFunction& f, std::size_t var, const Rational& v0);

/// Eventual outcome of comparing two orbits pass-by-pass with <=.
enum class CompareOutcome {
    StableTrue,  // a_k <= b_k for every future pass
    StableFalse, // a_k > b_k for every future pass
    Retry,       // not yet determined, but more concrete passes can settle it
    Unknown      // not certifiable by this calculus
};

CompareOutcome compare_orbits(const OrbitClass& a, const OrbitClass& b);

} // namespace tbss
