#include "tbss/orbit.hpp"

#include <algorithm>
#include <numeric>

namespace tbss {

namespace {

Rational eval_univariate(const RationalFunction& f, std::size_t var, const Rational& x) {
    std::vector<Rational> args(std::max(var, f.max_var_index()), Rational(0));
    if (var >= 1) args[var - 1] = x;
    return f.eval(args);
}

// coefficient of x^d in a polynomial univariate in `var`
Rational coeff_of(const Polynomial& p, std::size_t var, std::uint32_t d) {
    for (const auto& [m, c] : p.terms()) {
        std::uint32_t e = var <= m.size() ? m[var - 1] : 0;
        bool pure = true;
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i] != 0 && i + 1 != var) pure = false;
        if (pure && e == d) return c;
    }
    return Rational(0);
}

std::uint32_t degree_in(const Polynomial& p, std::size_t var) {
    std::uint32_t d = 0;
    for (const auto& [m, c] : p.terms())
        if (var <= m.size()) d = std::max(d, m[var - 1]);
    return d;
}

struct Affine {
    Rational a, b;
};

std::optional<Affine> affine_of(const RationalFunction& f, std::size_t var) {
    if (f.is_degenerate()) return std::nullopt;
    if (!f.den().is_constant()) return std::nullopt;
    if (degree_in(f.num(), var) > 1) return std::nullopt;
    // den is 1 after canonicalization
    return Affine{coeff_of(f.num(), var, 1), coeff_of(f.num(), var, 0)};
}

struct Mobius {
    Rational p, q, r, s; // (p x + q) / (r x + s)
};

std::optional<Mobius> mobius_of(const RationalFunction& f, std::size_t var) {
    if (f.is_degenerate()) return std::nullopt;
    if (degree_in(f.num(), var) > 1 || degree_in(f.den(), var) != 1) return std::nullopt;
    return Mobius{coeff_of(f.num(), var, 1), coeff_of(f.num(), var, 0), coeff_of(f.den(), var, 1),
                  coeff_of(f.den(), var, 0)};
}

std::optional<Rational> rational_sqrt(const Rational& x) {
    if (x.sign() < 0) return std::nullopt;
    BigInt sn = boost::multiprecision::sqrt(x.num());
    BigInt sd = boost::multiprecision::sqrt(x.den());
    if (sn * sn != x.num() || sd * sd != x.den()) return std::nullopt;
    return Rational(sn, sd);
}

std::optional<Rational> opt_min(const std::optional<Rational>& a, const std::optional<Rational>& b) {
    if (!a || !b) return std::nullopt;
    return min(*a, *b);
}
std::optional<Rational> opt_max(const std::optional<Rational>& a, const std::optional<Rational>& b) {
    if (!a || !b) return std::nullopt;
    return max(*a, *b);
}

OrbitClass classify_impl(const RationalFunction& f, std::size_t var, const Rational& v0, bool allow_double);

// Monotone interval certificate toward fixed point c: increasing map, no pole
// and no other fixed point strictly between, first step moves toward c.
bool certify_monotone_convergence(const Mobius& m, const Rational& v0, const Rational& v1, const Rational& c,
                                  const std::optional<Rational>& other_fp) {
    Rational lo = min(v0, c), hi = max(v0, c);
    Rational det = m.p * m.s - m.q * m.r;
    if (det.sign() <= 0) return false;
    if (!m.r.is_zero()) {
        Rational pole = -m.s / m.r;
        if (lo <= pole && pole <= hi) return false;
    }
    if (other_fp && lo < *other_fp && *other_fp < hi) return false;
    // first step strictly toward c
    if (c > v0) return v0 < v1 && v1 < c;
    return c < v1 && v1 < v0;
}

OrbitClass classify_impl(const RationalFunction& f, std::size_t var, const Rational& v0, bool allow_double) {
    OrbitClass out;
    out.map = f;
    out.var = var;
    out.start = v0;

    // Concrete lookahead: exact cycles (any map) and pole hits.
    constexpr std::size_t kLookahead = 16;
    std::vector<Rational> seen{v0};
    for (std::size_t k = 0; k < kLookahead; ++k) {
        Rational next;
        try {
            next = eval_univariate(f, var, seen.back());
        } catch (const DivisionByZero&) {
            out.kind = OrbitClass::Kind::HitsPole;
            return out;
        }
        for (std::size_t i = 0; i < seen.size(); ++i) {
            if (seen[i] == next) {
                // tail cycles through seen[i..] forever
                std::vector<Rational> cyc(seen.begin() + static_cast<std::ptrdiff_t>(i), seen.end());
                Rational lo = seen[0], hi = seen[0];
                for (const auto& v : seen) {
                    lo = min(lo, v);
                    hi = max(hi, v);
                }
                out.inf = lo;
                out.sup = hi;
                if (cyc.size() == 1) {
                    out.kind = OrbitClass::Kind::Constant;
                    out.value = cyc[0];
                } else {
                    out.kind = OrbitClass::Kind::FiniteCycle;
                    out.cycle = std::move(cyc);
                }
                return out;
            }
        }
        seen.push_back(next);
    }
    const Rational& v1 = seen[1];

    if (auto af = affine_of(f, var)) {
        const Rational &a = af->a, &b = af->b;
        if (a == Rational(1)) {
            // b != 0 (identity would have cycled)
            out.kind = b.sign() > 0 ? OrbitClass::Kind::DivergesPlus : OrbitClass::Kind::DivergesMinus;
            if (b.sign() > 0) out.inf = v0;
            else out.sup = v0;
            out.monotone_map = true;
            return out;
        }
        Rational c = b / (Rational(1) - a);
        if (a.abs() < Rational(1)) {
            out.kind = OrbitClass::Kind::Convergent;
            out.limit = c;
            if (a.sign() > 0) {
                out.side = v0 < c ? OrbitClass::Side::Below : OrbitClass::Side::Above;
                out.monotone_map = true;
                out.inf = min(v0, c);
                out.sup = max(v0, c);
            } else {
                out.side = OrbitClass::Side::Alternating;
                out.inf = min(min(v0, v1), c);
                out.sup = max(max(v0, v1), c);
            }
            return out;
        }
        if (a > Rational(1)) {
            out.monotone_map = true;
            if (v0 > c) {
                out.kind = OrbitClass::Kind::DivergesPlus;
                out.inf = v0;
            } else {
                out.kind = OrbitClass::Kind::DivergesMinus;
                out.sup = v0;
            }
            return out;
        }
        // a < -1 (a == -1 would have cycled)
        out.kind = OrbitClass::Kind::OscillatesUnbounded;
        return out;
    }

    if (auto mo = mobius_of(f, var)) {
        const Mobius& m = *mo;
        Rational det = m.p * m.s - m.q * m.r;
        // Fixed points: r x^2 + (s - p) x - q = 0.
        Rational A = m.r, B = m.s - m.p, C = -m.q;
        Rational disc = B * B - Rational(4) * A * C;
        auto sq = rational_sqrt(disc);
        if (det.sign() > 0 && sq) {
            Rational c1 = (-B - *sq) / (Rational(2) * A);
            Rational c2 = (-B + *sq) / (Rational(2) * A);
            if (c1 > c2) std::swap(c1, c2);
            // Move toward the nearest fixed point in the step direction.
            std::optional<Rational> target, other;
            if (v1 > v0) {
                if (c1 > v0) target = c1, other = c2;
                else if (c2 > v0) target = c2, other = c1;
            } else {
                if (c2 < v0) target = c2, other = c1;
                else if (c1 < v0) target = c1, other = c2;
            }
            if (other && target && *other == *target) other.reset(); // parabolic
            if (target && certify_monotone_convergence(m, v0, v1, *target, other)) {
                out.kind = OrbitClass::Kind::Convergent;
                out.limit = *target;
                out.side = v0 < *target ? OrbitClass::Side::Below : OrbitClass::Side::Above;
                out.monotone_map = true;
                out.inf = min(v0, *target);
                out.sup = max(v0, *target);
                return out;
            }
            return out; // Unclassified
        }
        if (det.sign() < 0 && allow_double) {
            // Decreasing map: analyze f∘f on the even/odd subsequences.
            std::vector<RationalFunction> subs(std::max(var, f.max_var_index()), RationalFunction::constant(0));
            subs[var - 1] = f;
            RationalFunction g = f.composed(subs);
            OrbitClass even = classify_impl(g, var, v0, false);
            OrbitClass odd = classify_impl(g, var, v1, false);
            using K = OrbitClass::Kind;
            if (even.kind == K::HitsPole || odd.kind == K::HitsPole) {
                out.kind = K::HitsPole;
                return out;
            }
            out.inf = opt_min(even.inf, odd.inf);
            out.sup = opt_max(even.sup, odd.sup);
            if (even.kind == K::Convergent && odd.kind == K::Convergent) {
                if (even.limit == odd.limit) {
                    out.kind = K::Convergent;
                    out.limit = even.limit;
                    out.side = OrbitClass::Side::Alternating;
                } else {
                    out.kind = K::ConvergentPair;
                    out.limit_even = even.limit;
                    out.limit_odd = odd.limit;
                }
                return out;
            }
            if (even.kind == K::Constant && odd.kind == K::Constant) {
                out.kind = K::FiniteCycle;
                out.cycle = {even.value, odd.value};
                return out;
            }
            if (even.kind == K::DivergesPlus && odd.kind == K::DivergesPlus) {
                out.kind = K::DivergesPlus;
                return out;
            }
            if (even.kind == K::DivergesMinus && odd.kind == K::DivergesMinus) {
                out.kind = K::DivergesMinus;
                return out;
            }
            if ((even.kind == K::DivergesPlus && odd.kind == K::DivergesMinus) ||
                (even.kind == K::DivergesMinus && odd.kind == K::DivergesPlus)) {
                out.kind = K::OscillatesUnbounded;
                out.inf.reset();
                out.sup.reset();
                return out;
            }
            out.kind = K::Unclassified;
            out.inf.reset();
            out.sup.reset();
            return out;
        }
        return out; // Unclassified
    }

    return out; // Unclassified
}

} // namespace

std::vector<Rational> OrbitClass::finite_limit_points() const {
    switch (kind) {
    case Kind::Constant: return {value};
    case Kind::FiniteCycle: {
        std::vector<Rational> v = cycle;
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }
    case Kind::Convergent: return {limit};
    case Kind::ConvergentPair:
        if (limit_even == limit_odd) return {limit_even};
        return limit_even < limit_odd ? std::vector<Rational>{limit_even, limit_odd}
                                      : std::vector<Rational>{limit_odd, limit_even};
    default: return {};
    }
}

Rational OrbitClass::value_at(std::size_t k) const {
    Rational v = start;
    for (std::size_t i = 0; i < k; ++i) v = eval_univariate(map, var, v);
    return v;
}

OrbitClass classify_orbit(const RationalFunction& f, std::size_t var, const Rational& v0) {
    return classify_impl(f, var, v0, true);
}

namespace {

bool eventually_cyclic(const OrbitClass& o) {
    return o.kind == OrbitClass::Kind::Constant || o.kind == OrbitClass::Kind::FiniteCycle;
}

std::size_t cycle_len(const OrbitClass& o) {
    return o.kind == OrbitClass::Kind::FiniteCycle ? o.cycle.size() : 1;
}

// Envelope of all future values, as a closed optional interval.
void envelope(const OrbitClass& o, std::optional<Rational>& lo, std::optional<Rational>& hi) {
    lo = o.inf;
    hi = o.sup;
}

} // namespace

CompareOutcome compare_orbits(const OrbitClass& a, const OrbitClass& b) {
    using K = OrbitClass::Kind;
    if (a.kind == K::HitsPole || b.kind == K::HitsPole) return CompareOutcome::Retry;
    if (a.kind == K::Unclassified || b.kind == K::Unclassified) return CompareOutcome::Unknown;

    // Identical orbits compare equal forever.
    if (a.map == b.map && a.var == b.var && a.start == b.start) return CompareOutcome::StableTrue;

    // Order preservation along a shared strictly monotone map.
    if (a.map == b.map && a.var == b.var && a.monotone_map && b.monotone_map) {
        bool pole_free = true;
        if (auto mo = mobius_of(a.map, a.var); mo && !mo->r.is_zero()) {
            Rational pole = -mo->s / mo->r;
            auto lo = opt_min(a.inf, b.inf), hi = opt_max(a.sup, b.sup);
            if (!lo || !hi) pole_free = false;
            else pole_free = !(*lo <= pole && pole <= *hi);
        }
        if (pole_free) return a.start <= b.start ? CompareOutcome::StableTrue : CompareOutcome::StableFalse;
    }

    // Exactly periodic pair: enumerate one joint period past the transients.
    if (eventually_cyclic(a) && eventually_cyclic(b)) {
        std::size_t la = cycle_len(a), lb = cycle_len(b);
        std::size_t l = std::lcm(la, lb);
        if (l <= 64) {
            constexpr std::size_t kTransient = 20;
            bool first = true, dec = false, mixed = false;
            for (std::size_t k = 0; k < kTransient + l; ++k) {
                bool d = a.value_at(k) <= b.value_at(k);
                if (first) {
                    dec = d;
                    first = false;
                } else if (d != dec) {
                    mixed = true;
                }
            }
            if (!mixed) return dec ? CompareOutcome::StableTrue : CompareOutcome::StableFalse;
            return CompareOutcome::Retry;
        }
        return CompareOutcome::Retry;
    }

    std::optional<Rational> alo, ahi, blo, bhi;
    envelope(a, alo, ahi);
    envelope(b, blo, bhi);

    // Disjoint envelopes settle it outright.
    if (ahi && blo && *ahi < *blo) return CompareOutcome::StableTrue;
    if (bhi && alo && *bhi < *alo) return CompareOutcome::StableFalse;

    auto limit_of = [](const OrbitClass& o) -> std::optional<Rational> {
        if (o.kind == K::Constant) return o.value;
        if (o.kind == K::Convergent) return o.limit;
        return std::nullopt;
    };
    auto la = limit_of(a), lb = limit_of(b);

    if (la && lb) {
        if (*la == *lb) {
            // One-sided approach against the shared limit value.
            auto side = [&](const OrbitClass& o) -> int {
                if (o.kind == K::Constant) return 0;
                if (o.side == OrbitClass::Side::Below) return -1;
                if (o.side == OrbitClass::Side::Above) return 1;
                return 2; // alternating
            };
            int sa = side(a), sb = side(b);
            if (sa == 2 || sb == 2) return CompareOutcome::Unknown;
            if (sa == sb) return CompareOutcome::Unknown; // same side, different maps
            return sa < sb ? CompareOutcome::StableTrue : CompareOutcome::StableFalse;
        }
        return CompareOutcome::Retry; // envelopes shrink on reclassification
    }

    // Affine-vs-affine difference orbit with a shared slope.
    auto aa = affine_of(a.map, a.var), ab = affine_of(b.map, b.var);
    if (aa && ab && aa->a == ab->a) {
        Rational d0 = a.start - b.start;
        Rational slope = aa->a, offs = aa->b - ab->b;
        // d_{k+1} = slope * d_k + offs
        if (slope == Rational(1)) {
            if (offs.is_zero()) return d0 <= Rational(0) ? CompareOutcome::StableTrue : CompareOutcome::StableFalse;
            // drifting difference: stable once current sign matches drift
            if (offs.sign() > 0) return d0.sign() > 0 ? CompareOutcome::StableFalse : CompareOutcome::Retry;
            return d0.sign() <= 0 ? CompareOutcome::StableTrue : CompareOutcome::Retry;
        }
        if (slope.sign() > 0 && slope < Rational(1)) {
            Rational dl = offs / (Rational(1) - slope);
            if (dl.sign() > 0 && d0.sign() > 0) return CompareOutcome::StableFalse;
            if (dl.sign() < 0 && d0.sign() < 0) return CompareOutcome::StableTrue;
            if (dl.is_zero()) {
                if (d0.sign() < 0) return CompareOutcome::StableTrue;   // monotone toward 0 from below
                if (d0.sign() > 0) return CompareOutcome::StableFalse;
                return CompareOutcome::StableTrue;
            }
            return CompareOutcome::Retry;
        }
        if (slope > Rational(1)) {
            Rational dl = offs / (Rational(1) - slope);
            if (d0 > dl && d0.sign() > 0) return CompareOutcome::StableFalse;
            if (d0 < dl && d0.sign() < 0) return CompareOutcome::StableTrue;
            return CompareOutcome::Retry;
        }
        return CompareOutcome::Unknown;
    }

    // Divergence overwhelms any bounded side, once past it.
    bool a_up = a.kind == K::DivergesPlus, a_dn = a.kind == K::DivergesMinus;
    bool b_up = b.kind == K::DivergesPlus, b_dn = b.kind == K::DivergesMinus;
    if (a_up && bhi) return CompareOutcome::Retry;   // will exceed; not yet disjoint
    if (b_dn && alo) return CompareOutcome::Retry;   // will drop below
    if (b_up && ahi) return CompareOutcome::Retry;
    if (a_dn && blo) return CompareOutcome::Retry;
    if (a_up && b_dn) return CompareOutcome::Retry;
    if (a_dn && b_up) return CompareOutcome::Retry;

    return CompareOutcome::Unknown;
}

} // namespace tbss
