#include "tbss/engine.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <sstream>

namespace tbss {

// ---------------------------------------------------------------------------
// Basics

bool Snapshot::dominated_by(const Snapshot& other) const {
    if (pc > other.pc) return false;
    for (std::size_t i = 0; i < regs.size(); ++i)
        if (regs[i] > other.regs[i]) return false;
    return true;
}

std::string Snapshot::str() const {
    std::string out = "pc=" + std::to_string(pc) + " regs=";
    for (std::size_t i = 0; i < regs.size(); ++i) {
        if (i) out += ",";
        out += regs[i].str();
    }
    return out;
}

Variant parse_variant(std::string_view name) {
    if (name == "itbm") return Variant::Itbm;
    if (name == "witbm") return Variant::Witbm;
    if (name == "sitbm") return Variant::Sitbm;
    if (name == "bsitbm") return Variant::Bsitbm;
    if (name == "ssitbm") return Variant::Ssitbm;
    throw ParseError(0, "unknown variant '" + std::string(name) + "'");
}

std::string_view variant_name(Variant v) {
    switch (v) {
    case Variant::Itbm: return "itbm";
    case Variant::Witbm: return "witbm";
    case Variant::Sitbm: return "sitbm";
    case Variant::Bsitbm: return "bsitbm";
    case Variant::Ssitbm: return "ssitbm";
    }
    return "?";
}

std::string_view crash_reason_name(CrashReason r) {
    switch (r) {
    case CrashReason::DivisionByZero: return "division-by-zero";
    case CrashReason::UndefinedLimit: return "undefined-limit";
    case CrashReason::EmptyStrongLimitSet: return "empty-strong-limit-set";
    case CrashReason::RestrictionViolated: return "restriction-violated";
    }
    return "?";
}

std::string_view trace_event_name(TraceEvent e) {
    switch (e) {
    case TraceEvent::Step: return "step";
    case TraceEvent::Limit: return "limit";
    case TraceEvent::Accel: return "accel";
    case TraceEvent::Crash: return "crash";
    case TraceEvent::Halt: return "halt";
    }
    return "?";
}

StepOutcome step(const Program& p, const Snapshot& s) {
    StepOutcome out;
    if (s.pc >= p.instructions.size()) {
        out.kind = StepOutcome::Kind::Halt;
        out.output = s.regs.at(0);
        return out;
    }
    const Instruction& ins = p.instructions[s.pc];
    switch (ins.kind) {
    case Instruction::Kind::Halt:
        out.kind = StepOutcome::Kind::Halt;
        out.output = s.regs.at(0);
        return out;
    case Instruction::Kind::Compute: {
        Rational v;
        try {
            v = ins.fn.eval(s.regs);
        } catch (const DivisionByZero&) {
            out.kind = StepOutcome::Kind::Crash;
            return out;
        }
        out.kind = StepOutcome::Kind::Next;
        out.next = s;
        out.next.regs[ins.target - 1] = std::move(v);
        out.next.pc = s.pc + 1;
        return out;
    }
    case Instruction::Kind::Branch:
        out.kind = StepOutcome::Kind::Next;
        out.next = s;
        out.next.pc = s.regs[ins.left - 1] <= s.regs[ins.right - 1] ? ins.if_le : ins.if_gt;
        return out;
    }
    out.kind = StepOutcome::Kind::Crash;
    return out;
}

// ---------------------------------------------------------------------------
// Limit sets

std::vector<LimitSetDescriptor> limit_sets(const std::vector<TailDescriptor>& tails) {
    std::vector<LimitSetDescriptor> out;
    out.reserve(tails.size());
    for (const auto& tail : tails) {
        LimitSetDescriptor d;
        bool up_all_strong = !tail.offsets.empty(), dn_all_strong = !tail.offsets.empty();
        bool up_any = false, dn_any = false;
        for (const auto& off : tail.offsets) {
            const OrbitClass& o = off.orbit;
            if (off.kind == TailDescriptor::Kind::Unclassified)
                throw std::invalid_argument("limit_sets: unclassified offset");
            for (const auto& v : o.finite_limit_points()) d.finite_points.push_back(v);
            up_all_strong = up_all_strong && o.strong_plus();
            dn_all_strong = dn_all_strong && o.strong_minus();
            up_any = up_any || o.strong_plus() || o.weak_both();
            dn_any = dn_any || o.strong_minus() || o.weak_both();
        }
        std::sort(d.finite_points.begin(), d.finite_points.end());
        d.finite_points.erase(std::unique(d.finite_points.begin(), d.finite_points.end()), d.finite_points.end());
        bool has_finite = !d.finite_points.empty();
        if (up_all_strong && !has_finite && !dn_any) d.plus_inf = InfFlag::StrongLimit;
        else if (up_any) d.plus_inf = InfFlag::LimitPoint;
        if (dn_all_strong && !has_finite && !up_any) d.minus_inf = InfFlag::StrongLimit;
        else if (dn_any) d.minus_inf = InfFlag::LimitPoint;
        out.push_back(std::move(d));
    }
    return out;
}

LimitOutcome apply_limit_rule(Variant v, const std::vector<LimitSetDescriptor>& sets,
                              const std::set<std::size_t>& pc_tail) {
    LimitOutcome out;
    if (pc_tail.empty()) throw std::invalid_argument("apply_limit_rule: empty pc tail");
    Snapshot snap;
    snap.pc = *pc_tail.begin();
    snap.regs.reserve(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const LimitSetDescriptor& d = sets[i];
        const bool has_strong = d.plus_inf == InfFlag::StrongLimit || d.minus_inf == InfFlag::StrongLimit;
        const bool min_finite_exists = !d.finite_points.empty();
        const bool cauchy = !d.infinite_family && d.finite_points.size() == 1 && d.plus_inf == InfFlag::Absent &&
                            d.minus_inf == InfFlag::Absent;
        auto crash = [&](CrashReason r) {
            out.crash = r;
            out.crash_register = i + 1;
        };
        Rational value;
        switch (v) {
        case Variant::Itbm:
            if (cauchy) value = d.finite_points[0];
            else crash(CrashReason::UndefinedLimit);
            break;
        case Variant::Witbm:
            if (cauchy) value = d.finite_points[0];
            else if (has_strong) value = Rational(0);
            else crash(CrashReason::UndefinedLimit);
            break;
        case Variant::Sitbm:
            if (min_finite_exists) {
                // min(SLimP) is the least finite point; the assigned value is
                // min(LimP), which is -inf (undefined) when -inf is a limit point.
                if (d.minus_inf != InfFlag::Absent) crash(CrashReason::UndefinedLimit);
                else value = d.finite_points[0];
            } else if (d.infinite_family) {
                // infinitely many finite points, unbounded below: no minimum
                crash(CrashReason::UndefinedLimit);
            } else if (has_strong) {
                value = Rational(0);
            } else {
                crash(CrashReason::EmptyStrongLimitSet);
            }
            break;
        case Variant::Bsitbm:
            if (min_finite_exists) value = d.finite_points[0];
            else crash(CrashReason::UndefinedLimit);
            break;
        case Variant::Ssitbm:
            if (min_finite_exists && d.minus_inf == InfFlag::Absent) value = d.finite_points[0];
            else value = Rational(0);
            break;
        }
        if (out.crash) return out;
        snap.regs.push_back(std::move(value));
    }
    out.snapshot = std::move(snap);
    return out;
}

// ---------------------------------------------------------------------------
// Acceleration (level 1, public)

namespace {

AccelerationResult make_recurrence_result(const Program& p, const std::vector<Snapshot>& history, std::size_t i,
                                          std::size_t k);
AccelerationResult accel_orbit(const Program& p, const std::vector<Snapshot>& history,
                               const std::vector<std::size_t>& candidates, const AccelOptions& opts);

std::optional<std::size_t> pure_variable_of(const RationalFunction& f) {
    if (!f.den().is_constant() || f.num().terms().size() != 1) return std::nullopt;
    const auto& [m, c] = *f.num().terms().begin();
    if (!(c == Rational(1))) return std::nullopt;
    std::size_t var = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] == 1 && var == 0) var = i + 1;
        else if (m[i] != 0) return std::nullopt;
    }
    return var == 0 ? std::nullopt : std::optional<std::size_t>(var);
}

TailDescriptor::Kind label_for(const RationalFunction& map, const OrbitClass& o) {
    using K = OrbitClass::Kind;
    if (o.kind == K::Unclassified || o.kind == K::HitsPole) return TailDescriptor::Kind::Unclassified;
    if (o.kind == K::Constant) return TailDescriptor::Kind::Constant;
    if (o.kind == K::FiniteCycle) return TailDescriptor::Kind::FiniteSet;
    // moving orbit: label by map shape
    if (map.den().is_constant()) {
        if (o.kind == K::DivergesPlus) return TailDescriptor::Kind::MonotoneUp;
        if (o.kind == K::DivergesMinus) return TailDescriptor::Kind::MonotoneDown;
        return TailDescriptor::Kind::AffineOrbit;
    }
    return TailDescriptor::Kind::MobiusOrbit;
}

// Full-cycle symbolic composition starting at history position `from`,
// for `count` steps.
std::vector<RationalFunction> compose_steps(const Program& p, const std::vector<Snapshot>& history,
                                            std::size_t from, std::size_t count) {
    std::vector<RationalFunction> state;
    const std::size_t n = history.empty() ? 0 : history[0].regs.size();
    state.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) state.push_back(RationalFunction::variable(i));
    for (std::size_t k = 0; k < count; ++k) {
        const Instruction& ins = p.instructions[history[from + k].pc];
        if (ins.kind == Instruction::Kind::Compute) state[ins.target - 1] = ins.fn.composed(state);
    }
    return state;
}

struct OffsetAnalysis {
    std::vector<std::vector<OrbitClass>> classes; // [offset][register]
    std::vector<std::vector<RationalFunction>> maps; // [offset]: per-register self map
};

} // namespace

AccelerationResult accelerate(const Program& p, const std::vector<Snapshot>& history, const AccelOptions& opts) {
    AccelerationResult res;
    const std::size_t N = history.size();
    if (N < 2) return res;
    const std::size_t n = history[0].regs.size();

    // Exact full-state recurrence: sound from a single repeated snapshot.
    {
        std::map<Snapshot, std::size_t> seen;
        for (std::size_t k = 0; k < N; ++k) {
            auto [it, fresh] = seen.emplace(history[k], k);
            if (!fresh) {
                std::size_t i = it->second, per = k - i;
                res.kind = AccelerationResult::Kind::Cycle;
                res.start = i;
                res.period = per;
                res.composed = compose_steps(p, history, i, per);
                res.tails.assign(n, {});
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t j = 0; j < per; ++j) {
                        OrbitClass o;
                        o.kind = OrbitClass::Kind::Constant;
                        o.value = history[i + j].regs[r];
                        o.inf = o.sup = o.value;
                        o.map = RationalFunction::variable(r + 1);
                        o.var = r + 1;
                        o.start = o.value;
                        o.monotone_map = true;
                        res.tails[r].offsets.push_back({TailDescriptor::Kind::Constant, std::move(o)});
                    }
                }
                return res;
            }
        }
    }

    // Orbit path: pc-periodic suffix with drifting values.
    const std::size_t W = opts.verification_passes;
    std::vector<std::size_t> candidates;
    {
        std::size_t last_pc = history[N - 1].pc;
        for (std::size_t k = N - 1; k-- > 0 && candidates.size() < 6;) {
            if (history[k].pc == last_pc) {
                std::size_t per = (N - 1) - k;
                if (per <= opts.max_period) candidates.push_back(per);
            }
        }
    }
    for (std::size_t per : candidates) {
        if (N < W * per + 1) continue;
        const std::size_t t0 = (N - 1) - W * per;
        bool periodic = true;
        for (std::size_t k = t0; k + per < N && periodic; ++k)
            if (history[k].pc != history[k + per].pc) periodic = false;
        if (!periodic) continue;

        // Compose the cycle maps: prefix/suffix products give every offset.
        std::vector<std::vector<RationalFunction>> prefix(per + 1), suffix(per + 1);
        prefix[0] = compose_steps(p, history, t0, 0);
        for (std::size_t j = 1; j <= per; ++j) {
            prefix[j] = prefix[j - 1];
            const Instruction& ins = p.instructions[history[t0 + j - 1].pc];
            if (ins.kind == Instruction::Kind::Compute) prefix[j][ins.target - 1] = ins.fn.composed(prefix[j - 1]);
        }
        // suffix[j] = composition of steps j..per-1
        suffix[per] = prefix[0];
        for (std::size_t j = per; j-- > 0;) {
            const Instruction& ins = p.instructions[history[t0 + j].pc];
            std::vector<RationalFunction> one = prefix[0];
            if (ins.kind == Instruction::Kind::Compute) one[ins.target - 1] = ins.fn;
            suffix[j].resize(one.size());
            for (std::size_t r = 0; r < one.size(); ++r) suffix[j][r] = suffix[j + 1][r].composed(one);
        }

        OffsetAnalysis oa;
        oa.classes.assign(per, std::vector<OrbitClass>(n));
        oa.maps.assign(per, {});
        bool unclassifiable = false, no_cycle_yet = false;
        std::size_t bad_register = 0;
        for (std::size_t j = 0; j < per && !unclassifiable && !no_cycle_yet; ++j) {
            // phi^{(j)} = prefix_j o suffix_j
            std::vector<RationalFunction> phi(n);
            for (std::size_t r = 0; r < n; ++r) phi[r] = prefix[j][r].composed(suffix[j]);
            oa.maps[j] = phi;
            // latest observed position with this offset
            std::size_t pos = t0 + (W - 1) * per + j;
            if (pos >= N) pos -= per;
            // invariant registers at this offset: value constant across passes
            std::vector<bool> invariant(n, false);
            for (std::size_t r = 0; r < n; ++r) invariant[r] = pure_variable_of(phi[r]) == r + 1;
            for (std::size_t r = 0; r < n && !unclassifiable && !no_cycle_yet; ++r) {
                const Rational& start = history[pos].regs[r];
                RationalFunction f = phi[r];
                std::size_t var = r + 1;
                if (auto copy = pure_variable_of(f); copy && *copy != r + 1) {
                    // pure copy: the orbit continues along the source's map
                    std::size_t src = *copy;
                    // chase one level of copies; longer chains fall through to
                    // the substitution path or fail conservatively
                    if (pure_variable_of(phi[src - 1]) == src) {
                        // copy of an invariant: constant from the next pass
                        OrbitClass o;
                        o.kind = OrbitClass::Kind::Constant;
                        o.value = history[pos].regs[src - 1];
                        o.inf = min(start, o.value);
                        o.sup = max(start, o.value);
                        o.map = RationalFunction::variable(src);
                        o.var = src;
                        o.start = o.value;
                        o.monotone_map = true;
                        oa.classes[j][r] = std::move(o);
                        continue;
                    }
                    f = phi[src - 1];
                    var = src;
                }
                if (!f.univariate_in(var)) {
                    // substitute invariant registers by their concrete values
                    std::vector<RationalFunction> subs;
                    subs.reserve(n);
                    bool ok = true;
                    for (std::size_t q = 0; q < n; ++q) {
                        if (q + 1 == var) subs.push_back(RationalFunction::variable(var));
                        else if (invariant[q]) subs.push_back(RationalFunction::constant(history[pos].regs[q]));
                        else subs.push_back(RationalFunction::variable(q + 1));
                    }
                    (void)ok;
                    f = f.composed(subs);
                    if (!f.univariate_in(var)) {
                        unclassifiable = true;
                        bad_register = r + 1;
                        break;
                    }
                }
                OrbitClass o = classify_orbit(f, var, start);
                if (o.kind == OrbitClass::Kind::HitsPole) {
                    no_cycle_yet = true; // a concrete future step will crash
                    break;
                }
                if (o.kind == OrbitClass::Kind::Unclassified) {
                    unclassifiable = true;
                    bad_register = r + 1;
                    break;
                }
                oa.classes[j][r] = std::move(o);
            }
        }
        if (no_cycle_yet) return res;
        if (unclassifiable) {
            res.kind = AccelerationResult::Kind::Unclassifiable;
            res.register_index = bad_register;
            return res;
        }

        // Branch stability at every offset.
        bool retry = false;
        for (std::size_t j = 0; j < per && !unclassifiable && !retry; ++j) {
            const Instruction& ins = p.instructions[history[t0 + j].pc];
            if (ins.kind != Instruction::Kind::Branch || ins.left == ins.right) continue;
            std::size_t pos = t0 + (W - 1) * per + j;
            if (pos >= N) pos -= per;
            bool observed = history[pos].regs[ins.left - 1] <= history[pos].regs[ins.right - 1];
            CompareOutcome cmp = compare_orbits(oa.classes[j][ins.left - 1], oa.classes[j][ins.right - 1]);
            if (cmp == CompareOutcome::Retry) retry = true;
            else if (cmp == CompareOutcome::Unknown) {
                unclassifiable = true;
                bad_register = ins.left;
            } else if ((cmp == CompareOutcome::StableTrue) != observed) {
                retry = true; // the decision will flip at a concrete future pass
            }
        }
        if (retry) return res; // NoCycleYet
        if (unclassifiable) {
            res.kind = AccelerationResult::Kind::Unclassifiable;
            res.register_index = bad_register;
            return res;
        }

        res.kind = AccelerationResult::Kind::Cycle;
        res.start = t0;
        res.period = per;
        res.composed = oa.maps[0];
        res.tails.assign(n, {});
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < per; ++j)
                res.tails[r].offsets.push_back({label_for(oa.maps[j][r], oa.classes[j][r]), oa.classes[j][r]});
        return res;
    }
    return res; // NoCycleYet
}

// ---------------------------------------------------------------------------
// Restriction

bool Restriction::allows(const Rational& x) const {
    switch (kind) {
    case Kind::Rationals: return true;
    case Kind::Integers: return x.is_integer();
    case Kind::Dyadics: {
        BigInt d = x.den();
        while (d % 2 == 0) d /= 2;
        return d == 1;
    }
    case Kind::FiniteSet: return std::find(values.begin(), values.end(), x) != values.end();
    }
    return false;
}

Restriction Restriction::parse(std::string_view spec) {
    Restriction r;
    if (spec == "rationals") r.kind = Kind::Rationals;
    else if (spec == "integers") r.kind = Kind::Integers;
    else if (spec == "dyadics") r.kind = Kind::Dyadics;
    else if (spec.starts_with("set:")) {
        r.kind = Kind::FiniteSet;
        std::string_view rest = spec.substr(4);
        while (!rest.empty()) {
            auto comma = rest.find(',');
            std::string_view item = rest.substr(0, comma);
            r.values.push_back(Rational::parse(item));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        std::sort(r.values.begin(), r.values.end());
        r.values.erase(std::unique(r.values.begin(), r.values.end()), r.values.end());
        if (r.values.empty()) throw ParseError(0, "empty restriction set");
    } else {
        throw ParseError(0, "unknown restriction '" + std::string(spec) + "'");
    }
    return r;
}

std::string Restriction::str() const {
    switch (kind) {
    case Kind::Rationals: return "rationals";
    case Kind::Integers: return "integers";
    case Kind::Dyadics: return "dyadics";
    case Kind::FiniteSet: {
        std::string out = "set:";
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out += ",";
            out += values[i].str();
        }
        return out;
    }
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Verdict / trace rendering

std::string Verdict::describe() const {
    switch (kind) {
    case Kind::Halted: return "halted at " + stage.str() + ", output " + output.str();
    case Kind::Diverged: return "diverged, strong loop (" + loop_start.str() + ", " + loop_end.str() + ")";
    case Kind::Crashed:
        return "crashed at " + stage.str() + ", " + std::string(crash_reason_name(crash_reason));
    case Kind::Unresolved:
        return "unresolved at " + stage.str() + ", register R" + std::to_string(register_index);
    case Kind::BudgetExhausted: return "budget exhausted at " + stage.str();
    case Kind::Aborted: return "aborted at " + stage.str();
    }
    return "?";
}

std::string Trace::render() const {
    std::ostringstream out;
    for (const auto& r : records) {
        out << "stage=" << r.stage.str() << " pc=" << r.snap.pc << " regs=";
        for (std::size_t i = 0; i < r.snap.regs.size(); ++i) {
            if (i) out << ",";
            out << r.snap.regs[i].str();
        }
        out << " event=" << trace_event_name(r.event) << "\n";
    }
    if (dropped) out << "# " << dropped << " step records dropped\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Strong-loop scan over a retained stream

std::optional<LoopWitnessRaw> strong_loop_scan(const std::vector<StreamEntry>& entries) {
    std::map<Snapshot, std::vector<std::size_t>> index;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (!entries[k].is_point) continue;
        auto it = index.find(entries[k].snap);
        if (it != index.end()) {
            for (std::size_t i : it->second) {
                bool ok = true;
                for (std::size_t m = i + 1; m < k && ok; ++m) {
                    const StreamEntry& e = entries[m];
                    if (e.is_point) {
                        ok = entries[k].snap.dominated_by(e.snap);
                    } else {
                        if (e.min_pc < entries[k].snap.pc) ok = false;
                        for (std::size_t r = 0; r < entries[k].snap.regs.size() && ok; ++r) {
                            if (!e.reg_inf[r] || *e.reg_inf[r] < entries[k].snap.regs[r]) ok = false;
                        }
                    }
                }
                if (ok) return LoopWitnessRaw{entries[i].stage, entries[k].stage};
            }
        }
        index[entries[k].snap].push_back(k);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// The transfinite run engine

namespace {

struct RegSummary {
    std::optional<Rational> inf, sup; // closed bounds; nullopt = unbounded
    std::optional<std::vector<Rational>> exact; // distinct values when few; nullopt = many/infinite
    bool single = true;
    bool has_any = false;

    void note_value(const Rational& v) {
        if (!has_any) {
            inf = sup = v;
            exact = std::vector<Rational>{v};
            has_any = true;
            return;
        }
        if (single && !(v == *exact->begin() && exact->size() == 1)) single = false;
        if (inf && v < *inf) inf = v;
        if (sup && v > *sup) sup = v;
        if (exact) {
            auto it = std::lower_bound(exact->begin(), exact->end(), v);
            if (it == exact->end() || !(*it == v)) {
                if (exact->size() >= 32) exact.reset();
                else exact->insert(it, v);
            }
        }
    }
    void note_orbit(const OrbitClass& o) {
        has_any = true;
        single = false;
        if (o.infinite_value_set()) exact.reset();
        else if (exact)
            for (const auto& v : o.finite_limit_points()) {
                auto it = std::lower_bound(exact->begin(), exact->end(), v);
                if (it == exact->end() || !(*it == v)) {
                    if (exact->size() >= 32) { exact.reset(); break; }
                    exact->insert(it, v);
                }
            }
        if (!o.inf) inf.reset();
        else if (inf && *o.inf < *inf) inf = o.inf;
        if (!o.sup) sup.reset();
        else if (sup && *o.sup > *sup) sup = o.sup;
    }
    void merge(const RegSummary& other) {
        if (!other.has_any) return;
        if (!has_any) {
            *this = other;
            return;
        }
        single = false;
        if (!other.inf) inf.reset();
        else if (inf && *other.inf < *inf) inf = other.inf;
        if (!other.sup) sup.reset();
        else if (sup && *other.sup > *sup) sup = other.sup;
        if (!other.exact) exact.reset();
        else if (exact) {
            for (const auto& v : *other.exact) {
                auto it = std::lower_bound(exact->begin(), exact->end(), v);
                if (it == exact->end() || !(*it == v)) {
                    if (exact->size() >= 32) { exact.reset(); break; }
                    exact->insert(it, v);
                }
            }
        }
    }
    Rational single_value() const { return (*exact)[0]; }
};

struct BlockSummary {
    std::vector<RegSummary> regs;
    std::size_t min_pc = static_cast<std::size_t>(-1);
    bool valid = false;

    void init(std::size_t n) {
        regs.assign(n, {});
        min_pc = static_cast<std::size_t>(-1);
        valid = true;
    }
    void note_point(const Snapshot& s) {
        for (std::size_t r = 0; r < s.regs.size(); ++r) regs[r].note_value(s.regs[r]);
        min_pc = std::min(min_pc, s.pc);
    }
    void merge(const BlockSummary& o) {
        for (std::size_t r = 0; r < regs.size(); ++r) regs[r].merge(o.regs[r]);
        min_pc = std::min(min_pc, o.min_pc);
    }
};

// Certificate of a completed block, for the structural drift path at the next
// level up.
struct BlockCert {
    bool valid = false;
    std::vector<std::size_t> pcs;                       // full observed pc pattern fingerprint
    std::optional<std::vector<RationalFunction>> block_map; // entry -> next entry
};

struct LevelEntry {
    Ordinal stage;
    Snapshot snap;
    BlockSummary incoming; // summary over [previous entry stage, this stage)
    BlockCert cert;        // certificate of the incoming block
};

struct LevelState {
    std::vector<LevelEntry> entries;
    BlockSummary accum; // running summary of the current (incomplete) block at this level
};

struct Runner {
    const Program& p;
    const RunOptions& opts;
    const std::size_t n;

    Snapshot snap;
    Ordinal stage;

    std::vector<Snapshot> hist; // current omega-block, successor snapshots
    Ordinal block_start;
    BlockSummary accum1;
    std::vector<LevelState> levels; // index d-2 for level d in 2..depth+1

    std::vector<StreamEntry> retained;
    std::map<Snapshot, std::vector<std::size_t>> eq_index;
    std::size_t block_first_retained = 0; // first retained index of current block

    Trace trace;
    std::size_t steps_traced_in_block = 0;
    std::vector<std::pair<Ordinal, Snapshot>> captured;

    Verdict verdict;
    bool done = false;

    Runner(const Program& p_, const std::vector<Rational>& inputs, const RunOptions& o)
        : p(p_), opts(o), n(p_.register_count) {
        snap.regs.assign(n, Rational(0));
        for (std::size_t i = 0; i < inputs.size(); ++i) snap.regs[i] = inputs[i];
        snap.pc = 0;
        stage = Ordinal();
        hist.push_back(snap);
        block_start = Ordinal();
        accum1.init(n);
        accum1.note_point(snap);
        levels.assign(opts.depth, {});
        for (auto& l : levels) {
            l.entries.push_back({Ordinal(), snap, {}, {}});
            l.accum.init(n);
            l.accum.note_point(snap);
        }
    }

    void finish(Verdict v) {
        verdict = std::move(v);
        done = true;
    }

    void add_trace(TraceEvent e) {
        if (e == TraceEvent::Step) {
            if (steps_traced_in_block >= opts.trace_window) {
                ++trace.dropped;
                return;
            }
            ++steps_traced_in_block;
        }
        trace.records.push_back({stage, snap, e});
    }

    bool notify(TraceEvent e) {
        for (const auto& c : opts.capture_stages)
            if (c == stage) captured.emplace_back(stage, snap);
        if (opts.observer && !opts.observer(stage, snap, e)) {
            Verdict v;
            v.kind = Verdict::Kind::Aborted;
            v.stage = stage;
            finish(std::move(v));
            return false;
        }
        return true;
    }

    // Retained-stream bookkeeping -----------------------------------------

    void add_retained_point() {
        StreamEntry e;
        e.is_point = true;
        e.stage = stage;
        e.snap = snap;
        retained.push_back(std::move(e));
        scan_new_point(retained.size() - 1);
    }

    void add_retained_interval(const Ordinal& from, const Ordinal& to,
                               std::vector<std::optional<Rational>> reg_inf, std::size_t min_pc) {
        StreamEntry e;
        e.is_point = false;
        e.stage = from;
        e.stage_end = to;
        e.reg_inf = std::move(reg_inf);
        e.min_pc = min_pc;
        retained.push_back(std::move(e));
    }

    void scan_new_point(std::size_t k) {
        if (done) return;
        const Snapshot& s = retained[k].snap;
        auto it = eq_index.find(s);
        if (it != eq_index.end()) {
            for (std::size_t i : it->second) {
                bool ok = true;
                for (std::size_t m = i + 1; m < k && ok; ++m) {
                    const StreamEntry& e = retained[m];
                    if (e.is_point) {
                        ok = s.dominated_by(e.snap);
                    } else {
                        if (e.min_pc < s.pc) ok = false;
                        for (std::size_t r = 0; r < n && ok; ++r)
                            if (!e.reg_inf[r] || *e.reg_inf[r] < s.regs[r]) ok = false;
                    }
                }
                if (ok) {
                    Verdict v;
                    v.kind = Verdict::Kind::Diverged;
                    v.loop_start = retained[i].stage;
                    v.loop_end = retained[k].stage;
                    v.stage = retained[k].stage;
                    finish(std::move(v));
                    return;
                }
            }
        }
        eq_index[s].push_back(k);
    }

    void rebuild_eq_index() {
        eq_index.clear();
        for (std::size_t k = 0; k < retained.size(); ++k)
            if (retained[k].is_point) eq_index[retained[k].snap].push_back(k);
    }

    // Replace the current block's retained points (which duplicate `hist`)
    // by: entry point, a prefix interval, the last observed cycle pass as
    // points, and the accelerated tail as an interval.
    void compress_block(std::size_t cycle_start, std::size_t period, const std::vector<TailDescriptor>& tails,
                        const Ordinal& limit_stage) {
        std::vector<StreamEntry> tail_entries;
        // keep the last full pass [hist.size()-period, hist.size())
        std::size_t keep_from = hist.size() > period ? hist.size() - period : 0;
        (void)cycle_start;
        std::vector<StreamEntry> kept;
        // entry point of the block
        std::size_t base = block_first_retained;
        kept.push_back(retained[base]); // block entry (stage == block_start)
        if (keep_from > 1) {
            // interval covering hist[1 .. keep_from)
            std::vector<std::optional<Rational>> inf(n);
            std::size_t min_pc = static_cast<std::size_t>(-1);
            bool any = false;
            for (std::size_t t = 1; t < keep_from; ++t) {
                for (std::size_t r = 0; r < n; ++r) {
                    if (!any) inf[r] = hist[t].regs[r];
                    else if (inf[r] && hist[t].regs[r] < *inf[r]) inf[r] = hist[t].regs[r];
                }
                min_pc = std::min(min_pc, hist[t].pc);
                any = true;
            }
            if (any) {
                StreamEntry e;
                e.is_point = false;
                e.stage = block_start;
                e.stage_end = limit_stage;
                e.reg_inf = std::move(inf);
                e.min_pc = min_pc;
                kept.push_back(std::move(e));
            }
        }
        for (std::size_t t = std::max<std::size_t>(keep_from, 1); t < hist.size(); ++t) {
            StreamEntry e;
            e.is_point = true;
            e.stage = block_start + Ordinal(static_cast<unsigned long long>(t));
            e.snap = hist[t];
            kept.push_back(std::move(e));
        }
        // accelerated tail: orbit infima per register
        {
            std::vector<std::optional<Rational>> inf(n);
            std::size_t min_pc = static_cast<std::size_t>(-1);
            for (std::size_t r = 0; r < n; ++r) {
                std::optional<Rational> lo;
                bool unbounded = false;
                for (const auto& off : tails[r].offsets) {
                    if (!off.orbit.inf) {
                        unbounded = true;
                        break;
                    }
                    if (!lo || *off.orbit.inf < *lo) lo = off.orbit.inf;
                }
                inf[r] = unbounded ? std::nullopt : lo;
            }
            for (std::size_t j = 0; j < period; ++j)
                min_pc = std::min(min_pc, hist[hist.size() - period + j].pc);
            StreamEntry e;
            e.is_point = false;
            e.stage = block_start;
            e.stage_end = limit_stage;
            e.reg_inf = std::move(inf);
            e.min_pc = min_pc;
            kept.push_back(std::move(e));
        }
        retained.resize(block_first_retained);
        for (auto& e : kept) retained.push_back(std::move(e));
        rebuild_eq_index();
    }

    // -----------------------------------------------------------------------

    bool check_restriction() {
        if (opts.restriction.kind == Restriction::Kind::Rationals) return true;
        for (std::size_t r = 0; r < n; ++r) {
            if (!opts.restriction.allows(snap.regs[r])) {
                Verdict v;
                v.kind = Verdict::Kind::Crashed;
                v.stage = stage;
                v.crash_reason = CrashReason::RestrictionViolated;
                add_trace(TraceEvent::Crash);
                finish(std::move(v));
                return false;
            }
        }
        return true;
    }

    bool capture_blocks_jump(const Ordinal& target) const {
        for (const auto& c : opts.capture_stages)
            if (stage < c && c < target) return true;
        return false;
    }

    // Build the aggregated limit descriptors for an exactly repeating segment
    // of level-d entries [i, j].
    std::vector<LimitSetDescriptor> aggregate_segment(const LevelState& ls, std::size_t i, std::size_t j,
                                                      std::set<std::size_t>& pc_tail) const {
        std::vector<LimitSetDescriptor> sets(n);
        std::vector<RegSummary> agg(n);
        std::size_t min_pc = static_cast<std::size_t>(-1);
        for (std::size_t k = i + 1; k <= j; ++k) {
            const LevelEntry& e = ls.entries[k];
            for (std::size_t r = 0; r < n; ++r) agg[r].merge(e.incoming.regs[r]);
            min_pc = std::min(min_pc, e.incoming.min_pc);
            min_pc = std::min(min_pc, e.snap.pc);
            for (std::size_t r = 0; r < n; ++r) agg[r].note_value(e.snap.regs[r]);
        }
        // the segment start snapshot recurs too
        for (std::size_t r = 0; r < n; ++r) agg[r].note_value(ls.entries[i].snap.regs[r]);
        min_pc = std::min(min_pc, ls.entries[i].snap.pc);
        pc_tail.clear();
        pc_tail.insert(min_pc);
        for (std::size_t r = 0; r < n; ++r) {
            LimitSetDescriptor& d = sets[r];
            const RegSummary& a = agg[r];
            if (a.exact) {
                d.finite_points = *a.exact; // every value recurs cofinally
            } else {
                d.infinite_family = true;
                if (a.inf) d.finite_points = {*a.inf};
            }
            if (!a.sup) d.plus_inf = InfFlag::LimitPoint;
            if (!a.inf) d.minus_inf = InfFlag::LimitPoint;
        }
        return sets;
    }

    // Attempt acceleration at level d >= 2 (exact segment recurrence).
    // Returns true when the run advanced (or finished).
    bool try_level_up(std::size_t d) {
        if (d - 2 >= levels.size()) return false;
        LevelState& ls = levels[d - 2];
        const std::size_t M = ls.entries.size();
        if (M < 2) return false;
        const LevelEntry& last = ls.entries[M - 1];
        for (std::size_t i = 0; i + 1 < M; ++i) {
            if (ls.entries[i].snap == last.snap) {
                Ordinal target = stage.round_up_to_limit(d);
                if (capture_blocks_jump(target)) return false;
                if (!(target < opts.budget)) {
                    Verdict v;
                    v.kind = Verdict::Kind::BudgetExhausted;
                    v.stage = target;
                    v.snapshot = snap;
                    finish(std::move(v));
                    return true;
                }
                std::set<std::size_t> pc_tail;
                auto sets = aggregate_segment(ls, i, M - 1, pc_tail);
                LimitOutcome lo = apply_limit_rule(opts.variant, sets, pc_tail);
                add_trace(TraceEvent::Accel);
                BlockSummary level_block = ls.accum; // whole level-d block summary
                if (lo.crash) {
                    stage = target;
                    Verdict v;
                    v.kind = Verdict::Kind::Crashed;
                    v.stage = target;
                    v.crash_reason = *lo.crash;
                    v.register_index = lo.crash_register;
                    add_trace(TraceEvent::Crash);
                    finish(std::move(v));
                    return true;
                }
                stage = target;
                snap = *lo.snapshot;
                if (!notify(TraceEvent::Limit)) return true;
                add_trace(TraceEvent::Limit);
                if (!check_restriction()) return true;
                add_retained_point();
                if (done) return true;
                // reset levels 1..d, push to level d+1
                hist.clear();
                hist.push_back(snap);
                block_start = stage;
                accum1.init(n);
                accum1.note_point(snap);
                block_first_retained = retained.size() - 1;
                for (std::size_t e = 2; e <= d; ++e) {
                    LevelState& r = levels[e - 2];
                    r.entries.clear();
                    r.entries.push_back({stage, snap, {}, {}});
                    r.accum.init(n);
                    r.accum.note_point(snap);
                }
                if (d - 1 < levels.size()) {
                    LevelState& up = levels[d - 1];
                    LevelEntry ne;
                    ne.stage = stage;
                    ne.snap = snap;
                    ne.incoming = level_block;
                    up.entries.push_back(std::move(ne));
                    up.accum.merge(level_block);
                    up.accum.note_point(snap);
                    try_level_up(d + 1);
                }
                return true;
            }
        }
        return false;
    }

    // Acceleration at level 1 succeeded: apply the limit rule and advance.
    // Returns false only when the run is finished.
    void apply_level1(const AccelerationResult& acc) {
        Ordinal target = stage.round_up_to_limit(1);
        if (capture_blocks_jump(target)) return; // keep stepping concretely
        if (!(target < opts.budget)) {
            Verdict v;
            v.kind = Verdict::Kind::BudgetExhausted;
            v.stage = target;
            v.snapshot = snap;
            finish(std::move(v));
            return;
        }
        std::set<std::size_t> pc_tail;
        for (std::size_t j = 0; j < acc.period; ++j) pc_tail.insert(hist[hist.size() - acc.period + j].pc);
        auto sets = limit_sets(acc.tails);
        LimitOutcome lo = apply_limit_rule(opts.variant, sets, pc_tail);

        if (opts.verify_accelerations) verify_acceleration(acc);

        add_trace(TraceEvent::Accel);

        // block summary: observed values plus orbit tails
        BlockSummary summary = accum1;
        for (std::size_t r = 0; r < n; ++r)
            for (const auto& off : acc.tails[r].offsets) summary.regs[r].note_orbit(off.orbit);

        compress_block(acc.start, acc.period, acc.tails, target);
        if (lo.crash) {
            stage = target;
            Verdict v;
            v.kind = Verdict::Kind::Crashed;
            v.stage = target;
            v.crash_reason = *lo.crash;
            v.register_index = lo.crash_register;
            add_trace(TraceEvent::Crash);
            finish(std::move(v));
            return;
        }
        stage = target;
        snap = *lo.snapshot;
        if (!notify(TraceEvent::Limit)) return;
        add_trace(TraceEvent::Limit);
        steps_traced_in_block = 0;
        if (!check_restriction()) return;
        add_retained_point();
        if (done) return;
        // start the next block
        hist.clear();
        hist.push_back(snap);
        block_start = stage;
        accum1.init(n);
        accum1.note_point(snap);
        block_first_retained = retained.size() - 1;
        // feed level 2
        LevelState& up = levels[0];
        LevelEntry ne;
        ne.stage = stage;
        ne.snap = snap;
        ne.incoming = summary;
        up.entries.push_back(std::move(ne));
        up.accum.merge(summary);
        up.accum.note_point(snap);
        try_level_up(2);
    }

    // Spot check: the classified orbits must reproduce a concrete replay.
    void verify_acceleration(const AccelerationResult& acc) const {
        std::size_t steps = 4 * acc.period;
        Snapshot cur = hist.back();
        std::vector<Rational> predicted(n);
        for (std::size_t t = 1; t <= steps; ++t) {
            StepOutcome so = step(p, cur);
            if (so.kind != StepOutcome::Kind::Next)
                throw std::logic_error("acceleration verification: run terminated during replay");
            cur = so.next;
            if (t % acc.period != 0) continue;
            std::size_t pass = t / acc.period;
            for (std::size_t r = 0; r < n; ++r) {
                // offset 0 class starts at hist.back(): value_at(pass)
                const OrbitClass& o = acc.tails[r].offsets[0].orbit;
                Rational want = o.value_at(pass);
                if (!(want == cur.regs[r]))
                    throw std::logic_error("acceleration verification failed for register R" + std::to_string(r + 1));
            }
        }
    }

    RunResult go() {
        if (!notify(TraceEvent::Step)) return result();
        add_trace(TraceEvent::Step);
        if (!check_restriction()) return result();
        add_retained_point();

        std::size_t steps_since_attempt = 0;
        std::map<Snapshot, std::size_t> block_seen; // fast exact-recurrence trigger
        block_seen.emplace(snap, 0);

        while (!done) {
            // halt?
            if (snap.pc >= p.instructions.size() ||
                p.instructions[snap.pc].kind == Instruction::Kind::Halt) {
                Verdict v;
                v.kind = Verdict::Kind::Halted;
                v.stage = stage;
                v.output = snap.regs[0];
                add_trace(TraceEvent::Halt);
                finish(std::move(v));
                break;
            }
            if (!(stage < opts.budget)) {
                Verdict v;
                v.kind = Verdict::Kind::BudgetExhausted;
                v.stage = stage;
                v.snapshot = snap;
                finish(std::move(v));
                break;
            }
            StepOutcome so = step(p, snap);
            if (so.kind == StepOutcome::Kind::Crash) {
                stage = stage.succ();
                Verdict v;
                v.kind = Verdict::Kind::Crashed;
                v.stage = stage;
                v.crash_reason = CrashReason::DivisionByZero;
                add_trace(TraceEvent::Crash);
                finish(std::move(v));
                break;
            }
            stage = stage.succ();
            snap = so.next;
            hist.push_back(snap);
            accum1.note_point(snap);
            if (!notify(TraceEvent::Step)) break;
            add_trace(TraceEvent::Step);
            if (!check_restriction()) break;
            add_retained_point();
            if (done) break;

            // acceleration triggers
            bool attempt = false;
            auto [it, fresh] = block_seen.emplace(snap, hist.size() - 1);
            if (!fresh) attempt = true; // exact recurrence in this block
            if (++steps_since_attempt >= 8) attempt = true;
            if (attempt) {
                steps_since_attempt = 0;
                AccelOptions ao;
                ao.verification_passes = opts.verification_passes;
                ao.max_period = opts.max_period;
                AccelerationResult acc = accelerate(p, hist, ao);
                if (acc.kind == AccelerationResult::Kind::Cycle) {
                    std::size_t before = hist.size();
                    apply_level1(acc);
                    if (done) break;
                    if (hist.size() != before) {
                        // advanced to a new block
                        block_seen.clear();
                        block_seen.emplace(snap, 0);
                        continue;
                    }
                    // jump blocked by a capture stage: keep stepping
                } else if (acc.kind == AccelerationResult::Kind::Unclassifiable) {
                    Verdict v;
                    v.kind = Verdict::Kind::Unresolved;
                    v.stage = stage;
                    v.register_index = acc.register_index;
                    finish(std::move(v));
                    break;
                }
            }
            if (hist.size() > opts.max_steps_per_block) {
                Verdict v;
                v.kind = Verdict::Kind::BudgetExhausted;
                v.stage = stage;
                v.snapshot = snap;
                finish(std::move(v));
                break;
            }
        }
        return result();
    }

    RunResult result() {
        RunResult r;
        r.verdict = verdict;
        r.trace = std::move(trace);
        r.captured = std::move(captured);
        return r;
    }
};

} // namespace

RunResult run(const Program& p, const std::vector<Rational>& inputs, const RunOptions& opts) {
    p.validate();
    if (inputs.size() > p.register_count)
        throw std::invalid_argument("more inputs than registers");
    if (opts.depth < 1 || opts.depth > 8) throw std::invalid_argument("depth out of range");
    Runner r(p, inputs, opts);
    return r.go();
}

} // namespace tbss
