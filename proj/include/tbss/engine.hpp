#pragma once

#include "tbss/ordinal.hpp"
#include "tbss/orbit.hpp"
#include "tbss/program.hpp"

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tbss {

struct Snapshot {
    std::vector<Rational> regs;
    std::size_t pc = 0;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
    friend auto operator<=>(const Snapshot&, const Snapshot&) = default;
    /// Componentwise: every register and the pc of *this <= other's.
    bool dominated_by(const Snapshot& other) const;
    std::string str() const;
};

enum class Variant { Itbm, Witbm, Sitbm, Bsitbm, Ssitbm };
Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant v);

enum class CrashReason { DivisionByZero, UndefinedLimit, EmptyStrongLimitSet, RestrictionViolated };
std::string_view crash_reason_name(CrashReason r);

// ---------------------------------------------------------------------------
// Successor step

struct StepOutcome {
    enum class Kind { Next, Halt, Crash };
    Kind kind;
    Snapshot next;   // Next
    Rational output; // Halt
};

StepOutcome step(const Program& p, const Snapshot& s);

// ---------------------------------------------------------------------------
// Limit-point calculus

enum class InfFlag { Absent, LimitPoint, StrongLimit };

struct LimitSetDescriptor {
    std::vector<Rational> finite_points; // sorted, unique
    InfFlag plus_inf = InfFlag::Absent;
    InfFlag minus_inf = InfFlag::Absent;
    // Aggregation across nested limits can produce infinitely many finite limit
    // points; then finite_points holds just the minimum (empty when the family
    // is unbounded below).
    bool infinite_family = false;
};

/// Classified tail of one register: one orbit class per cycle offset.
struct TailDescriptor {
    enum class Kind { Constant, AffineOrbit, MobiusOrbit, MonotoneUp, MonotoneDown, FiniteSet, Unclassified };
    struct Offset {
        Kind kind = Kind::Unclassified;
        OrbitClass orbit;
    };
    std::vector<Offset> offsets;
};

/// Merge per-offset classifications into the register's limit sets.
std::vector<LimitSetDescriptor> limit_sets(const std::vector<TailDescriptor>& tails);

struct LimitOutcome {
    std::optional<Snapshot> snapshot;
    std::optional<CrashReason> crash;
    std::size_t crash_register = 0;
};

LimitOutcome apply_limit_rule(Variant v, const std::vector<LimitSetDescriptor>& sets,
                              const std::set<std::size_t>& pc_tail);

// ---------------------------------------------------------------------------
// Acceleration

struct AccelerationResult {
    enum class Kind { Cycle, NoCycleYet, Unclassifiable };
    Kind kind = Kind::NoCycleYet;
    std::size_t start = 0;  // index into the supplied history
    std::size_t period = 0;
    std::vector<RationalFunction> composed; // per-register full-cycle map at offset 0
    std::vector<TailDescriptor> tails;      // per register
    std::size_t register_index = 0;         // Unclassifiable
};

struct AccelOptions {
    std::size_t verification_passes = 8;
    std::size_t max_period = 2048;
};

AccelerationResult accelerate(const Program& p, const std::vector<Snapshot>& history, const AccelOptions& opts = {});

// ---------------------------------------------------------------------------
// Verdicts and runs

struct Verdict {
    enum class Kind { Halted, Diverged, Crashed, Unresolved, BudgetExhausted, Aborted };
    Kind kind = Kind::BudgetExhausted;
    Ordinal stage;
    Rational output;                 // Halted
    Ordinal loop_start, loop_end;    // Diverged
    CrashReason crash_reason = CrashReason::DivisionByZero;
    std::size_t register_index = 0;  // Unresolved
    Snapshot snapshot;               // BudgetExhausted

    std::string describe() const;
};

struct Restriction {
    enum class Kind { Rationals, Integers, Dyadics, FiniteSet };
    Kind kind = Kind::Rationals;
    std::vector<Rational> values; // FiniteSet

    bool allows(const Rational& x) const;
    static Restriction parse(std::string_view spec);
    std::string str() const;
};

enum class TraceEvent { Step, Limit, Accel, Crash, Halt };
std::string_view trace_event_name(TraceEvent e);

struct TraceRecord {
    Ordinal stage;
    Snapshot snap;
    TraceEvent event;
};

struct Trace {
    std::vector<TraceRecord> records;
    std::size_t dropped = 0; // records evicted by the retention window
    std::string render() const;
};

struct RunOptions {
    Variant variant = Variant::Sitbm;
    Ordinal budget = Ordinal::power(Ordinal(4ULL)); // w^4
    std::size_t depth = 3;
    Restriction restriction;
    std::size_t verification_passes = 8;
    std::size_t max_period = 2048;
    std::size_t max_steps_per_block = 100000;
    std::size_t trace_window = 64; // retained successor records around block edges
    bool verify_accelerations = true;
    /// Observer per retained stage; returning false aborts the run.
    std::function<bool(const Ordinal&, const Snapshot&, TraceEvent)> observer;
    /// Stages whose snapshots must be captured exactly (disables jumps past them).
    std::vector<Ordinal> capture_stages;
};

struct RunResult {
    Verdict verdict;
    Trace trace;
    std::vector<std::pair<Ordinal, Snapshot>> captured;
};

RunResult run(const Program& p, const std::vector<Rational>& inputs, const RunOptions& opts = {});

// ---------------------------------------------------------------------------
// Retained-stream strong-loop scan (shared with the analysis module)

struct StreamEntry {
    // Either a concrete snapshot at one stage, or a summary of an interval of
    // stages strictly between two retained points.
    bool is_point = true;
    Ordinal stage;          // point stage, or interval start (exclusive origin point)
    Ordinal stage_end;      // intervals: exclusive end
    Snapshot snap;          // point
    std::vector<std::optional<Rational>> reg_inf; // intervals: nullopt = unbounded below
    std::size_t min_pc = 0;
};

struct LoopWitnessRaw {
    Ordinal gamma, beta;
};

/// First (gamma, beta) pair, beta ascending then gamma ascending, with equal
/// snapshots and componentwise minimality of the beta snapshot over [gamma, beta].
std::optional<LoopWitnessRaw> strong_loop_scan(const std::vector<StreamEntry>& entries);

} // namespace tbss
