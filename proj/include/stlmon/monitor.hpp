#pragma once

// Verification of an STL formula against every signal of a system.
//
// Atoms are monitored along a validated enclosure of the signals: sign changes
// of f(x(t)) are enclosed by interval Newton and certified unique. The
// resulting boundary sets are combined bottom-up through the formula and the
// verdict is read off at time 0.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "expression.hpp"
#include "integrator.hpp"
#include "interval.hpp"
#include "model.hpp"
#include "stl.hpp"
#include "timesets.hpp"

namespace stlmon {

struct MonitorConfig {
    double epsilon = 1e-14;
    double theta = 0.01;
    double t_min = 1e-14;
    IntegratorConfig integrator{};
    /// Iteration cap of the lower-bound reduction loop.
    std::size_t max_reduction_steps = 100'000;
    /// Iteration cap of the uniqueness loop.
    std::size_t max_newton_steps = 1'000;
    /// Keep the set computed for every subformula.
    bool keep_sets = false;
    /// Keep the signal enclosure in the verdict.
    bool keep_enclosure = false;
};

enum class Outcome { Valid, Unsat, Unknown };
enum class UnknownCause { SearchZeroError, PropagationError, IntegrationError, InitialSignError };

inline const char* to_string(Outcome o)
{
    switch (o) {
    case Outcome::Valid: return "Valid";
    case Outcome::Unsat: return "Unsat";
    case Outcome::Unknown: return "Unknown";
    }
    return "?";
}

inline const char* to_string(UnknownCause c)
{
    switch (c) {
    case UnknownCause::SearchZeroError: return "SearchZeroError";
    case UnknownCause::PropagationError: return "PropagationError";
    case UnknownCause::IntegrationError: return "IntegrationError";
    case UnknownCause::InitialSignError: return "InitialSignError";
    }
    return "?";
}

struct MonitorStats {
    std::uint64_t integration_steps = 0;
    std::uint64_t search_zero_calls = 0;
    std::uint64_t newton_iterations = 0;
};

struct SubformulaSet {
    std::string formula;
    ApproxSet set;
};

struct Verdict {
    Outcome outcome = Outcome::Unknown;
    std::optional<UnknownCause> unknown_cause;
    std::string message;
    MonitorStats stats;
    double horizon = 0.0;
    /// Per atom, in registry order.
    std::vector<SubformulaSet> atom_sets;
    /// Per subformula in post-order; only with keep_sets.
    std::vector<SubformulaSet> subformula_sets;
    std::optional<ApproxSet> result;
    std::shared_ptr<const SignalEnclosure> enclosure;
};

/// SearchZero failed to certify a crossing (tangency or stalled contraction).
class SearchZeroError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Truth of an atom at time 0 cannot be decided.
class InitialSignError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Atom f with its gradient in the state variables.
class AtomFunction {
public:
    AtomFunction(Expr f, int n_vars) : f_(std::move(f)), grad_(gradient(f_, n_vars)) {}

    [[nodiscard]] const Expr& expr() const { return f_; }

    /// f over the signal enclosure at t.
    [[nodiscard]] Interval value(const SignalEnclosure& enc, const Interval& t) const
    {
        const IntervalBox full = enc.eval_full(t);
        const int m = enc.system().n_params();
        const IntervalBox u(full.begin(), full.begin() + m);
        const IntervalBox x(full.begin() + m, full.end());
        return eval_box(f_, u, x);
    }

    /// d/dt f(x(t)) over t by the chain rule.
    [[nodiscard]] Interval derivative(const SignalEnclosure& enc, const Interval& t) const
    {
        const IntervalBox full = enc.eval_full(t);
        const int m = enc.system().n_params();
        const IntervalBox u(full.begin(), full.begin() + m);
        const IntervalBox x(full.begin() + m, full.end());
        const IntervalBox flow = eval_flow(enc.system(), u, x);
        Interval acc{0.0};
        for (std::size_t i = 0; i < grad_.size(); ++i) {
            if (grad_[i].is_constant(0.0)) {
                continue;
            }
            acc += eval_box(grad_[i], u, x) * flow[i];
        }
        return acc;
    }

private:
    Expr f_;
    std::vector<Expr> grad_;
};

inline Interval dt_enclosure(const Expr& f, const SignalEnclosure& enc, const Interval& t)
{
    return AtomFunction(f, enc.system().n_vars()).derivative(enc, t);
}

namespace detail {

inline Interval eval_atom(const AtomFunction& f, const SignalEnclosure& enc, const Interval& t)
{
    try {
        return f.value(enc, t);
    } catch (const EvaluationError& e) {
        throw SearchZeroError(std::string("atom evaluation failed: ") + e.what());
    }
}

inline Interval eval_dt(const AtomFunction& f, const SignalEnclosure& enc, const Interval& t)
{
    try {
        return f.derivative(enc, t);
    } catch (const EvaluationError& e) {
        throw SearchZeroError(std::string("derivative evaluation failed: ") + e.what());
    }
}

inline int sign_of(const Interval& a)
{
    if (a.lo() > 0) {
        return 1;
    }
    if (a.hi() < 0) {
        return -1;
    }
    return 0;
}

} // namespace detail

/// Earliest zero of f(x(t)) in t_init, enclosed and certified unique, or
/// nullopt when f(x(t)) != 0 on all of t_init.
///
/// The lower bound is advanced by extended-division Newton steps anchored at
/// the current lower bound over a window that widens while no zero is found
/// and narrows when progress stalls. The uniqueness phase then runs
/// epsilon-inflated Newton iterations from the reduced lower bound.
inline MaybeInterval search_zero(const AtomFunction& f, const SignalEnclosure& enc, const Interval& t_init,
                                 const MonitorConfig& cfg, MonitorStats* stats = nullptr)
{
    if (t_init.lo() < 0 || t_init.hi() > enc.horizon()) {
        throw std::out_of_range("search_zero: search interval outside the integrated horizon");
    }
    if (stats) {
        ++stats->search_zero_calls;
    }
    auto count = [&] {
        if (stats) {
            ++stats->newton_iterations;
        }
    };

    double lo = t_init.lo();
    double hi = t_init.hi();
    double w = hi - lo;
    const double w_min = std::max(1e-9, 4.0 * cfg.epsilon);
    std::size_t iter = 0;
    for (;;) {
        if (++iter > cfg.max_reduction_steps) {
            throw SearchZeroError("lower bound reduction did not converge");
        }
        count();
        const Interval fa = detail::eval_atom(f, enc, Interval{lo});
        if (fa.contains_zero()) {
            break;
        }
        const double w_hi = std::min(hi, lo + w);
        const bool full = w_hi >= hi;
        const Interval window{lo, w_hi};
        const Interval d = detail::eval_dt(f, enc, window);
        const MaybeInterval r = ext_div(-fa, d, Interval{0.0, rounding::sub_up(w_hi, lo)});
        if (!r) {
            if (full) {
                return std::nullopt;
            }
            lo = w_hi;
            w *= 2;
            continue;
        }
        const double next = std::min(std::max(lo, rounding::add_down(lo, r->lo())), w_hi);
        if (full) {
            hi = std::max(next, std::min(hi, rounding::add_up(lo, r->hi())));
        }
        const double progress = next - lo;
        lo = next;
        if (progress < 0.01 * w) {
            w *= 0.5;
        }
        if (progress <= cfg.epsilon && w <= w_min) {
            break;
        }
    }
    const double lo_break = lo;

    // Uniqueness.
    Interval t{lo};
    double delta = rounding::inf;
    Interval found{lo};
    for (std::size_t k = 0;; ++k) {
        if (k >= cfg.max_newton_steps) {
            throw SearchZeroError("uniqueness verification did not terminate");
        }
        count();
        const Interval d = detail::eval_dt(f, enc, t);
        if (d.contains_zero()) {
            throw SearchZeroError("derivative enclosure contains zero near t = " + format_double(t.mid()));
        }
        const Interval fa = detail::eval_atom(f, enc, Interval{t.lo()});
        const Interval tp = Interval{t.lo()} - fa / d;
        if (tp.interior_of(t)) {
            found = tp;
            break;
        }
        // The absolute term covers rounding jitter of the Newton image, which
        // does not shrink with t.
        const double delta_bak = delta;
        delta = hypermetric(t, tp);
        const MaybeInterval next = intersect(t_init, inflate(tp, 1.0 + cfg.theta, cfg.epsilon));
        if (!next) {
            throw SearchZeroError("Newton iterate left the search interval");
        }
        t = *next;
        if (delta >= (1.0 - cfg.theta) * delta_bak) {
            throw SearchZeroError("Newton contraction stalled");
        }
    }

    // No zero lies in [t_init.lo, lo_break). Between lo_break and the
    // enclosure f must be monotone for the enclosed zero to be the earliest.
    const double reach = std::max(found.hi(), lo_break);
    const double from = std::min(found.lo(), lo_break);
    const Interval gap{std::max(from, t_init.lo()), std::min(reach, t_init.hi())};
    const Interval dg = detail::eval_dt(f, enc, gap);
    if (dg.contains_zero()) {
        throw SearchZeroError("cannot certify that the enclosed zero is the earliest");
    }
    if (found.lo() < t_init.lo()) {
        // The zero lies right of t_init.lo only if f(t_init.lo) has the sign
        // opposite to the slope.
        const Interval f0 = detail::eval_atom(f, enc, Interval{t_init.lo()});
        if (detail::sign_of(f0) != -detail::sign_of(dg)) {
            throw SearchZeroError("zero enclosure reaches below the search interval");
        }
        found = Interval{t_init.lo(), found.hi()};
    }
    if (found.hi() > t_init.hi()) {
        const Interval f1 = detail::eval_atom(f, enc, Interval{t_init.hi()});
        if (detail::sign_of(f1) != detail::sign_of(dg)) {
            throw SearchZeroError("zero enclosure reaches beyond the search interval");
        }
        found = Interval{found.lo(), t_init.hi()};
    }
    return found;
}

inline MaybeInterval search_zero(const Expr& f, const SignalEnclosure& enc, const Interval& t_init,
                                 const MonitorConfig& cfg, MonitorStats* stats = nullptr)
{
    return search_zero(AtomFunction(f, enc.system().n_vars()), enc, t_init, cfg, stats);
}

namespace detail {

// Smallest probe c > from (doubling steps) such that f is monotone on
// [anchor, c] and f(c) has a strict sign. Returns nullopt when f is monotone
// up to `limit` without reaching a strict sign.
struct Departure {
    double c;
    int slope;
    Interval value;
};

inline std::optional<Departure> depart(const AtomFunction& f, const SignalEnclosure& enc, double anchor, double from,
                                       double step, double limit)
{
    double delta = std::max(step, 1e-12);
    for (;;) {
        const double c = std::min(limit, from + delta);
        const Interval d = eval_dt(f, enc, Interval{anchor, c});
        if (d.contains_zero()) {
            throw SearchZeroError("derivative encloses zero next to t = " + format_double(from));
        }
        const Interval v = eval_atom(f, enc, Interval{c});
        if (!v.contains_zero()) {
            return Departure{c, sign_of(d), v};
        }
        if (c >= limit) {
            return std::nullopt;
        }
        delta *= 2;
    }
}

} // namespace detail

/// Boundary set of one atom f < 0 on [0, horizon].
inline ApproxSet monitor_atom(const AtomFunction& f, const SignalEnclosure& enc, double horizon,
                              const MonitorConfig& cfg, MonitorStats* stats = nullptr)
{
    std::vector<BoundaryEnclosure> elems;
    bool holds = false;
    double start = 0.0;

    Interval f0;
    try {
        f0 = f.value(enc, Interval{0.0});
    } catch (const EvaluationError& e) {
        throw InitialSignError(std::string("atom evaluation failed at t = 0: ") + e.what());
    }
    if (f0.hi() < 0) {
        holds = true;
    } else if (f0.lo() > 0) {
        holds = false;
    } else {
        // Zero at t = 0 not excluded: decide from the side the signal leaves to.
        if (horizon <= 0) {
            // Only t = 0 matters; f(0) >= 0 already falsifies f < 0.
            if (f0.lo() < 0) {
                throw InitialSignError("truth of the atom at t = 0 is undecidable");
            }
            return ApproxSet::empty();
        }
        std::optional<detail::Departure> dep;
        try {
            dep = detail::depart(f, enc, 0.0, 0.0, 1e-12, horizon);
        } catch (const SearchZeroError& e) {
            throw InitialSignError(std::string("truth of the atom at t = 0 is undecidable: ") + e.what());
        }
        if (!dep) {
            throw InitialSignError("truth of the atom at t = 0 is undecidable");
        }
        const int g = detail::sign_of(dep->value);
        if (dep->slope * g < 0) {
            holds = g < 0;
        } else if (g > 0 && f0.lo() >= 0) {
            holds = false;
        } else if (g < 0 && f0.hi() <= 0) {
            holds = true;
        } else {
            throw InitialSignError("truth of the atom at t = 0 is undecidable");
        }
        start = dep->c;
    }
    if (holds) {
        elems.push_back(BoundaryEnclosure{Interval{0.0}, true});
    }

    bool polarity = !holds;
    while (start < horizon) {
        const MaybeInterval z = search_zero(f, enc, Interval{start, horizon}, cfg, stats);
        if (!z) {
            break;
        }
        elems.push_back(BoundaryEnclosure{*z, polarity});
        polarity = !polarity;
        if (z->hi() >= horizon) {
            break;
        }
        const auto dep = detail::depart(f, enc, z->lo(), z->hi(), z->width(), horizon);
        if (!dep) {
            break; // monotone up to the horizon: no further zero
        }
        start = dep->c;
    }
    try {
        return normalize(std::move(elems));
    } catch (const AmbiguityError& e) {
        throw SearchZeroError(std::string("zero enclosures overlap: ") + e.what());
    }
}

/// Boundary sets of all atoms of phi, in registry order.
inline std::vector<ApproxSet> monitor_ap(const AtomRegistry& reg, const SignalEnclosure& enc, double horizon,
                                         const MonitorConfig& cfg, MonitorStats* stats = nullptr)
{
    std::vector<ApproxSet> out;
    out.reserve(reg.size());
    for (const auto& a : reg) {
        out.push_back(monitor_atom(AtomFunction(a, enc.system().n_vars()), enc, horizon, cfg, stats));
    }
    return out;
}

/// Set of phi from the atom sets. With `trace`, every subformula's set is
/// appended in post-order.
inline ApproxSet propagate(const Formula& phi, const AtomRegistry& reg, const std::vector<ApproxSet>& atom_sets,
                           std::vector<SubformulaSet>* trace = nullptr, const SymbolTable* names = nullptr)
{
    ApproxSet r;
    switch (phi.kind()) {
    case FormulaKind::True:
        r = ApproxSet::universe();
        break;
    case FormulaKind::Atom: {
        const auto i = reg.find(phi.atom_expr());
        if (!i || *i >= atom_sets.size()) {
            throw std::invalid_argument("propagate: atom missing from the registry");
        }
        r = atom_sets[*i];
        break;
    }
    case FormulaKind::Not:
        r = invert(propagate(phi.arg(0), reg, atom_sets, trace, names));
        break;
    case FormulaKind::Or: {
        const ApproxSet a = propagate(phi.arg(0), reg, atom_sets, trace, names);
        const ApproxSet b = propagate(phi.arg(1), reg, atom_sets, trace, names);
        r = join(a, b);
        break;
    }
    case FormulaKind::Until: {
        const ApproxSet a = propagate(phi.arg(0), reg, atom_sets, trace, names);
        const ApproxSet b = propagate(phi.arg(1), reg, atom_sets, trace, names);
        r = shift_all(phi.bound().lo, phi.bound().hi, a, b);
        break;
    }
    }
    if (trace) {
        trace->push_back(SubformulaSet{to_string(phi, names ? *names : SymbolTable{}), r});
    }
    return r;
}

inline Outcome consistent_at_init(const ApproxSet& t)
{
    if (t.is_universe()) {
        return Outcome::Valid;
    }
    if (t.is_empty()) {
        return Outcome::Unsat;
    }
    const BoundaryEnclosure first = first_element(t);
    if (first.s.hi() <= 0) {
        return Outcome::Valid;
    }
    if (first.s.lo() > 0) {
        return Outcome::Unsat;
    }
    return Outcome::Unknown;
}

/// Full verification over the system's parameter and initial boxes.
inline Verdict monitor_stl(const ContinuousSystem& sys, const Formula& phi, const MonitorConfig& cfg = {})
{
    Verdict v;
    const double horizon = necessary_length(phi);
    v.horizon = horizon;
    const AtomRegistry reg = atoms(phi);

    IntegratorConfig icfg = cfg.integrator;
    icfg.t_min = cfg.t_min;
    auto unknown = [&](UnknownCause c, const std::string& msg) {
        v.outcome = Outcome::Unknown;
        v.unknown_cause = c;
        v.message = msg;
        return v;
    };

    auto enc = std::make_shared<SignalEnclosure>(sys, icfg);
    if (cfg.keep_enclosure) {
        v.enclosure = enc;
    }
    try {
        enc->extend(horizon);
    } catch (const IntegrationError& e) {
        v.stats.integration_steps = enc->steps().size();
        return unknown(UnknownCause::IntegrationError, e.what());
    } catch (const EvaluationError& e) {
        v.stats.integration_steps = enc->steps().size();
        return unknown(UnknownCause::IntegrationError, e.what());
    }
    v.stats.integration_steps = enc->steps().size();

    std::vector<ApproxSet> sets;
    try {
        sets = monitor_ap(reg, *enc, horizon, cfg, &v.stats);
    } catch (const InitialSignError& e) {
        return unknown(UnknownCause::InitialSignError, e.what());
    } catch (const SearchZeroError& e) {
        return unknown(UnknownCause::SearchZeroError, e.what());
    }
    for (std::size_t i = 0; i < reg.size(); ++i) {
        v.atom_sets.push_back(SubformulaSet{to_string(Formula::atom(reg[i]), sys.names), sets[i]});
    }

    ApproxSet result;
    try {
        result = propagate(phi, reg, sets, cfg.keep_sets ? &v.subformula_sets : nullptr, &sys.names);
    } catch (const AmbiguityError& e) {
        return unknown(UnknownCause::PropagationError, e.what());
    }
    v.result = result;
    v.outcome = consistent_at_init(result);
    if (v.outcome == Outcome::Unknown) {
        // The earliest bound enclosure straddles time 0.
        v.unknown_cause = UnknownCause::PropagationError;
        v.message = "the first bound enclosure of the formula contains time 0";
    }
    return v;
}

} // namespace stlmon
