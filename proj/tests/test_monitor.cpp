#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stlmon/monitor.hpp"

using namespace stlmon;

namespace {

constexpr double pi = std::numbers::pi;

ContinuousSystem builtin(const char* name) { return parse_model(*builtin_model(name)); }

ContinuousSystem with_params(ContinuousSystem sys, const IntervalBox& u)
{
    for (int i = 0; i < sys.n_params(); ++i) {
        sys.set_param(i, u[i]);
    }
    return sys;
}

SignalEnclosure enclose(const ContinuousSystem& sys, double horizon)
{
    SignalEnclosure enc(sys);
    enc.extend(horizon);
    return enc;
}

Expr expr(const char* text, const ContinuousSystem& sys) { return parse_expression(text, sys.names); }

// Root of exp(u t) sin t = 1 in [a, b] by bisection; the sign must change.
double bisect(double u, double a, double b)
{
    auto g = [u](double t) { return std::exp(u * t) * std::sin(t) - 1; };
    double ga = g(a);
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (a + b);
        const double gm = g(m);
        if ((gm < 0) == (ga < 0)) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

const MonitorConfig defaults{};

} // namespace

TEST(Monitor, DtEnclosure)
{
    const ContinuousSystem timer = builtin("timer");
    const SignalEnclosure enc = enclose(timer, 10);
    const Interval d1 = dt_enclosure(expr("x - 1", timer), enc, Interval(0, 10));
    EXPECT_TRUE(d1.contains(1.0));
    EXPECT_LT(d1.width(), 1e-12);

    const Interval d2 = dt_enclosure(expr("cos(x)", timer), enc, Interval(1.5, 1.6));
    EXPECT_TRUE(d2.subset_of(Interval(-1, -0.99)));
    EXPECT_TRUE(d2.contains(-std::sin(1.5)));
    EXPECT_TRUE(d2.contains(-std::sin(1.6)));

    const ContinuousSystem lorenz = with_params(builtin("lorenz"), {Interval(10), Interval(28), Interval(2.5)});
    const SignalEnclosure lenc = enclose(lorenz, 0.1);
    EXPECT_TRUE(dt_enclosure(expr("-x1 - 15", lorenz), lenc, Interval(0)).contains(0.0));
}

TEST(Monitor, SearchZeroExamples)
{
    const ContinuousSystem timer = builtin("timer");
    const SignalEnclosure enc = enclose(timer, 10);
    const MaybeInterval z = search_zero(expr("cos(x)", timer), enc, Interval(0, 6.284), defaults);
    ASSERT_TRUE(z);
    EXPECT_TRUE(z->subset_of(Interval(1.57, 1.58)));
    EXPECT_TRUE(z->contains(pi / 2));

    EXPECT_FALSE(search_zero(expr("x + 1", timer), enc, Interval(0, 10), defaults));

    const ContinuousSystem rot = with_params(builtin("rotation"), {Interval(0)});
    const SignalEnclosure renc = enclose(rot, 10);
    EXPECT_THROW((void)search_zero(expr("x2 - 1", rot), renc, Interval(0, 10), defaults), SearchZeroError);
}

TEST(Monitor, SearchZeroAgainstKnownRoots)
{
    const ContinuousSystem timer = builtin("timer");
    const SignalEnclosure enc = enclose(timer, 12);
    struct Case {
        const char* f;
        std::vector<double> roots;
    };
    const std::vector<Case> cases{
        {"cos(x)", {pi / 2, 3 * pi / 2, 5 * pi / 2, 7 * pi / 2}},
        {"sin(x) - 0.5", {pi / 6, 5 * pi / 6, 13 * pi / 6, 17 * pi / 6}},
        {"(x - 1)*(x - 2.5)*(x - 7)", {1, 2.5, 7}},
        {"x^2 - 2", {std::sqrt(2.0)}},
        {"exp(-x) - 0.25", {std::log(4.0)}},
        {"x^2 + 1", {}},
    };
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> start(0.0, 8.0);
    for (const auto& c : cases) {
        const Expr f = expr(c.f, timer);
        for (int trial = 0; trial < 20; ++trial) {
            const double a = trial == 0 ? 0.0 : start(gen);
            const Interval t_init(a, 12);
            const MaybeInterval z = search_zero(f, enc, t_init, defaults);
            std::optional<double> earliest;
            for (double r : c.roots) {
                if (r > a && (!earliest || r < *earliest)) {
                    earliest = r;
                }
            }
            if (!earliest) {
                EXPECT_FALSE(z) << c.f << " from " << a;
                continue;
            }
            ASSERT_TRUE(z) << c.f << " from " << a;
            EXPECT_TRUE(z->contains(*earliest)) << c.f << " " << *z;
            for (double r : c.roots) {
                if (r != *earliest) {
                    EXPECT_FALSE(z->contains(r));
                }
            }
            EXPECT_LT(z->width(), 1e-9);
        }
    }
}

TEST(Monitor, MonitorApWorkedExample)
{
    const ContinuousSystem timer = builtin("timer");
    const SignalEnclosure enc = enclose(timer, 6.284);
    const Formula phi = parse_formula("F[0,6.284] (cos(x) < 0 & sin(x) < 0)", timer.names);
    const AtomRegistry reg = atoms(phi);
    const auto sets = monitor_ap(reg, enc, 6.284, defaults);
    ASSERT_EQ(sets.size(), 2u);
    const auto c = sets[0].elements();
    ASSERT_EQ(c.size(), 2u);
    EXPECT_TRUE(c[0].polarity);
    EXPECT_TRUE(c[0].s.subset_of(Interval(1.57, 1.58)));
    EXPECT_FALSE(c[1].polarity);
    EXPECT_TRUE(c[1].s.subset_of(Interval(4.71, 4.72)));
    const auto s = sets[1].elements();
    ASSERT_EQ(s.size(), 2u);
    EXPECT_TRUE(s[0].s.subset_of(Interval(3.14, 3.15)));
    EXPECT_TRUE(s[1].s.subset_of(Interval(6.28, 6.29)));

    const ApproxSet result = propagate(phi, reg, sets);
    ASSERT_EQ(result.size(), 2u);
    EXPECT_EQ(result.as_list()[0], (BoundaryEnclosure{Interval(0), true}));
    EXPECT_TRUE(result.as_list()[1].s.subset_of(Interval(4.71, 4.72)));
    EXPECT_EQ(consistent_at_init(result), Outcome::Valid);
}

TEST(Monitor, MonitorApNeverTrueAtom)
{
    const ContinuousSystem timer = builtin("timer");
    const SignalEnclosure enc = enclose(timer, 10);
    EXPECT_TRUE(monitor_atom(AtomFunction(expr("x + 1", timer), 1), enc, 10, defaults).is_empty());
    EXPECT_TRUE(monitor_atom(AtomFunction(expr("-x - 1", timer), 1), enc, 10, defaults).is_universe());
}

TEST(Monitor, MonitorApRotationCrossings)
{
    const double u = 0.05;
    const ContinuousSystem rot = with_params(builtin("rotation"), {Interval(u)});
    const SignalEnclosure enc = enclose(rot, 16.284);
    const ApproxSet s = monitor_atom(AtomFunction(expr("x2 - 1", rot), 2), enc, 16.284, defaults);
    const auto e = s.as_list();
    ASSERT_GE(e.size(), 3u);
    EXPECT_EQ(e[0], (BoundaryEnclosure{Interval(0), true}));
    EXPECT_FALSE(e[1].polarity);
    EXPECT_TRUE(e[2].polarity);
    // exp(u t) sin t - 1 changes sign on either side of pi/2
    EXPECT_TRUE(e[1].s.contains(bisect(u, 0.5, pi / 2)));
    EXPECT_TRUE(e[2].s.contains(bisect(u, pi / 2, 3.0)));
}

TEST(Monitor, InitialSignStraddle)
{
    const ContinuousSystem timer =
        parse_model("[params] c in [-0.1, 0.1]\n[vars] x in [0, 100]\n[init] x = 0\n[flow] x' = 1\n");
    const Verdict v = monitor_stl(timer, parse_formula("x + c < 0", timer.names));
    EXPECT_EQ(v.outcome, Outcome::Unknown);
    EXPECT_EQ(v.unknown_cause, UnknownCause::InitialSignError);
    // A zero at t = 0 that the signal leaves upward is decidable.
    const Verdict w = monitor_stl(builtin("timer"), parse_formula("x < 0", builtin("timer").names));
    EXPECT_EQ(w.outcome, Outcome::Unsat);
}

TEST(Monitor, Propagate)
{
    const ContinuousSystem timer = builtin("timer");
    const Formula p = parse_formula("x - 1 < 0", timer.names);
    const AtomRegistry reg = atoms(p);
    const ApproxSet tp = ApproxSet::sequence({{Interval(0), true}, {Interval(1), false}});
    EXPECT_EQ(propagate(p, reg, {tp}), tp);
    EXPECT_TRUE(propagate(parse_formula("true", timer.names), {}, {}).is_universe());

    const Formula amb = parse_formula("F[0,3] !((x - 1 < 0) | (1 - x < 0))", timer.names);
    const AtomRegistry r2 = atoms(amb);
    const SignalEnclosure enc = enclose(timer, 3);
    const auto sets = monitor_ap(r2, enc, 3, defaults);
    EXPECT_THROW((void)propagate(amb, r2, sets), AmbiguityError);
}

TEST(Monitor, ConsistentAtInit)
{
    EXPECT_EQ(consistent_at_init(ApproxSet::sequence({{Interval(0), true}, {Interval(4.71, 4.72), false}})),
              Outcome::Valid);
    EXPECT_EQ(consistent_at_init(ApproxSet::sequence({{Interval(0.5, 1), true}})), Outcome::Unsat);
    EXPECT_EQ(consistent_at_init(ApproxSet::sequence({{Interval(0, 0.1), true}})), Outcome::Unknown);
    EXPECT_EQ(consistent_at_init(ApproxSet::universe()), Outcome::Valid);
    EXPECT_EQ(consistent_at_init(ApproxSet::empty()), Outcome::Unsat);
}

TEST(Monitor, Verdicts)
{
    const ContinuousSystem timer = builtin("timer");
    const Verdict ok = monitor_stl(timer, parse_formula("F[0,6.284] (cos(x) < 0 & sin(x) < 0)", timer.names));
    EXPECT_EQ(ok.outcome, Outcome::Valid);
    EXPECT_FALSE(ok.unknown_cause);
    EXPECT_GT(ok.stats.search_zero_calls, 0u);
    EXPECT_GT(ok.stats.integration_steps, 0u);

    const Verdict amb = monitor_stl(timer, parse_formula("F[0,3] !((x - 1 < 0) | (1 - x < 0))", timer.names));
    EXPECT_EQ(amb.outcome, Outcome::Unknown);
    EXPECT_EQ(amb.unknown_cause, UnknownCause::PropagationError);

    const ContinuousSystem rot = builtin("rotation");
    const Formula g = parse_formula("G[0,10] F[0,6.284] !(x2 - 1 < 0)", rot.names);
    EXPECT_EQ(monitor_stl(with_params(rot, {Interval(0.05)}), g).outcome, Outcome::Valid);
    EXPECT_EQ(monitor_stl(with_params(rot, {Interval(-0.05)}), g).outcome, Outcome::Unsat);
    const Verdict straddle = monitor_stl(with_params(rot, {Interval(-1e-3, 1e-3)}), g);
    EXPECT_EQ(straddle.outcome, Outcome::Unknown);
    EXPECT_EQ(straddle.unknown_cause, UnknownCause::SearchZeroError);
    const Verdict blowup = monitor_stl(with_params(rot, {Interval(-0.1, 0.1)}), g);
    EXPECT_EQ(blowup.outcome, Outcome::Unknown);
}

TEST(Monitor, KeepSetsIsCanonical)
{
    const ContinuousSystem rot = with_params(builtin("rotation"), {Interval(0.03)});
    MonitorConfig cfg;
    cfg.keep_sets = true;
    const Formula phi = parse_formula(
        "G[0,10] F[0,6.284] (!(x2 - 1 < 0) & F[0,1.571] (!(-x2 < 0) & F[0,1.571] (!(-x2 - 1 < 0) & F[0,1.571] "
        "(-x2 < 0))))",
        rot.names);
    const Verdict v = monitor_stl(rot, phi, cfg);
    EXPECT_EQ(v.outcome, Outcome::Valid);
    EXPECT_EQ(v.subformula_sets.size(), formula_size(phi));
    for (const auto& s : v.subformula_sets) {
        EXPECT_TRUE(s.set.is_universe() || s.set.is_empty() || is_canonical(s.set.elements())) << s.formula;
    }
}

// Simulated samples from the verified boxes never contradict the verdict.
TEST(MonitorProperty, SpotCheckSimulations)
{
    struct Case {
        ContinuousSystem sys;
        const char* formula;
        Outcome expected;
    };
    const ContinuousSystem rot = builtin("rotation");
    const char* row1 = "G[0,10] F[0,6.284] !(x2 - 1 < 0)";
    const char* row2 = "G[0,10] F[0,6.284] (!(x2 - 1 < 0) & F[0,3.142] !(-x2 - 1 < 0))";
    const std::vector<Case> cases{
        {with_params(rot, {Interval(0.04, 0.041)}), row1, Outcome::Valid},
        {with_params(rot, {Interval(-0.041, -0.04)}), row1, Outcome::Unsat},
        {with_params(rot, {Interval(0.07, 0.0705)}), row2, Outcome::Valid},
        {with_params(rot, {Interval(-0.0705, -0.07)}), row2, Outcome::Unsat},
        {builtin("timer"), "F[0,6.284] (cos(x) < 0 & sin(x) < 0)", Outcome::Valid},
        {builtin("timer"), "G[0,6] (sin(x) < 0.5)", Outcome::Unsat},
    };
    const double dt = 1e-3;
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const auto& c : cases) {
        const Formula phi = parse_formula(c.formula, c.sys.names);
        const Verdict v = monitor_stl(c.sys, phi);
        ASSERT_EQ(v.outcome, c.expected) << c.formula << " " << v.message;
        const auto times = oracle::grid(necessary_length(phi) + 2 * dt, dt);
        for (int s = 0; s < 10; ++s) {
            std::vector<double> u;
            for (const auto& d : c.sys.param_domain) {
                u.push_back(d.lo() + unit(gen) * (d.hi() - d.lo()));
            }
            std::vector<double> x0;
            for (const auto& d : c.sys.init) {
                x0.push_back(d.mid());
            }
            const auto traj = oracle::simulate(c.sys, u, x0, times);
            EXPECT_EQ(oracle::holds_at_zero(phi, traj, u, dt), c.expected == Outcome::Valid) << c.formula;
        }
    }
}
