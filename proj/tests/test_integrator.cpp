#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stlmon/integrator.hpp"

using namespace stlmon;

namespace {

ContinuousSystem builtin(const char* name) { return parse_model(*builtin_model(name)); }

ContinuousSystem with_params(ContinuousSystem sys, const IntervalBox& u)
{
    for (int i = 0; i < sys.n_params(); ++i) {
        sys.set_param(i, u[i]);
    }
    return sys;
}

// Distance from x to the box, zero inside.
double outside_by(const Interval& box, double x)
{
    if (x < box.lo()) {
        return box.lo() - x;
    }
    if (x > box.hi()) {
        return x - box.hi();
    }
    return 0.0;
}

// Trajectories for `samples` random points of the parameter and initial boxes
// stay inside the enclosure at 1000 times, up to the oracle's own error.
void check_containment(const ContinuousSystem& sys, double horizon, int samples, double slack, std::uint64_t seed)
{
    SignalEnclosure enc(sys);
    enc.extend(horizon);
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> times;
    for (int k = 0; k < 1000; ++k) {
        times.push_back(horizon * k / 999.0);
    }
    for (int s = 0; s < samples; ++s) {
        std::vector<double> u;
        for (const auto& d : sys.param_domain) {
            u.push_back(d.lo() + unit(gen) * (d.hi() - d.lo()));
        }
        std::vector<double> x0;
        for (const auto& d : sys.init) {
            x0.push_back(d.lo() + unit(gen) * (d.hi() - d.lo()));
        }
        const auto traj = oracle::simulate(sys, u, x0, times);
        ASSERT_EQ(traj.size(), times.size());
        for (std::size_t k = 0; k < times.size(); ++k) {
            const IntervalBox box = enc.eval(Interval(times[k]));
            for (std::size_t i = 0; i < box.size(); ++i) {
                ASSERT_LE(outside_by(box[i], traj[k][i]), slack * (1 + std::abs(traj[k][i])))
                    << "t = " << times[k] << " var " << i << " box " << box[i] << " oracle " << traj[k][i];
            }
        }
    }
}

} // namespace

TEST(Integrator, TimerIsExact)
{
    SignalEnclosure enc(builtin("timer"));
    enc.extend(10);
    EXPECT_GE(enc.horizon(), 10.0);
    for (double t : {0.0, 0.5, 2.0, 7.25, 10.0}) {
        const Interval x = enc.eval(Interval(t))[0];
        EXPECT_TRUE(x.contains(t));
        EXPECT_LE(x.width(), 1e-9);
    }
    const Interval span = enc.eval(Interval(1, 3))[0];
    EXPECT_LE(span.lo(), 1.0);
    EXPECT_GE(span.hi(), 3.0);
}

TEST(Integrator, RotationClosedForm)
{
    const ContinuousSystem sys = with_params(builtin("rotation"), {Interval(0)});
    SignalEnclosure enc(sys);
    const double two_pi = 2 * std::numbers::pi;
    enc.extend(two_pi);
    const IntervalBox quarter = enc.eval(Interval(std::numbers::pi / 2));
    EXPECT_TRUE(quarter[0].contains(0.0) || std::abs(quarter[0].mid()) < 1e-15);
    EXPECT_TRUE(quarter[1].contains(1.0) || std::abs(quarter[1].mid() - 1) < 1e-15);
    // Full turn: the state returns to (1, 0). The decimal 2*pi is within an
    // ulp of the true period, so allow for the resulting offset.
    const IntervalBox full = enc.eval(Interval(two_pi));
    EXPECT_LT(outside_by(full[0], 1.0), 1e-15);
    EXPECT_LT(outside_by(full[1], std::sin(two_pi)), 1e-15);
    EXPECT_LT(max_width(full), 1e-12);
}

TEST(Integrator, StepsTileTheHorizon)
{
    for (const char* name : {"timer", "rotation", "lorenz"}) {
        ContinuousSystem sys = builtin(name);
        if (name == std::string("rotation")) {
            sys.set_param(0, Interval(0.04, 0.06));
        } else if (name == std::string("lorenz")) {
            sys = with_params(sys, {Interval(10), Interval(28), Interval(2.5)});
        }
        SignalEnclosure enc(sys);
        enc.extend(8.0);
        const auto& steps = enc.steps();
        ASSERT_FALSE(steps.empty());
        EXPECT_EQ(steps.front().span.lo(), 0.0);
        for (std::size_t i = 1; i < steps.size(); ++i) {
            EXPECT_EQ(steps[i].span.lo(), steps[i - 1].span.hi()) << name << " step " << i;
        }
        EXPECT_EQ(steps.back().span.hi(), enc.horizon());
    }
}

TEST(Integrator, ExtendIsIncremental)
{
    SignalEnclosure enc(with_params(builtin("rotation"), {Interval(0.04, 0.06)}));
    enc.extend(3);
    const std::size_t n = enc.steps().size();
    const IntervalBox at2 = enc.eval(Interval(2));
    enc.extend(6);
    EXPECT_GT(enc.steps().size(), n);
    EXPECT_EQ(enc.eval(Interval(2)), at2);
    EXPECT_THROW((void)enc.eval(Interval(7)), std::out_of_range);
}

TEST(Integrator, LorenzReachesTwentyOneThenBlowsUp)
{
    const ContinuousSystem sys = with_params(builtin("lorenz"), {Interval(10), Interval(28), Interval(2.5)});
    SignalEnclosure enc(sys);
    enc.extend(21);
    EXPECT_LT(max_width(enc.eval(Interval(21))), 1.0);
    try {
        enc.extend(40);
        FAIL() << "expected blow-up before t = 40";
    } catch (const IntegrationError& e) {
        EXPECT_GE(e.reached(), 21.0);
        EXPECT_LT(e.reached(), 40.0);
        EXPECT_EQ(e.reached(), enc.horizon());
    }
}

TEST(Integrator, TraceCsv)
{
    SignalEnclosure enc(builtin("timer"));
    enc.extend(10);
    std::ostringstream os;
    enc.write_trace(os);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t_lo,t_hi,x_lo,x_hi");
    double prev = -1;
    int rows = 0;
    while (std::getline(in, line)) {
        double t0 = 0;
        double t1 = 0;
        double lo = 0;
        double hi = 0;
        char c = 0;
        std::istringstream row(line);
        row >> t0 >> c >> t1 >> c >> lo >> c >> hi;
        EXPECT_LE(lo, t0);
        EXPECT_GE(hi, t1);
        EXPECT_GE(lo, prev);
        prev = lo;
        ++rows;
    }
    EXPECT_EQ(rows, static_cast<int>(enc.steps().size()) + 1);
}

// Point parameters, so the width is truncation error plus rounding and the
// order controller's tolerance is what drives it.
TEST(Integrator, TighterToleranceDoesNotWiden)
{
    const ContinuousSystem lorenz =
        with_params(builtin("lorenz"), {Interval(10), Interval(28), Interval(2.5)});
    const ContinuousSystem rotation = with_params(builtin("rotation"), {Interval(0.05)});
    for (const ContinuousSystem* sys : {&lorenz, &rotation}) {
        IntegratorConfig loose;
        loose.tolerance = 1e-10;
        IntegratorConfig tight = loose;
        tight.tolerance = 0.5e-10;
        SignalEnclosure a(*sys, loose);
        SignalEnclosure b(*sys, tight);
        a.extend(10);
        b.extend(10);
        for (double t = 0; t <= 10; t += 0.25) {
            const IntervalBox ea = a.eval(Interval(t));
            const IntervalBox eb = b.eval(Interval(t));
            for (std::size_t i = 0; i < ea.size(); ++i) {
                EXPECT_LE(eb[i].width(), ea[i].width() * (1 + 1e-6) + 1e-12) << "t = " << t;
            }
        }
    }
}

TEST(IntegratorProperty, TimerContainsTrajectory) { check_containment(builtin("timer"), 20, 1, 1e-9, 1); }

TEST(IntegratorProperty, RotationContainsTrajectories)
{
    check_containment(with_params(builtin("rotation"), {Interval(0.0)}), 16.3, 1, 1e-9, 2);
    check_containment(with_params(builtin("rotation"), {Interval(0.05)}), 16.3, 1, 1e-9, 3);
    check_containment(with_params(builtin("rotation"), {Interval(-0.051, -0.049)}), 16.3, 10, 1e-9, 4);
}

TEST(IntegratorProperty, LorenzContainsTrajectories)
{
    ContinuousSystem nominal = with_params(builtin("lorenz"), {Interval(10), Interval(28), Interval(2.5)});
    // The oracle's own error grows with the Lyapunov exponent.
    check_containment(nominal, 10, 1, 1e-6, 5);
    ContinuousSystem box = with_params(builtin("lorenz"), {Interval(9.999, 10.001), Interval(28), Interval(2.5)});
    check_containment(box, 3, 10, 1e-8, 6);
}
