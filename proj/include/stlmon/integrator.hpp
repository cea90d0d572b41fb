#pragma once

// Validated integration of ContinuousSystem flows.
//
// Each step certifies an a priori box B by the first-order Picard test
// Y + [0,h] G(B) subset of B, then encloses the step with a Taylor polynomial
// of fixed order and a Lagrange remainder evaluated over B. Uncertainty in the
// initial value and the parameters is carried in a mean-value form
// y in yhat + A r with an orthogonal frame A (Lohner's QR method). Parameters
// are extra state components with zero derivative.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "interval.hpp"
#include "model.hpp"
#include "taylor.hpp"

namespace stlmon {

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& msg, double reached)
        : std::runtime_error(msg + " (reached t = " + std::to_string(reached) + ")"), reached_(reached)
    {
    }
    /// Horizon reached before the failure.
    [[nodiscard]] double reached() const { return reached_; }

private:
    double reached_;
};

struct IntegratorConfig {
    int order = 15;
    /// Target local truncation error, relative to max(1, |x|).
    double tolerance = 1e-16;
    /// Smallest step the controller may take.
    double t_min = 1e-14;
    std::size_t max_steps = 2'000'000;
};

/// One certified step over `span`. For tau in [0, h] and every admissible
/// (u, x0) the solution satisfies
///   y(t0 + tau) in sum_k coef_k tau^k + (sum_k W_k tau^k) r + rem tau^p,
/// and lies in `apriori`.
struct StepModel {
    Interval span;
    Interval h;
    int dim = 0;
    int order = 0;
    std::vector<Interval> coef;  // order x dim, Taylor coefficients at the frame centre
    std::vector<Interval> frame; // order x dim x dim, coefficient sensitivities times A
    IntervalBox r;
    IntervalBox remainder;  // p-th coefficient over the a priori box
    IntervalBox apriori;
    IntervalBox start;      // enclosure at span.lo()
    IntervalBox range;      // enclosure over the whole span

    /// Enclosure of the full state (u, x) for tau within [0, h.hi()].
    [[nodiscard]] IntervalBox eval(const Interval& tau) const
    {
        if (tau.lo() == 0.0 && tau.hi() == 0.0) {
            return start;
        }
        const int d = dim;
        const int p = order;
        IntervalBox out(d);
        std::vector<Interval> wt(static_cast<std::size_t>(d) * d);
        for (int i = 0; i < d; ++i) {
            Interval acc = remainder[i];
            for (int k = p - 1; k >= 0; --k) {
                acc = acc * tau + coef[static_cast<std::size_t>(k) * d + i];
            }
            // remainder * tau^p is folded into the Horner scheme above:
            // ((rem*tau + c_{p-1})*tau + ...) + c_0.
            out[i] = acc;
        }
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                Interval acc{0.0};
                for (int k = p - 1; k >= 0; --k) {
                    acc = acc * tau + frame[(static_cast<std::size_t>(k) * d + i) * d + j];
                }
                wt[static_cast<std::size_t>(i) * d + j] = acc;
            }
        }
        for (int i = 0; i < d; ++i) {
            Interval acc{0.0};
            for (int j = 0; j < d; ++j) {
                acc += wt[static_cast<std::size_t>(i) * d + j] * r[j];
            }
            out[i] += acc;
            auto cut = intersect(out[i], apriori[i]);
            out[i] = cut ? *cut : apriori[i];
        }
        return out;
    }
};

namespace detail {

using Matrix = std::vector<double>; // row-major d x d
using IMatrix = std::vector<Interval>;

inline IMatrix imul(const IMatrix& a, const Matrix& b, int d)
{
    IMatrix out(static_cast<std::size_t>(d) * d, Interval{0.0});
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            Interval acc{0.0};
            for (int k = 0; k < d; ++k) {
                const double bkj = b[static_cast<std::size_t>(k) * d + j];
                if (bkj != 0.0) {
                    acc += a[static_cast<std::size_t>(i) * d + k] * Interval{bkj};
                }
            }
            out[static_cast<std::size_t>(i) * d + j] = acc;
        }
    }
    return out;
}

inline IMatrix imul(const IMatrix& a, const IMatrix& b, int d)
{
    IMatrix out(static_cast<std::size_t>(d) * d, Interval{0.0});
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            Interval acc{0.0};
            for (int k = 0; k < d; ++k) {
                acc += a[static_cast<std::size_t>(i) * d + k] * b[static_cast<std::size_t>(k) * d + j];
            }
            out[static_cast<std::size_t>(i) * d + j] = acc;
        }
    }
    return out;
}

inline IntervalBox imv(const IMatrix& a, const IntervalBox& x, int d)
{
    IntervalBox out(d, Interval{0.0});
    for (int i = 0; i < d; ++i) {
        Interval acc{0.0};
        for (int k = 0; k < d; ++k) {
            acc += a[static_cast<std::size_t>(i) * d + k] * x[k];
        }
        out[i] = acc;
    }
    return out;
}

inline IntervalBox imv(const Matrix& a, const IntervalBox& x, int d)
{
    IntervalBox out(d, Interval{0.0});
    for (int i = 0; i < d; ++i) {
        Interval acc{0.0};
        for (int k = 0; k < d; ++k) {
            const double aik = a[static_cast<std::size_t>(i) * d + k];
            if (aik != 0.0) {
                acc += Interval{aik} * x[k];
            }
        }
        out[i] = acc;
    }
    return out;
}

// Householder QR of a (d x d); returns the orthogonal factor Q.
inline Matrix householder_q(Matrix a, int d)
{
    Matrix q(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) {
        q[static_cast<std::size_t>(i) * d + i] = 1.0;
    }
    std::vector<double> v(d);
    for (int k = 0; k + 1 < d; ++k) {
        double norm = 0.0;
        for (int i = k; i < d; ++i) {
            norm = std::hypot(norm, a[static_cast<std::size_t>(i) * d + k]);
        }
        if (norm == 0.0) {
            continue;
        }
        const double akk = a[static_cast<std::size_t>(k) * d + k];
        const double alpha = akk > 0 ? -norm : norm;
        std::fill(v.begin(), v.end(), 0.0);
        v[k] = akk - alpha;
        for (int i = k + 1; i < d; ++i) {
            v[i] = a[static_cast<std::size_t>(i) * d + k];
        }
        double vv = 0.0;
        for (int i = k; i < d; ++i) {
            vv += v[i] * v[i];
        }
        if (vv == 0.0) {
            continue;
        }
        // a <- H a, q <- q H with H = I - 2 v v^T / (v^T v)
        for (int j = 0; j < d; ++j) {
            double s = 0.0;
            for (int i = k; i < d; ++i) {
                s += v[i] * a[static_cast<std::size_t>(i) * d + j];
            }
            s = 2.0 * s / vv;
            for (int i = k; i < d; ++i) {
                a[static_cast<std::size_t>(i) * d + j] -= s * v[i];
            }
        }
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int j = k; j < d; ++j) {
                s += q[static_cast<std::size_t>(i) * d + j] * v[j];
            }
            s = 2.0 * s / vv;
            for (int j = k; j < d; ++j) {
                q[static_cast<std::size_t>(i) * d + j] -= s * v[j];
            }
        }
    }
    return q;
}

// Interval enclosure of the inverse of a nearly orthogonal Q.
inline IMatrix orthogonal_inverse(const Matrix& q, int d)
{
    const auto dd = static_cast<std::size_t>(d) * d;
    IMatrix qt(dd);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            qt[static_cast<std::size_t>(i) * d + j] = Interval{q[static_cast<std::size_t>(j) * d + i]};
        }
    }
    const IMatrix qtq = imul(qt, q, d);
    double delta = 0.0;
    double norm_qt = 0.0;
    for (int i = 0; i < d; ++i) {
        double row = 0.0;
        double row_qt = 0.0;
        for (int j = 0; j < d; ++j) {
            const Interval e = Interval{i == j ? 1.0 : 0.0} - qtq[static_cast<std::size_t>(i) * d + j];
            row = rounding::add_up(row, e.mag());
            row_qt = rounding::add_up(row_qt, qt[static_cast<std::size_t>(i) * d + j].mag());
        }
        delta = std::max(delta, row);
        norm_qt = std::max(norm_qt, row_qt);
    }
    if (delta >= 0.5) {
        throw std::runtime_error("frame matrix is not orthogonal enough to invert");
    }
    const double eps = rounding::mul_up(rounding::div_up(delta, rounding::sub_down(1.0, delta)), norm_qt);
    IMatrix inv(dd);
    for (std::size_t i = 0; i < dd; ++i) {
        inv[i] = qt[i] + Interval{-eps, eps};
    }
    return inv;
}

} // namespace detail

/// Validated solution operator of a system for given parameter and initial
/// boxes. Steps are appended by extend() and evaluated by eval().
class SignalEnclosure {
public:
    SignalEnclosure(ContinuousSystem sys, const IntervalBox& u_box, const IntervalBox& init_box,
                    IntegratorConfig cfg = {})
        : sys_(std::move(sys)), u_box_(u_box), init_box_(init_box), cfg_(cfg), tape_(sys_)
    {
        if (static_cast<int>(u_box.size()) != sys_.n_params() || static_cast<int>(init_box.size()) != sys_.n_vars()) {
            throw std::invalid_argument("SignalEnclosure: box dimensions do not match the system");
        }
        if (cfg_.order < 2) {
            throw std::invalid_argument("SignalEnclosure: order must be at least 2");
        }
        d_ = tape_.dim();
        y_.reserve(d_);
        for (const auto& v : u_box) {
            y_.push_back(v);
        }
        for (const auto& v : init_box) {
            y_.push_back(v);
        }
        yhat_.resize(d_);
        r_.resize(d_);
        a_.assign(static_cast<std::size_t>(d_) * d_, 0.0);
        for (int i = 0; i < d_; ++i) {
            yhat_[i] = y_[i].mid();
            r_[i] = y_[i] - Interval{yhat_[i]};
            a_[static_cast<std::size_t>(i) * d_ + i] = 1.0;
        }
    }

    /// Enclosure for the system's own parameter domain and initial box.
    explicit SignalEnclosure(const ContinuousSystem& sys, IntegratorConfig cfg = {})
        : SignalEnclosure(sys, sys.param_domain, sys.init, cfg)
    {
    }

    [[nodiscard]] const ContinuousSystem& system() const { return sys_; }
    [[nodiscard]] const IntervalBox& u_box() const { return u_box_; }
    [[nodiscard]] const IntervalBox& init_box() const { return init_box_; }
    [[nodiscard]] const IntegratorConfig& config() const { return cfg_; }
    [[nodiscard]] double horizon() const { return t_; }
    [[nodiscard]] const std::vector<StepModel>& steps() const { return steps_; }

    /// Appends steps until the horizon reaches `target`.
    void extend(double target)
    {
        if (!(target >= 0) || !std::isfinite(target)) {
            throw std::invalid_argument("extend: target must be finite and non-negative");
        }
        while (t_ < target) {
            if (steps_.size() >= cfg_.max_steps) {
                throw IntegrationError("step limit exceeded", t_);
            }
            step(target);
        }
    }

    /// Enclosure of the state x over the time interval t, which must lie in
    /// [0, horizon()].
    [[nodiscard]] IntervalBox eval(const Interval& t) const
    {
        IntervalBox full = eval_full(t);
        return IntervalBox(full.begin() + tape_.n_params(), full.end());
    }

    /// Enclosure of (u, x) over t.
    [[nodiscard]] IntervalBox eval_full(const Interval& t) const
    {
        if (t.lo() < 0 || t.hi() > t_) {
            throw std::out_of_range("eval: time outside the integrated horizon");
        }
        if (steps_.empty()) {
            return y_;
        }
        // First step whose span reaches t.lo().
        auto it = std::lower_bound(steps_.begin(), steps_.end(), t.lo(),
                                   [](const StepModel& s, double v) { return s.span.hi() < v; });
        std::optional<IntervalBox> acc;
        for (; it != steps_.end() && it->span.lo() <= t.hi(); ++it) {
            IntervalBox part;
            if (t.lo() <= it->span.lo() && it->span.hi() <= t.hi() && !t.is_point()) {
                part = it->range;
            } else {
                const double lo = std::max(t.lo(), it->span.lo());
                const double hi = std::min(t.hi(), it->span.hi());
                if (lo == it->span.lo() && hi == lo) {
                    part = it->start;
                } else {
                    const Interval tau{std::max(0.0, rounding::sub_down(lo, it->span.lo())),
                                       std::min(it->h.hi(), rounding::sub_up(hi, it->span.lo()))};
                    part = it->eval(tau);
                }
            }
            if (!acc) {
                acc = part;
            } else if (t.is_point()) {
                // Two steps share this endpoint; both enclosures are valid.
                auto both = intersect(*acc, part);
                if (both) {
                    acc = *both;
                }
            } else {
                acc = hull(*acc, part);
            }
        }
        if (!acc) {
            throw std::logic_error("eval: no step covers the requested time");
        }
        return *acc;
    }

    /// Writes the trace CSV: t_lo,t_hi then lo/hi per variable, one row per
    /// step span and a last row for the final time point.
    void write_trace(std::ostream& os) const
    {
        os << "t_lo,t_hi";
        for (const auto& v : sys_.names.vars) {
            os << ',' << v << "_lo," << v << "_hi";
        }
        os << '\n';
        const int m = tape_.n_params();
        auto row = [&](double a, double b, const IntervalBox& box) {
            os << format_double(a) << ',' << format_double(b);
            for (int i = m; i < d_; ++i) {
                os << ',' << format_double(box[i].lo()) << ',' << format_double(box[i].hi());
            }
            os << '\n';
        };
        for (const auto& s : steps_) {
            row(s.span.lo(), s.span.hi(), s.range);
        }
        row(t_, t_, y_);
    }

private:
    IntervalBox rhs(const IntervalBox& box) const
    {
        taylor::Series<Interval> s(tape_, 1);
        s.compute(box);
        IntervalBox g(d_);
        for (int i = 0; i < d_; ++i) {
            g[i] = s.y(i, 1);
        }
        return g;
    }

    // Picard a priori box over [0, h_hi] for all starts in y.
    std::optional<IntervalBox> apriori(const IntervalBox& y, const Interval& h0) const
    {
        auto picard = [&](const IntervalBox& b) {
            IntervalBox g = rhs(b);
            IntervalBox out(d_);
            for (int i = 0; i < d_; ++i) {
                out[i] = y[i] + h0 * g[i];
            }
            return out;
        };
        auto widen = [&](const IntervalBox& b) {
            IntervalBox out(d_);
            for (int i = 0; i < d_; ++i) {
                if (i < tape_.n_params()) {
                    out[i] = b[i];
                    continue;
                }
                const double w = 0.1 * b[i].width() + 1e-14 * std::max(1.0, b[i].mag());
                out[i] = b[i] + Interval{-w, w};
            }
            return out;
        };
        IntervalBox b = widen(picard(y));
        for (int it = 0; it < 8; ++it) {
            IntervalBox p = picard(b);
            if (subset_of(p, b)) {
                return p;
            }
            b = widen(hull(b, p));
        }
        return std::nullopt;
    }

    double estimate_step(double remaining, double tol_abs) const
    {
        const int p = cfg_.order;
        taylor::Series<double> s(tape_, p);
        s.compute(yhat_);
        double cp = 0.0;
        double cp1 = 0.0;
        for (int i = 0; i < d_; ++i) {
            cp = std::max(cp, std::abs(s.y(i, p)));
            cp1 = std::max(cp1, std::abs(s.y(i, p - 1)));
        }
        double h = remaining;
        if (cp > 0 && std::isfinite(cp)) {
            h = std::min(h, std::pow(tol_abs / cp, 1.0 / p));
        }
        if (cp1 > 0 && std::isfinite(cp1)) {
            h = std::min(h, std::pow(tol_abs / cp1, 1.0 / (p - 1)));
        }
        if (!std::isfinite(cp) || !std::isfinite(cp1)) {
            h = 0.0;
        }
        return 0.9 * h;
    }

    void step(double target)
    {
        const int p = cfg_.order;
        const int d = d_;
        const int m = tape_.n_params();
        double scale = 1.0;
        for (int i = m; i < d; ++i) {
            scale = std::max(scale, std::abs(yhat_[i]));
        }
        const double tol_abs = cfg_.tolerance * scale;
        double h = estimate_step(target - t_, tol_abs);
        if (last_h_ > 0) {
            h = std::min(h, 4.0 * last_h_);
        }

        IntervalBox yh = y_;
        for (int i = 0; i < d; ++i) {
            yh[i] = hull(yh[i], Interval{yhat_[i]});
        }
        taylor::Series<Interval> at_box(tape_, p);
        at_box.compute(yh);
        taylor::Series<Interval> at_centre(tape_, p);
        {
            IntervalBox c(d);
            for (int i = 0; i < d; ++i) {
                c[i] = Interval{yhat_[i]};
            }
            at_centre.compute(c);
        }
        taylor::Series<Interval> at_b(tape_, p);

        for (;;) {
            double t_next = t_ + h;
            if (t_next >= target || target - t_next < cfg_.t_min) {
                t_next = target;
            }
            if (!(t_next - t_ >= cfg_.t_min) && target - t_ >= cfg_.t_min) {
                throw IntegrationError("step size fell below t_min", t_);
            }
            const Interval hh = Interval{t_next} - Interval{t_};
            const Interval h0{0.0, hh.hi()};
            auto b = apriori(y_, h0);
            if (!b) {
                h = 0.5 * (t_next - t_);
                continue;
            }
            // Tighten B with the high-order enclosure, then bound the remainder.
            IntervalBox bb = *b;
            IntervalBox rem(d);
            for (int pass = 0; pass < 2; ++pass) {
                at_b.compute(bb);
                for (int i = 0; i < d; ++i) {
                    rem[i] = at_b.y(i, p);
                }
                for (int i = 0; i < d; ++i) {
                    Interval acc = rem[i];
                    for (int k = p - 1; k >= 0; --k) {
                        acc = acc * h0 + at_box.y(i, k);
                    }
                    auto cut = intersect(acc, bb[i]);
                    if (cut) {
                        bb[i] = *cut;
                    }
                }
            }
            at_b.compute(bb);
            const Interval hp = pow(hh, p);
            IntervalBox z(d);
            double zmax = 0.0;
            for (int i = 0; i < d; ++i) {
                rem[i] = at_b.y(i, p);
                z[i] = rem[i] * hp;
                zmax = std::max(zmax, z[i].mag());
            }
            if (!std::isfinite(zmax)) {
                h = 0.5 * (t_next - t_);
                continue;
            }
            if (zmax > tol_abs && t_next - t_ > cfg_.t_min) {
                // Rescale from the measured remainder rather than halving, so
                // the accepted step varies smoothly with the tolerance.
                const double f = 0.9 * std::pow(tol_abs / zmax, 1.0 / p);
                h = (t_next - t_) * std::clamp(f, 0.1, 0.9);
                continue;
            }
            commit(t_next, hh, bb, rem, at_box, at_centre);
            last_h_ = t_next - steps_.back().span.lo();
            return;
        }
    }

    void commit(double t_next, const Interval& hh, const IntervalBox& bb, const IntervalBox& rem,
                const taylor::Series<Interval>& at_box_values,
                const taylor::Series<Interval>& at_centre)
    {
        const int p = cfg_.order;
        const int d = d_;
        const int m = tape_.n_params();
        const auto dd = static_cast<std::size_t>(d) * d;

        taylor::Sensitivity sens(tape_, p);
        sens.compute(at_box_values);

        // Powers of the step length.
        std::vector<Interval> hpow(p + 1);
        hpow[0] = Interval{1.0};
        for (int k = 1; k <= p; ++k) {
            hpow[k] = hpow[k - 1] * hh;
        }

        detail::IMatrix s(dd, Interval{0.0});
        for (int k = 0; k < p; ++k) {
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    s[static_cast<std::size_t>(i) * d + j] += sens.jac(k, i, j) * hpow[k];
                }
            }
        }
        const detail::IMatrix mm = detail::imul(s, a_, d);

        IntervalBox v(d);
        for (int i = 0; i < d; ++i) {
            // Horner keeps the outward roundings at the scale of the increment;
            // only the final addition of c_0 rounds at the scale of the state.
            Interval acc = rem[i];
            for (int k = p - 1; k >= 1; --k) {
                acc = acc * hh + at_centre.y(i, k);
            }
            v[i] = at_centre.y(i, 0) + acc * hh;
        }

        StepModel st;
        st.span = Interval{t_, t_next};
        st.h = hh;
        st.dim = d;
        st.order = p;
        st.coef.resize(static_cast<std::size_t>(p) * d);
        st.frame.resize(static_cast<std::size_t>(p) * dd);
        for (int k = 0; k < p; ++k) {
            for (int i = 0; i < d; ++i) {
                st.coef[static_cast<std::size_t>(k) * d + i] = at_centre.y(i, k);
            }
            detail::IMatrix sk(dd);
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    sk[static_cast<std::size_t>(i) * d + j] = sens.jac(k, i, j);
                }
            }
            const detail::IMatrix wk = detail::imul(sk, a_, d);
            std::copy(wk.begin(), wk.end(), st.frame.begin() + static_cast<std::ptrdiff_t>(k * dd));
        }
        st.r = r_;
        st.remainder = rem;
        st.apriori = bb;
        st.start = y_;

        // New frame: QR of mid(M) with columns ordered by their contribution.
        std::vector<double> mid_m(dd);
        for (std::size_t i = 0; i < dd; ++i) {
            mid_m[i] = mm[i].mid();
        }
        std::vector<int> perm(d);
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<double> weight(d);
        for (int j = 0; j < d; ++j) {
            double norm = 0.0;
            for (int i = 0; i < d; ++i) {
                norm = std::hypot(norm, mid_m[static_cast<std::size_t>(i) * d + j]);
            }
            weight[j] = norm * r_[j].width();
        }
        std::stable_sort(perm.begin(), perm.end(), [&](int x, int y) { return weight[x] > weight[y]; });
        detail::Matrix permuted(dd);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                permuted[static_cast<std::size_t>(i) * d + j] = mid_m[static_cast<std::size_t>(i) * d + perm[j]];
            }
        }
        detail::Matrix q = detail::householder_q(permuted, d);
        detail::IMatrix qinv;
        try {
            qinv = detail::orthogonal_inverse(q, d);
        } catch (const std::runtime_error&) {
            throw IntegrationError("loss of orthogonality in the Lohner frame", t_);
        }

        std::vector<double> yhat_next(d);
        IntervalBox dv(d);
        for (int i = 0; i < d; ++i) {
            yhat_next[i] = v[i].mid();
            dv[i] = v[i] - Interval{yhat_next[i]};
        }
        const IntervalBox r_next = [&] {
            IntervalBox a = detail::imv(detail::imul(qinv, mm, d), r_, d);
            IntervalBox b = detail::imv(qinv, dv, d);
            for (int i = 0; i < d; ++i) {
                a[i] += b[i];
            }
            return a;
        }();
        IntervalBox direct = detail::imv(mm, r_, d);
        IntervalBox framed = detail::imv(q, r_next, d);
        IntervalBox y_next(d);
        for (int i = 0; i < d; ++i) {
            const Interval x1 = v[i] + direct[i];
            const Interval x2 = Interval{yhat_next[i]} + framed[i];
            auto both = intersect(x1, x2);
            if (!both) {
                throw IntegrationError("inconsistent enclosures", t_);
            }
            y_next[i] = *both;
            if (i < m) {
                auto cut = intersect(y_next[i], u_box_[i]);
                y_next[i] = cut ? *cut : u_box_[i];
            } else if (!y_next[i].is_finite() ||
                       y_next[i].width() > sys_.state_domain[i - m].width()) {
                throw IntegrationError("enclosure blow-up", t_);
            }
        }

        st.range = st.eval(Interval{0.0, hh.hi()});
        // The endpoint enclosure is tighter than the dense one at tau = h.
        for (int i = 0; i < d; ++i) {
            st.range[i] = hull(st.range[i], y_next[i]);
        }
        steps_.push_back(std::move(st));

        t_ = t_next;
        y_ = std::move(y_next);
        yhat_ = std::move(yhat_next);
        a_ = std::move(q);
        r_ = r_next;
    }

    ContinuousSystem sys_;
    IntervalBox u_box_;
    IntervalBox init_box_;
    IntegratorConfig cfg_;
    taylor::Tape tape_;
    int d_ = 0;

    double t_ = 0.0;
    double last_h_ = 0.0;
    IntervalBox y_;
    std::vector<double> yhat_;
    detail::Matrix a_;
    IntervalBox r_;
    std::vector<StepModel> steps_;
};

} // namespace stlmon
