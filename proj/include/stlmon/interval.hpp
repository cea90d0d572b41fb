#pragma once

// Outward-rounded interval arithmetic on binary64 bounds.
//
// Rounding is realized without touching the FPU mode: every bound is computed
// in round-to-nearest and the exact rounding error is recovered with an
// error-free transformation (TwoSum / FMA). The bound is then moved to the
// neighbouring float only when the computed value is on the wrong side of the
// exact one, so exact operations stay exact.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stlmon {

namespace rounding {

inline constexpr double inf = std::numeric_limits<double>::infinity();

inline double next_up(double x) { return std::nextafter(x, inf); }
inline double next_down(double x) { return std::nextafter(x, -inf); }

// Overflow to +/-inf in round-to-nearest is only legitimate in one direction.
inline double fix_down(double r, double a, double b)
{
    if (std::isinf(r) && r > 0 && std::isfinite(a) && std::isfinite(b)) {
        return std::numeric_limits<double>::max();
    }
    return r;
}
inline double fix_up(double r, double a, double b)
{
    if (std::isinf(r) && r < 0 && std::isfinite(a) && std::isfinite(b)) {
        return -std::numeric_limits<double>::max();
    }
    return r;
}

inline double add_down(double a, double b)
{
    const double s = a + b;
    if (!std::isfinite(s)) {
        return fix_down(s, a, b);
    }
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return err < 0 ? next_down(s) : s;
}

inline double add_up(double a, double b)
{
    const double s = a + b;
    if (!std::isfinite(s)) {
        return fix_up(s, a, b);
    }
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return err > 0 ? next_up(s) : s;
}

inline double sub_down(double a, double b) { return add_down(a, -b); }
inline double sub_up(double a, double b) { return add_up(a, -b); }

inline double mul_down(double a, double b)
{
    if (a == 0 || b == 0) {
        return 0.0;
    }
    const double p = a * b;
    if (!std::isfinite(p)) {
        return fix_down(p, a, b);
    }
    const double err = std::fma(a, b, -p);
    // Products deep in the subnormal range lose the error term; widen blindly.
    if (std::abs(p) < 1e-290) {
        return next_down(p);
    }
    return err < 0 ? next_down(p) : p;
}

inline double mul_up(double a, double b)
{
    if (a == 0 || b == 0) {
        return 0.0;
    }
    const double p = a * b;
    if (!std::isfinite(p)) {
        return fix_up(p, a, b);
    }
    const double err = std::fma(a, b, -p);
    if (std::abs(p) < 1e-290) {
        return next_up(p);
    }
    return err > 0 ? next_up(p) : p;
}

// a / b with b != 0. The sign of the residual a - q*b tells on which side of
// the exact quotient q lies.
inline double div_down(double a, double b)
{
    if (a == 0) {
        return 0.0;
    }
    if (std::isinf(b) && std::isfinite(a)) {
        return 0.0;
    }
    const double q = a / b;
    if (!std::isfinite(q)) {
        return fix_down(q, a, b);
    }
    if (std::abs(q) < 1e-290 || std::isinf(a)) {
        return next_down(q);
    }
    const double r = std::fma(-q, b, a);
    const bool exact_below = (r > 0) == (b > 0); // true quotient above q
    if (r == 0) {
        return q;
    }
    return exact_below ? q : next_down(q);
}

inline double div_up(double a, double b)
{
    if (a == 0) {
        return 0.0;
    }
    if (std::isinf(b) && std::isfinite(a)) {
        return 0.0;
    }
    const double q = a / b;
    if (!std::isfinite(q)) {
        return fix_up(q, a, b);
    }
    if (std::abs(q) < 1e-290 || std::isinf(a)) {
        return next_up(q);
    }
    const double r = std::fma(-q, b, a);
    if (r == 0) {
        return q;
    }
    const bool exact_above = (r > 0) == (b > 0);
    return exact_above ? next_up(q) : q;
}

// libm transcendental results are within one ulp; two ulps of widening covers
// binade crossings.
inline double widen_down(double x) { return next_down(next_down(x)); }
inline double widen_up(double x) { return next_up(next_up(x)); }

} // namespace rounding

/// Closed interval [lo, hi] with lo <= hi. The empty set is never an Interval;
/// operations that can produce it return MaybeInterval.
class Interval {
public:
    constexpr Interval() = default;
    Interval(double point) : lo_(point), hi_(point) // NOLINT(google-explicit-constructor)
    {
        if (std::isnan(point)) {
            throw std::invalid_argument("Interval: NaN bound");
        }
    }
    Interval(double lo, double hi) : lo_(lo), hi_(hi)
    {
        if (!(lo <= hi)) {
            throw std::invalid_argument("Interval: lower bound exceeds upper bound or is NaN");
        }
    }

    static Interval entire() { return {-rounding::inf, rounding::inf}; }

    [[nodiscard]] constexpr double lo() const { return lo_; }
    [[nodiscard]] constexpr double hi() const { return hi_; }

    [[nodiscard]] double mid() const
    {
        if (std::isinf(lo_) || std::isinf(hi_)) {
            if (std::isinf(lo_) && std::isinf(hi_)) {
                return 0.0;
            }
            return std::isinf(lo_) ? -std::numeric_limits<double>::max() : std::numeric_limits<double>::max();
        }
        const double m = 0.5 * lo_ + 0.5 * hi_;
        return std::clamp(m, lo_, hi_);
    }
    /// Width rounded up.
    [[nodiscard]] double width() const { return rounding::sub_up(hi_, lo_); }
    /// Radius rounded up; [mid - rad, mid + rad] contains the interval.
    [[nodiscard]] double rad() const
    {
        const double m = mid();
        return std::max(rounding::sub_up(hi_, m), rounding::sub_up(m, lo_));
    }
    /// Magnitude max |x|.
    [[nodiscard]] double mag() const { return std::max(std::abs(lo_), std::abs(hi_)); }
    /// Mignitude min |x|.
    [[nodiscard]] double mig() const
    {
        if (contains(0.0)) {
            return 0.0;
        }
        return std::min(std::abs(lo_), std::abs(hi_));
    }

    [[nodiscard]] bool is_point() const { return lo_ == hi_; }
    [[nodiscard]] bool is_finite() const { return std::isfinite(lo_) && std::isfinite(hi_); }
    [[nodiscard]] bool contains(double x) const { return lo_ <= x && x <= hi_; }
    [[nodiscard]] bool contains_zero() const { return lo_ <= 0.0 && 0.0 <= hi_; }
    [[nodiscard]] bool subset_of(const Interval& o) const { return o.lo_ <= lo_ && hi_ <= o.hi_; }
    /// this is contained in the topological interior of o.
    [[nodiscard]] bool interior_of(const Interval& o) const { return o.lo_ < lo_ && hi_ < o.hi_; }
    [[nodiscard]] bool overlaps(const Interval& o) const { return lo_ <= o.hi_ && o.lo_ <= hi_; }

    friend bool operator==(const Interval&, const Interval&) = default;

private:
    double lo_ = 0.0;
    double hi_ = 0.0;
};

using MaybeInterval = std::optional<Interval>;

inline std::ostream& operator<<(std::ostream& os, const Interval& a)
{
    return os << '[' << a.lo() << ", " << a.hi() << ']';
}

inline Interval hull(const Interval& a, const Interval& b)
{
    return {std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi())};
}

inline MaybeInterval hull(const MaybeInterval& a, const MaybeInterval& b)
{
    if (!a) {
        return b;
    }
    if (!b) {
        return a;
    }
    return hull(*a, *b);
}

inline MaybeInterval intersect(const Interval& a, const Interval& b)
{
    const double lo = std::max(a.lo(), b.lo());
    const double hi = std::min(a.hi(), b.hi());
    if (lo > hi) {
        return std::nullopt;
    }
    return Interval{lo, hi};
}

inline Interval operator+(const Interval& a, const Interval& b)
{
    return {rounding::add_down(a.lo(), b.lo()), rounding::add_up(a.hi(), b.hi())};
}

inline Interval operator-(const Interval& a) { return {-a.hi(), -a.lo()}; }

inline Interval operator-(const Interval& a, const Interval& b)
{
    return {rounding::sub_down(a.lo(), b.hi()), rounding::sub_up(a.hi(), b.lo())};
}

inline Interval operator*(const Interval& a, const Interval& b)
{
    using namespace rounding;
    if (a.is_point() && b.is_point()) {
        const double l = mul_down(a.lo(), b.lo());
        const double h = mul_up(a.lo(), b.lo());
        return {std::min(l, h), std::max(l, h)};
    }
    const double c[4][2] = {{a.lo(), b.lo()}, {a.lo(), b.hi()}, {a.hi(), b.lo()}, {a.hi(), b.hi()}};
    double lo = inf;
    double hi = -inf;
    for (const auto& p : c) {
        lo = std::min(lo, mul_down(p[0], p[1]));
        hi = std::max(hi, mul_up(p[0], p[1]));
    }
    return {lo, hi};
}

/// Ordinary division; the divisor must not contain zero.
inline Interval operator/(const Interval& a, const Interval& b)
{
    using namespace rounding;
    if (b.contains_zero()) {
        throw std::domain_error("interval division by an interval containing zero");
    }
    const double c[4][2] = {{a.lo(), b.lo()}, {a.lo(), b.hi()}, {a.hi(), b.lo()}, {a.hi(), b.hi()}};
    double lo = inf;
    double hi = -inf;
    for (const auto& p : c) {
        lo = std::min(lo, div_down(p[0], p[1]));
        hi = std::max(hi, div_up(p[0], p[1]));
    }
    return {lo, hi};
}

inline Interval& operator+=(Interval& a, const Interval& b) { return a = a + b; }
inline Interval& operator-=(Interval& a, const Interval& b) { return a = a - b; }
inline Interval& operator*=(Interval& a, const Interval& b) { return a = a * b; }

inline Interval sqr(const Interval& a)
{
    using namespace rounding;
    const double l = a.mig();
    const double h = a.mag();
    return {mul_down(l, l), mul_up(h, h)};
}

/// Integer power with the tight even-power rule.
inline Interval pow(const Interval& a, int n)
{
    if (n == 0) {
        return Interval{1.0};
    }
    if (n < 0) {
        return Interval{1.0} / pow(a, -n);
    }
    if (n == 1) {
        return a;
    }
    // Bounds of x^n are attained at endpoints (odd n) or at mig/mag (even n);
    // multiply endpoint magnitudes with directed rounding.
    auto pow_dir = [n](double x, bool up) {
        double r = 1.0;
        const double ax = std::abs(x);
        for (int i = 0; i < n; ++i) {
            r = up ? rounding::mul_up(r, ax) : rounding::mul_down(r, ax);
        }
        return r;
    };
    if (n % 2 == 0) {
        return {pow_dir(a.mig(), false), pow_dir(a.mag(), true)};
    }
    auto signed_pow = [&](double x, bool up) {
        if (x >= 0) {
            return pow_dir(x, up);
        }
        return -pow_dir(x, !up);
    };
    return {signed_pow(a.lo(), false), signed_pow(a.hi(), true)};
}

namespace detail {

// Enclosure of pi used to locate extrema of sin/cos.
inline constexpr double pi_lo = 3.141592653589793; // nearest double, below pi

// True when some x in [a, b] may equal offset + 2*k*pi for an integer k.
// Over-approximating here only loosens the result.
inline bool may_hit(double a, double b, double offset)
{
    const double two_pi = 2 * pi_lo;
    const double ka = (a - offset) / two_pi;
    const double kb = (b - offset) / two_pi;
    const double slack = 1e-9 + 4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(ka), std::abs(kb));
    return std::ceil(ka - slack) <= std::floor(kb + slack);
}

} // namespace detail

inline Interval sin(const Interval& a)
{
    using namespace rounding;
    if (!a.is_finite() || a.width() >= 2 * detail::pi_lo) {
        return {-1.0, 1.0};
    }
    if (a.lo() == 0.0 && a.hi() == 0.0) {
        return Interval{0.0};
    }
    const double sa = std::sin(a.lo());
    const double sb = std::sin(a.hi());
    double lo = widen_down(std::min(sa, sb));
    double hi = widen_up(std::max(sa, sb));
    if (detail::may_hit(a.lo(), a.hi(), 0.5 * detail::pi_lo)) {
        hi = 1.0;
    }
    if (detail::may_hit(a.lo(), a.hi(), -0.5 * detail::pi_lo)) {
        lo = -1.0;
    }
    return {std::max(lo, -1.0), std::min(hi, 1.0)};
}

inline Interval cos(const Interval& a)
{
    using namespace rounding;
    if (!a.is_finite() || a.width() >= 2 * detail::pi_lo) {
        return {-1.0, 1.0};
    }
    if (a.lo() == 0.0 && a.hi() == 0.0) {
        return Interval{1.0};
    }
    const double ca = std::cos(a.lo());
    const double cb = std::cos(a.hi());
    double lo = widen_down(std::min(ca, cb));
    double hi = widen_up(std::max(ca, cb));
    if (detail::may_hit(a.lo(), a.hi(), 0.0)) {
        hi = 1.0;
    }
    if (detail::may_hit(a.lo(), a.hi(), detail::pi_lo)) {
        lo = -1.0;
    }
    return {std::max(lo, -1.0), std::min(hi, 1.0)};
}

inline Interval exp(const Interval& a)
{
    using namespace rounding;
    if (a.lo() == 0.0 && a.hi() == 0.0) {
        return Interval{1.0};
    }
    const double lo = std::isinf(a.lo()) ? 0.0 : std::max(0.0, widen_down(std::exp(a.lo())));
    const double hi = std::isinf(a.hi()) ? inf : widen_up(std::exp(a.hi()));
    return {lo, hi};
}

/// Hypermetric max(|a.hi - b.hi|, |a.lo - b.lo|), rounded up.
inline double hypermetric(const Interval& a, const Interval& b)
{
    using namespace rounding;
    const double d_hi = a.hi() >= b.hi() ? sub_up(a.hi(), b.hi()) : sub_up(b.hi(), a.hi());
    const double d_lo = a.lo() >= b.lo() ? sub_up(a.lo(), b.lo()) : sub_up(b.lo(), a.lo());
    return std::max(d_hi, d_lo);
}

/// Hull of {d in dom | exists x in a, y in b : x = y * d}.
///
/// When b straddles zero the feasible set may split in two pieces; their hull
/// is returned.
inline MaybeInterval ext_div(const Interval& a, const Interval& b, const Interval& dom)
{
    using namespace rounding;
    if (!b.contains_zero()) {
        return intersect(a / b, dom);
    }
    if (a.contains_zero()) {
        return dom;
    }
    // Excluded open gap (g1, g2). Rounding shrinks the gap so that no feasible
    // quotient is removed.
    double g1 = 0;
    double g2 = 0;
    if (a.lo() > 0) {
        g1 = b.lo() == 0 ? -inf : div_up(a.lo(), b.lo());
        g2 = b.hi() == 0 ? inf : div_down(a.lo(), b.hi());
    } else { // a.hi() < 0
        g1 = b.hi() == 0 ? -inf : div_up(a.hi(), b.hi());
        g2 = b.lo() == 0 ? inf : div_down(a.hi(), b.lo());
    }
    MaybeInterval left;
    MaybeInterval right;
    if (dom.lo() <= g1) {
        left = Interval{dom.lo(), std::min(dom.hi(), g1)};
    }
    if (g2 <= dom.hi()) {
        right = Interval{std::max(dom.lo(), g2), dom.hi()};
    }
    return hull(left, right);
}

/// One interval Newton step anchored at `anchor`:
/// anchor + ext_div(-f(anchor), f'(domain), domain - anchor).
inline MaybeInterval newton_step(const Interval& f_at_anchor, const Interval& df_over_domain, const Interval& domain,
                                 double anchor)
{
    if (!domain.contains(anchor)) {
        throw std::invalid_argument("newton_step: anchor outside domain");
    }
    const Interval shifted = domain - Interval{anchor};
    auto step = ext_div(-f_at_anchor, df_over_domain, shifted);
    if (!step) {
        return std::nullopt;
    }
    return intersect(Interval{anchor} + *step, domain);
}

/// Midpoint-radius inflation: radius scaled by `factor` plus `absolute`, then
/// one extra ulp on each side so that point intervals grow.
inline Interval inflate(const Interval& a, double factor, double absolute = 0.0)
{
    using namespace rounding;
    const double m = a.mid();
    const double r = add_up(mul_up(a.rad(), factor), absolute);
    return {next_down(sub_down(m, r)), next_up(add_up(m, r))};
}

// ---------------------------------------------------------------------------
// Boxes

using IntervalBox = std::vector<Interval>;

inline IntervalBox hull(const IntervalBox& a, const IntervalBox& b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("hull: dimension mismatch");
    }
    IntervalBox r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        r[i] = hull(a[i], b[i]);
    }
    return r;
}

inline std::optional<IntervalBox> intersect(const IntervalBox& a, const IntervalBox& b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("intersect: dimension mismatch");
    }
    IntervalBox r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto c = intersect(a[i], b[i]);
        if (!c) {
            return std::nullopt;
        }
        r[i] = *c;
    }
    return r;
}

inline bool subset_of(const IntervalBox& a, const IntervalBox& b)
{
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].subset_of(b[i])) {
            return false;
        }
    }
    return true;
}

inline bool contains(const IntervalBox& a, const std::vector<double>& x)
{
    if (a.size() != x.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].contains(x[i])) {
            return false;
        }
    }
    return true;
}

inline double max_width(const IntervalBox& a)
{
    double w = 0;
    for (const auto& c : a) {
        w = std::max(w, c.width());
    }
    return w;
}

inline std::ostream& operator<<(std::ostream& os, const IntervalBox& b)
{
    os << '(';
    for (std::size_t i = 0; i < b.size(); ++i) {
        os << (i ? ", " : "") << b[i];
    }
    return os << ')';
}

} // namespace stlmon
