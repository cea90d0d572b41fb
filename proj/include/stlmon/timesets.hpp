#pragma once

// Approximated sets of consistent time intervals.
//
// A set is a sorted sequence of boundary enclosures (s, polarity). A True
// element encloses the start of a consistent interval, a False element its
// end. Between a True element and the next False element the formula holds
// on the open gap; a trailing True element extends to the horizon.

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "interval.hpp"

namespace stlmon {

/// Raised when bound enclosures of opposite polarity overlap, so the set of
/// consistent intervals cannot be decided at the current precision.
class AmbiguityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BoundaryEnclosure {
    Interval s;
    bool polarity = true; // true: lower bound, false: upper bound

    friend bool operator==(const BoundaryEnclosure&, const BoundaryEnclosure&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const BoundaryEnclosure& b)
{
    return os << '(' << b.s << ", " << (b.polarity ? 'T' : 'F') << ')';
}

/// Sorted, disjoint, alternating, starts with a lower bound, all upper
/// endpoints non-negative.
inline bool is_canonical(const std::vector<BoundaryEnclosure>& t)
{
    if (t.empty()) {
        return true;
    }
    if (!t.front().polarity) {
        return false;
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i].s.hi() < 0) {
            return false;
        }
        if (i + 1 < t.size()) {
            if (!(t[i].s.hi() < t[i + 1].s.lo())) {
                return false;
            }
            if (t[i].polarity == t[i + 1].polarity) {
                return false;
            }
        }
    }
    return true;
}

class ApproxSet {
public:
    enum class Kind { Universe, Empty, Seq };

    ApproxSet() : kind_(Kind::Empty) {}

    static ApproxSet universe() { return ApproxSet(Kind::Universe, {}); }
    static ApproxSet empty() { return ApproxSet(Kind::Empty, {}); }

    /// Wraps a canonical sequence. {([0],T)} becomes Universe and {} Empty.
    static ApproxSet sequence(std::vector<BoundaryEnclosure> elems)
    {
        if (!is_canonical(elems)) {
            throw std::invalid_argument("ApproxSet: sequence is not canonical");
        }
        if (elems.empty()) {
            return empty();
        }
        if (elems.size() == 1 && elems[0].polarity && elems[0].s == Interval{0.0}) {
            return universe();
        }
        return ApproxSet(Kind::Seq, std::move(elems));
    }

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] bool is_universe() const { return kind_ == Kind::Universe; }
    [[nodiscard]] bool is_empty() const { return kind_ == Kind::Empty; }

    /// Elements of a Seq; empty for Universe and Empty.
    [[nodiscard]] const std::vector<BoundaryEnclosure>& elements() const { return elems_; }

    /// Elements with Universe spelled out as {([0],T)}.
    [[nodiscard]] std::vector<BoundaryEnclosure> as_list() const
    {
        if (is_universe()) {
            return {BoundaryEnclosure{Interval{0.0}, true}};
        }
        return elems_;
    }

    [[nodiscard]] std::size_t size() const { return is_universe() ? 1 : elems_.size(); }

    friend bool operator==(const ApproxSet&, const ApproxSet&) = default;

private:
    ApproxSet(Kind k, std::vector<BoundaryEnclosure> e) : kind_(k), elems_(std::move(e)) {}

    Kind kind_;
    std::vector<BoundaryEnclosure> elems_;
};

inline std::ostream& operator<<(std::ostream& os, const ApproxSet& t)
{
    if (t.is_universe()) {
        return os << "Universe";
    }
    if (t.is_empty()) {
        return os << "Empty";
    }
    os << '{';
    bool first = true;
    for (const auto& b : t.elements()) {
        os << (first ? "" : ", ") << b;
        first = false;
    }
    return os << '}';
}

namespace detail {

inline void check_canonical([[maybe_unused]] const ApproxSet& t, [[maybe_unused]] const char* where)
{
#ifdef STLMON_CHECK_CANONICAL
    if (!t.is_universe() && !t.is_empty() && !is_canonical(t.elements())) {
        throw std::logic_error(std::string(where) + " produced a non-canonical set");
    }
#endif
}

} // namespace detail

/// Brings a multiset of enclosures to canonical form.
///
/// Same-polarity enclosures that overlap form a cluster of multiplicity k.
/// With depth the number of lower minus upper enclosures before a cluster, a
/// lower cluster is kept when depth <= 0 and an upper cluster when
/// depth - k <= 0; a kept cluster is replaced by its hull. For disjoint
/// enclosures this is the usual embedded-bound counting rule.
inline ApproxSet normalize(std::vector<BoundaryEnclosure> t)
{
    for (const auto& b : t) {
        if (!b.polarity && b.s.contains_zero() && !(b.s == Interval{0.0})) {
            throw AmbiguityError("an upper bound enclosure contains time 0");
        }
    }
    std::sort(t.begin(), t.end(), [](const BoundaryEnclosure& a, const BoundaryEnclosure& b) {
        if (a.s.lo() != b.s.lo()) {
            return a.s.lo() < b.s.lo();
        }
        return a.s.hi() < b.s.hi();
    });

    // Overlap of opposite polarities, touching included. The running maximum
    // of upper endpoints per polarity detects any overlap with an earlier
    // element.
    {
        double reach[2] = {-rounding::inf, -rounding::inf};
        for (const auto& b : t) {
            if (b.s.lo() <= reach[b.polarity ? 0 : 1]) {
                throw AmbiguityError("bound enclosures of opposite polarity overlap");
            }
            double& own = reach[b.polarity ? 1 : 0];
            own = std::max(own, b.s.hi());
        }
    }

    // N1 and N3 over clusters.
    std::vector<BoundaryEnclosure> kept;
    int depth = 0;
    for (std::size_t i = 0; i < t.size();) {
        const bool pol = t[i].polarity;
        Interval h = t[i].s;
        int k = 1;
        std::size_t j = i + 1;
        while (j < t.size() && t[j].polarity == pol && t[j].s.lo() <= h.hi()) {
            h = hull(h, t[j].s);
            ++k;
            ++j;
        }
        if (pol ? depth <= 0 : depth - k <= 0) {
            kept.push_back(BoundaryEnclosure{h, pol});
        }
        depth += pol ? k : -k;
        i = j;
    }

    // N2
    if (!kept.empty() && kept.back().polarity && kept.back().s.hi() <= 0) {
        return ApproxSet::universe();
    }
    std::vector<BoundaryEnclosure> out;
    out.reserve(kept.size() + 1);
    for (const auto& b : kept) {
        if (b.s.hi() > 0) {
            // Times are non-negative; a lower enclosure reaching below 0 is cut there.
            out.push_back(b.s.lo() < 0 ? BoundaryEnclosure{Interval{0.0, b.s.hi()}, b.polarity} : b);
        }
    }

    // N4
    if (!out.empty() && !out.front().polarity) {
        out.insert(out.begin(), BoundaryEnclosure{Interval{0.0}, true});
    }

    if (!is_canonical(out)) {
        throw AmbiguityError("bound enclosures cannot be ordered into a canonical set");
    }
    return ApproxSet::sequence(std::move(out));
}

inline ApproxSet invert(const ApproxSet& t)
{
    if (t.is_universe()) {
        return ApproxSet::empty();
    }
    if (t.is_empty()) {
        return ApproxSet::universe();
    }
    std::vector<BoundaryEnclosure> flipped = t.elements();
    for (auto& b : flipped) {
        b.polarity = !b.polarity;
    }
    ApproxSet r = normalize(std::move(flipped));
    detail::check_canonical(r, "invert");
    return r;
}

inline ApproxSet join(const ApproxSet& a, const ApproxSet& b)
{
    if (a.is_universe() || b.is_universe()) {
        return ApproxSet::universe();
    }
    std::vector<BoundaryEnclosure> all = a.elements();
    all.insert(all.end(), b.elements().begin(), b.elements().end());
    ApproxSet r = normalize(std::move(all));
    detail::check_canonical(r, "join");
    return r;
}

inline ApproxSet intersect(const ApproxSet& a, const ApproxSet& b)
{
    ApproxSet r = invert(join(invert(a), invert(b)));
    detail::check_canonical(r, "intersect");
    return r;
}

/// Consecutive (lower, upper) pairs of a canonical set. A trailing lower
/// bound forms a pair of its own; Universe is its own single pair.
inline std::vector<ApproxSet> pairs(const ApproxSet& t)
{
    if (t.is_universe()) {
        return {t};
    }
    std::vector<ApproxSet> out;
    const auto& e = t.elements();
    for (std::size_t i = 0; i < e.size(); i += 2) {
        std::vector<BoundaryEnclosure> p{e[i]};
        if (i + 1 < e.size()) {
            p.push_back(e[i + 1]);
        }
        out.push_back(ApproxSet::sequence(std::move(p)));
    }
    return out;
}

/// Back-shift by the Until bound [a, b]: lower bounds move by -b, upper
/// bounds by -a. `lower` and `upper` enclose a and b.
inline ApproxSet shift_elem(const Interval& lower, const Interval& upper, const ApproxSet& t)
{
    if (t.is_empty()) {
        return t;
    }
    std::vector<BoundaryEnclosure> moved = t.as_list();
    for (auto& b : moved) {
        b.s = b.s - (b.polarity ? upper : lower);
    }
    return normalize(std::move(moved));
}

namespace detail {

// Outer time span of a pair; a pair without an upper bound runs to infinity.
inline Interval pair_span(const ApproxSet& p)
{
    const auto l = p.as_list();
    return {l.front().s.lo(), l.size() > 1 ? l.back().s.hi() : rounding::inf};
}

} // namespace detail

/// Set for phi1 U[a,b] phi2 from the sets of phi1 and phi2.
inline ApproxSet shift_all(const Interval& lower, const Interval& upper, const ApproxSet& t1, const ApproxSet& t2)
{
    if (!(0.0 <= lower.lo() && lower.lo() <= upper.hi())) {
        throw std::invalid_argument("shift_all: invalid time bound");
    }
    if (t1.is_empty() || t2.is_empty()) {
        return ApproxSet::empty();
    }
    const std::vector<ApproxSet> p1 = pairs(t1);
    const std::vector<ApproxSet> p2 = pairs(t2);
    std::vector<BoundaryEnclosure> all;
    // Pairs with disjoint outer spans intersect to the empty set; both lists
    // are sorted, so only overlapping neighbours are combined.
    std::size_t first = 0;
    for (const auto& a : p1) {
        const Interval sa = detail::pair_span(a);
        while (first < p2.size() && detail::pair_span(p2[first]).hi() < sa.lo()) {
            ++first;
        }
        for (std::size_t j = first; j < p2.size(); ++j) {
            const Interval sb = detail::pair_span(p2[j]);
            if (sb.lo() > sa.hi()) {
                break;
            }
            const ApproxSet both = intersect(a, p2[j]);
            const ApproxSet part = intersect(shift_elem(lower, upper, both), a);
            const auto l = part.as_list();
            all.insert(all.end(), l.begin(), l.end());
        }
    }
    ApproxSet r = normalize(std::move(all));
    detail::check_canonical(r, "shift_all");
    return r;
}

/// Point Until bound t = [a, b].
inline ApproxSet shift_all(const Interval& t, const ApproxSet& t1, const ApproxSet& t2)
{
    return shift_all(Interval{t.lo()}, Interval{t.hi()}, t1, t2);
}

/// Earliest element; requires a Seq or Universe.
inline BoundaryEnclosure first_element(const ApproxSet& t)
{
    if (t.is_empty()) {
        throw std::invalid_argument("first_element: empty set");
    }
    return t.as_list().front();
}

} // namespace stlmon
