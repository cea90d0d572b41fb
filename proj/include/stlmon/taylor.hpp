#pragma once

// Taylor coefficients of solutions of autonomous ODEs y' = G(y) by automatic
// differentiation on a compiled tape, plus their first-order sensitivities
// with respect to the initial value.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "expression.hpp"
#include "interval.hpp"
#include "model.hpp"

namespace stlmon {

namespace taylor {

enum class NodeOp { Const, State, Add, Sub, Neg, Mul, Sqr, Div, Exp, Sin, Cos };

struct Node {
    NodeOp op = NodeOp::Const;
    int a = -1; // argument slots
    int b = -1;
    Interval value; // Const
    int state = -1; // State: index into y
    int partner = -1; // Sin <-> Cos companion slot
};

inline double to_double(const Interval& v) { return v.mid(); }

// Scalar helpers so that the recurrences can run on Interval or double.
inline Interval s_sqr(const Interval& a) { return sqr(a); }
inline double s_sqr(double a) { return a * a; }
inline Interval s_exp(const Interval& a) { return exp(a); }
inline double s_exp(double a) { return std::exp(a); }
inline Interval s_sin(const Interval& a) { return sin(a); }
inline double s_sin(double a) { return std::sin(a); }
inline Interval s_cos(const Interval& a) { return cos(a); }
inline double s_cos(double a) { return std::cos(a); }
inline Interval s_const(const Interval& v, Interval*) { return v; }
inline double s_const(const Interval& v, double*) { return v.mid(); }
inline void s_check_div(const Interval& b)
{
    if (b.contains_zero()) {
        throw EvaluationError("division by an interval containing zero");
    }
}
inline void s_check_div(double) {}

/// Straight-line program computing G(y) for y = (u, x) with u' = 0.
class Tape {
public:
    Tape() = default;

    /// Compiles the flow of `sys`; the state is (u_1..u_m, x_1..x_n).
    explicit Tape(const ContinuousSystem& sys) : n_params_(sys.n_params()), dim_(sys.n_params() + sys.n_vars())
    {
        for (int i = 0; i < dim_; ++i) {
            Node s;
            s.op = NodeOp::State;
            s.state = i;
            state_slot_.push_back(push(s));
        }
        zero_ = constant(Interval{0.0});
        rhs_.assign(dim_, zero_);
        for (int i = 0; i < sys.n_vars(); ++i) {
            rhs_[n_params_ + i] = compile(sys.flow[i]);
        }
    }

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] int n_params() const { return n_params_; }
    [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
    [[nodiscard]] int rhs(int i) const { return rhs_[i]; }

private:
    int push(const Node& n)
    {
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }
    int constant(const Interval& v)
    {
        Node n;
        n.op = NodeOp::Const;
        n.value = v;
        return push(n);
    }
    int binary(NodeOp op, int a, int b)
    {
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        return push(n);
    }
    int power(int a, int k)
    {
        if (k == 0) {
            return constant(Interval{1.0});
        }
        if (k < 0) {
            return binary(NodeOp::Div, constant(Interval{1.0}), power(a, -k));
        }
        if (k == 1) {
            return a;
        }
        const int half = power(a, k / 2);
        const int sq = binary(NodeOp::Sqr, half, -1);
        return k % 2 == 0 ? sq : binary(NodeOp::Mul, sq, a);
    }
    int compile(const Expr& e)
    {
        const auto& n = e.node();
        switch (n.op) {
        case Op::Const:
            return constant(n.value);
        case Op::Param:
            return state_slot_.at(n.index);
        case Op::Var:
            return state_slot_.at(n_params_ + n.index);
        case Op::Add:
            return binary(NodeOp::Add, compile(n.args[0]), compile(n.args[1]));
        case Op::Sub:
            return binary(NodeOp::Sub, compile(n.args[0]), compile(n.args[1]));
        case Op::Mul:
            if (structurally_equal(n.args[0], n.args[1])) {
                return binary(NodeOp::Sqr, compile(n.args[0]), -1);
            }
            return binary(NodeOp::Mul, compile(n.args[0]), compile(n.args[1]));
        case Op::Div:
            return binary(NodeOp::Div, compile(n.args[0]), compile(n.args[1]));
        case Op::Neg:
            return binary(NodeOp::Neg, compile(n.args[0]), -1);
        case Op::Pow:
            return power(compile(n.args[0]), n.exponent);
        case Op::Exp:
            return binary(NodeOp::Exp, compile(n.args[0]), -1);
        case Op::Sin:
        case Op::Cos: {
            const int a = compile(n.args[0]);
            const int s = binary(NodeOp::Sin, a, -1);
            const int c = binary(NodeOp::Cos, a, -1);
            nodes_[s].partner = c;
            nodes_[c].partner = s;
            return n.op == Op::Sin ? s : c;
        }
        }
        throw std::logic_error("taylor: unknown op");
    }

    int n_params_ = 0;
    int dim_ = 0;
    int zero_ = -1;
    std::vector<Node> nodes_;
    std::vector<int> state_slot_;
    std::vector<int> rhs_;
};

/// Taylor coefficients y_0..y_order of the solution through y0, and the
/// coefficients of every tape node up to order-1.
template <class T>
class Series {
public:
    Series(const Tape& tape, int order) : tape_(&tape), order_(order)
    {
        coef_.assign(tape.nodes().size() * static_cast<std::size_t>(order + 1), T{});
        y_.assign(static_cast<std::size_t>(tape.dim()) * (order + 1), T{});
    }

    void compute(const std::vector<T>& y0)
    {
        const int d = tape_->dim();
        for (int i = 0; i < d; ++i) {
            y(i, 0) = y0[i];
        }
        for (int k = 0; k < order_; ++k) {
            for (std::size_t s = 0; s < tape_->nodes().size(); ++s) {
                eval_node(static_cast<int>(s), k);
            }
            for (int i = 0; i < d; ++i) {
                y(i, k + 1) = c(tape_->rhs(i), k) / T(static_cast<double>(k + 1));
            }
        }
    }

    /// Coefficient k of state component i.
    T& y(int i, int k) { return y_[static_cast<std::size_t>(i) * (order_ + 1) + k]; }
    const T& y(int i, int k) const { return y_[static_cast<std::size_t>(i) * (order_ + 1) + k]; }
    /// Coefficient k of tape slot s.
    T& c(int s, int k) { return coef_[static_cast<std::size_t>(s) * (order_ + 1) + k]; }
    const T& c(int s, int k) const { return coef_[static_cast<std::size_t>(s) * (order_ + 1) + k]; }
    [[nodiscard]] int order() const { return order_; }

private:
    void eval_node(int s, int k)
    {
        const Node& n = tape_->nodes()[s];
        T& out = c(s, k);
        switch (n.op) {
        case NodeOp::Const:
            out = k == 0 ? s_const(n.value, static_cast<T*>(nullptr)) : T(0.0);
            return;
        case NodeOp::State:
            out = y(n.state, k);
            return;
        case NodeOp::Add:
            out = c(n.a, k) + c(n.b, k);
            return;
        case NodeOp::Sub:
            out = c(n.a, k) - c(n.b, k);
            return;
        case NodeOp::Neg:
            out = -c(n.a, k);
            return;
        case NodeOp::Mul: {
            T acc = c(n.a, 0) * c(n.b, k);
            for (int i = 1; i <= k; ++i) {
                acc = acc + c(n.a, i) * c(n.b, k - i);
            }
            out = acc;
            return;
        }
        case NodeOp::Sqr: {
            if (k == 0) {
                out = s_sqr(c(n.a, 0));
                return;
            }
            T acc(0.0);
            for (int i = 0; i < (k + 1) / 2; ++i) {
                acc = acc + c(n.a, i) * c(n.a, k - i);
            }
            acc = acc + acc;
            if (k % 2 == 0) {
                acc = acc + s_sqr(c(n.a, k / 2));
            }
            out = acc;
            return;
        }
        case NodeOp::Div: {
            const T& b0 = c(n.b, 0);
            if (k == 0) {
                s_check_div(b0);
            }
            T acc = c(n.a, k);
            for (int i = 1; i <= k; ++i) {
                acc = acc - c(n.b, i) * c(s, k - i);
            }
            out = acc / b0;
            return;
        }
        case NodeOp::Exp: {
            if (k == 0) {
                out = s_exp(c(n.a, 0));
                return;
            }
            T acc(0.0);
            for (int i = 1; i <= k; ++i) {
                acc = acc + T(static_cast<double>(i)) * c(n.a, i) * c(s, k - i);
            }
            out = acc / T(static_cast<double>(k));
            return;
        }
        case NodeOp::Sin:
        case NodeOp::Cos: {
            // Both members of the pair are filled when the first one is met.
            const int sn = n.op == NodeOp::Sin ? s : n.partner;
            const int cs = n.op == NodeOp::Cos ? s : n.partner;
            if (s > n.partner) {
                return;
            }
            if (k == 0) {
                c(sn, 0) = s_sin(c(n.a, 0));
                c(cs, 0) = s_cos(c(n.a, 0));
                return;
            }
            T as(0.0);
            T ac(0.0);
            for (int i = 1; i <= k; ++i) {
                const T ia = T(static_cast<double>(i)) * c(n.a, i);
                as = as + ia * c(cs, k - i);
                ac = ac + ia * c(sn, k - i);
            }
            c(sn, k) = as / T(static_cast<double>(k));
            c(cs, k) = -(ac / T(static_cast<double>(k)));
            return;
        }
        }
    }

    const Tape* tape_;
    int order_;
    std::vector<T> coef_;
    std::vector<T> y_;
};

/// Sensitivities dy_k/dy0 (interval matrices, one per order k < order) of the
/// Taylor coefficients, evaluated over the box used for `values`.
class Sensitivity {
public:
    Sensitivity(const Tape& tape, int order) : tape_(&tape), order_(order)
    {
        const auto d = static_cast<std::size_t>(tape.dim());
        jac_.assign(static_cast<std::size_t>(order) * d * d, Interval{0.0});
        tc_.assign(tape.nodes().size() * static_cast<std::size_t>(order), Interval{0.0});
        ty_.assign(d * (order + 1), Interval{0.0});
    }

    /// `values` must hold coefficients up to order-1 for every node.
    void compute(const Series<Interval>& values)
    {
        const int d = tape_->dim();
        for (int dir = 0; dir < d; ++dir) {
            std::fill(ty_.begin(), ty_.end(), Interval{0.0});
            ty(dir, 0) = Interval{1.0};
            for (int k = 0; k + 1 < order_; ++k) {
                for (std::size_t s = 0; s < tape_->nodes().size(); ++s) {
                    tangent_node(values, static_cast<int>(s), k);
                }
                for (int i = 0; i < d; ++i) {
                    ty(i, k + 1) = tc(tape_->rhs(i), k) / Interval(static_cast<double>(k + 1));
                }
            }
            for (int k = 0; k < order_; ++k) {
                for (int i = 0; i < d; ++i) {
                    jac(k, i, dir) = ty(i, k);
                }
            }
        }
    }

    /// d y_k[i] / d y0[j].
    Interval& jac(int k, int i, int j)
    {
        const auto d = static_cast<std::size_t>(tape_->dim());
        return jac_[(static_cast<std::size_t>(k) * d + i) * d + j];
    }
    const Interval& jac(int k, int i, int j) const
    {
        const auto d = static_cast<std::size_t>(tape_->dim());
        return jac_[(static_cast<std::size_t>(k) * d + i) * d + j];
    }

private:
    Interval& tc(int s, int k) { return tc_[static_cast<std::size_t>(s) * order_ + k]; }
    Interval& ty(int i, int k) { return ty_[static_cast<std::size_t>(i) * (order_ + 1) + k]; }

    void tangent_node(const Series<Interval>& v, int s, int k)
    {
        const Node& n = tape_->nodes()[s];
        Interval& out = tc(s, k);
        switch (n.op) {
        case NodeOp::Const:
            out = Interval{0.0};
            return;
        case NodeOp::State:
            out = ty(n.state, k);
            return;
        case NodeOp::Add:
            out = tc(n.a, k) + tc(n.b, k);
            return;
        case NodeOp::Sub:
            out = tc(n.a, k) - tc(n.b, k);
            return;
        case NodeOp::Neg:
            out = -tc(n.a, k);
            return;
        case NodeOp::Mul: {
            Interval acc{0.0};
            for (int i = 0; i <= k; ++i) {
                acc += tc(n.a, i) * v.c(n.b, k - i) + v.c(n.a, i) * tc(n.b, k - i);
            }
            out = acc;
            return;
        }
        case NodeOp::Sqr: {
            Interval acc{0.0};
            for (int i = 0; i <= k; ++i) {
                acc += tc(n.a, i) * v.c(n.a, k - i);
            }
            out = acc + acc;
            return;
        }
        case NodeOp::Div: {
            // c*b = a  =>  tc_k*b_0 = ta_k - sum_{i=0..k} tb_i c_{k-i} - sum_{i=1..k} b_i tc_{k-i}
            Interval acc = tc(n.a, k);
            for (int i = 0; i <= k; ++i) {
                acc -= tc(n.b, i) * v.c(s, k - i);
            }
            for (int i = 1; i <= k; ++i) {
                acc -= v.c(n.b, i) * tc(s, k - i);
            }
            out = acc / v.c(n.b, 0);
            return;
        }
        case NodeOp::Exp: {
            if (k == 0) {
                out = v.c(s, 0) * tc(n.a, 0);
                return;
            }
            Interval acc{0.0};
            for (int i = 1; i <= k; ++i) {
                const Interval fi(static_cast<double>(i));
                acc += fi * (tc(n.a, i) * v.c(s, k - i) + v.c(n.a, i) * tc(s, k - i));
            }
            out = acc / Interval(static_cast<double>(k));
            return;
        }
        case NodeOp::Sin:
        case NodeOp::Cos: {
            const int sn = n.op == NodeOp::Sin ? s : n.partner;
            const int cs = n.op == NodeOp::Cos ? s : n.partner;
            if (s > n.partner) {
                return;
            }
            if (k == 0) {
                tc(sn, 0) = v.c(cs, 0) * tc(n.a, 0);
                tc(cs, 0) = -(v.c(sn, 0) * tc(n.a, 0));
                return;
            }
            Interval as{0.0};
            Interval ac{0.0};
            for (int i = 1; i <= k; ++i) {
                const Interval fi(static_cast<double>(i));
                as += fi * (tc(n.a, i) * v.c(cs, k - i) + v.c(n.a, i) * tc(cs, k - i));
                ac += fi * (tc(n.a, i) * v.c(sn, k - i) + v.c(n.a, i) * tc(sn, k - i));
            }
            tc(sn, k) = as / Interval(static_cast<double>(k));
            tc(cs, k) = -(ac / Interval(static_cast<double>(k)));
            return;
        }
        }
    }

    const Tape* tape_;
    int order_;
    std::vector<Interval> jac_;
    std::vector<Interval> tc_;
    std::vector<Interval> ty_;
};

} // namespace taylor

} // namespace stlmon
