#pragma once

// Continuous-time systems: parameters u, state x, domains, initial box and the
// flow x' = F(u, x). Includes the text model format and the bundled examples.

#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "expression.hpp"
#include "interval.hpp"

namespace stlmon {

/// Bound expressions as written in a model file. `point` marks `name = e`.
struct DomainDecl {
    Expr lo;
    Expr hi;
    bool point = false;
};

struct ContinuousSystem {
    SymbolTable names;
    IntervalBox param_domain;
    IntervalBox state_domain;
    IntervalBox init;
    std::vector<Expr> flow;

    // Source form of the domains, kept for printing.
    std::vector<DomainDecl> param_decl;
    std::vector<DomainDecl> state_decl;
    std::vector<DomainDecl> init_decl;

    [[nodiscard]] int n_params() const { return static_cast<int>(names.params.size()); }
    [[nodiscard]] int n_vars() const { return static_cast<int>(names.vars.size()); }

    /// Replaces the domain of parameter i.
    void set_param(int i, const Interval& v)
    {
        param_domain.at(i) = v;
        param_decl.at(i) = DomainDecl{Expr::constant(Interval{v.lo()}), Expr::constant(Interval{v.hi()}), v.is_point()};
    }
};

/// F(u, x) evaluated over boxes.
inline IntervalBox eval_flow(const ContinuousSystem& sys, const IntervalBox& u, const IntervalBox& x)
{
    IntervalBox out;
    out.reserve(sys.flow.size());
    for (const auto& f : sys.flow) {
        out.push_back(eval_box(f, u, x));
    }
    return out;
}

namespace detail {

inline bool is_reserved(std::string_view s)
{
    static const char* const words[] = {"sin", "cos", "exp", "in", "true", "false", "F", "G", "U"};
    for (const char* w : words) {
        if (s == w) {
            return true;
        }
    }
    return false;
}

inline Interval eval_constant(const Expr& e, const Token& at)
{
    try {
        return eval_box(e, {}, {});
    } catch (const std::out_of_range&) {
        throw ParseError("bound must be a constant expression", at.line, at.column);
    } catch (const EvaluationError& err) {
        throw ParseError(err.what(), at.line, at.column);
    }
}

// Walks e and checks every divisor over the given boxes.
inline void check_divisors(const Expr& e, const IntervalBox& u, const IntervalBox& x, const Token& at)
{
    const auto& n = e.node();
    for (const auto& a : n.args) {
        check_divisors(a, u, x, at);
    }
    if (n.op == Op::Div) {
        const Interval d = eval_box(n.args[1], u, x);
        if (d.contains_zero()) {
            throw ParseError("denominator may vanish over the state domain", at.line, at.column);
        }
    }
    if (n.op == Op::Pow && n.exponent < 0) {
        const Interval d = eval_box(n.args[0], u, x);
        if (d.contains_zero()) {
            throw ParseError("negative power of a term that may vanish over the state domain", at.line, at.column);
        }
    }
}

} // namespace detail

/// Parses the model format:
///
///   [params] u1 in [-0.1, 0.1]
///   [vars]   x1 in [-10, 10]
///   [init]   x1 = 1
///   [flow]   x1' = u1*x1
///
/// Throws ParseError with the line and column of the offending token.
inline ContinuousSystem parse_model(std::string_view text)
{
    enum class Section { None, Params, Vars, Init, Flow };
    ContinuousSystem sys;
    TokenCursor cur(tokenize(text));
    Section section = Section::None;
    std::vector<std::optional<DomainDecl>> init_seen;
    std::vector<std::optional<Expr>> flow_seen;
    std::vector<Token> flow_at;

    auto end_of_decl = [&](int line) {
        if (!cur.at_end() && cur.peek().line == line) {
            cur.fail("expected end of line" + TokenCursor::describe(cur.peek()));
        }
    };
    auto parse_expr = [&]() {
        ExpressionParser p(cur, sys.names);
        return p.parse_sum();
    };
    auto parse_domain = [&](const Token& name) -> std::pair<DomainDecl, Interval> {
        if (cur.peek().kind == Tok::Ident && cur.peek().text == "in") {
            cur.next();
            cur.expect(Tok::LBracket, "'['");
            const Token lo_at = cur.peek();
            Expr lo = parse_expr();
            cur.expect(Tok::Comma, "','");
            const Token hi_at = cur.peek();
            Expr hi = parse_expr();
            cur.expect(Tok::RBracket, "']'");
            const double l = detail::eval_constant(lo, lo_at).lo();
            const double h = detail::eval_constant(hi, hi_at).hi();
            if (!(l <= h)) {
                throw ParseError("empty domain for '" + name.text + "'", lo_at.line, lo_at.column);
            }
            return {DomainDecl{lo, hi, false}, Interval{l, h}};
        }
        cur.expect(Tok::Equal, "'in [lo, hi]' or '='");
        const Token at = cur.peek();
        Expr e = parse_expr();
        return {DomainDecl{e, e, true}, detail::eval_constant(e, at)};
    };
    auto declare = [&](std::vector<std::string>& list, const Token& name) {
        if (detail::is_reserved(name.text)) {
            throw ParseError("'" + name.text + "' is a reserved word", name.line, name.column);
        }
        if (sys.names.lookup(name.text)) {
            throw ParseError("duplicate declaration of '" + name.text + "'", name.line, name.column);
        }
        list.push_back(name.text);
    };
    auto var_index = [&](const Token& name) {
        auto sym = sys.names.lookup(name.text);
        if (!sym || sym->first != Op::Var) {
            throw ParseError("undeclared variable '" + name.text + "'", name.line, name.column);
        }
        return sym->second;
    };

    while (!cur.at_end()) {
        if (cur.peek().kind == Tok::LBracket) {
            cur.next();
            const Token& id = cur.expect(Tok::Ident, "a section name");
            if (id.text == "params") {
                section = Section::Params;
            } else if (id.text == "vars") {
                section = Section::Vars;
            } else if (id.text == "init") {
                section = Section::Init;
            } else if (id.text == "flow") {
                section = Section::Flow;
            } else {
                throw ParseError("unknown section '" + id.text + "'", id.line, id.column);
            }
            cur.expect(Tok::RBracket, "']'");
            continue;
        }
        const Token name = cur.expect(Tok::Ident, "a declaration");
        switch (section) {
        case Section::None:
            throw ParseError("declaration outside of a section", name.line, name.column);
        case Section::Params: {
            declare(sys.names.params, name);
            auto [decl, box] = parse_domain(name);
            sys.param_decl.push_back(decl);
            sys.param_domain.push_back(box);
            break;
        }
        case Section::Vars: {
            declare(sys.names.vars, name);
            auto [decl, box] = parse_domain(name);
            if (decl.point) {
                throw ParseError("state domain of '" + name.text + "' must be written 'in [lo, hi]'", name.line,
                                 name.column);
            }
            sys.state_decl.push_back(decl);
            sys.state_domain.push_back(box);
            init_seen.emplace_back();
            flow_seen.emplace_back();
            flow_at.push_back(name);
            break;
        }
        case Section::Init: {
            const int i = var_index(name);
            if (init_seen[i]) {
                throw ParseError("duplicate initial value for '" + name.text + "'", name.line, name.column);
            }
            auto [decl, box] = parse_domain(name);
            init_seen[i] = decl;
            if (sys.init.size() < init_seen.size()) {
                sys.init.resize(init_seen.size());
            }
            sys.init[i] = box;
            if (!box.subset_of(sys.state_domain[i])) {
                throw ParseError("initial value of '" + name.text + "' lies outside its domain", name.line,
                                 name.column);
            }
            break;
        }
        case Section::Flow: {
            const int i = var_index(name);
            cur.expect(Tok::Prime, "\"'\" after the variable name");
            cur.expect(Tok::Equal, "'='");
            if (flow_seen[i]) {
                throw ParseError("duplicate flow for '" + name.text + "'", name.line, name.column);
            }
            flow_seen[i] = parse_expr();
            flow_at[i] = name;
            break;
        }
        }
        end_of_decl(name.line);
    }

    const int n = sys.n_vars();
    if (n == 0) {
        throw ParseError("model declares no variables", cur.peek().line, cur.peek().column);
    }
    sys.init.resize(n);
    for (int i = 0; i < n; ++i) {
        if (!init_seen[i]) {
            throw ParseError("missing initial value for '" + sys.names.vars[i] + "'", flow_at[i].line,
                             flow_at[i].column);
        }
        if (!flow_seen[i]) {
            throw ParseError("missing flow for '" + sys.names.vars[i] + "'", flow_at[i].line, flow_at[i].column);
        }
        sys.init_decl.push_back(*init_seen[i]);
        sys.flow.push_back(*flow_seen[i]);
    }
    for (int i = 0; i < n; ++i) {
        detail::check_divisors(sys.flow[i], sys.param_domain, sys.state_domain, flow_at[i]);
    }
    return sys;
}

/// Prints a system in the model format; parse_model(print_model(s)) rebuilds s.
inline std::string print_model(const ContinuousSystem& sys)
{
    std::ostringstream os;
    auto domain = [&](const std::string& name, const DomainDecl& d) {
        os << "  " << name;
        if (d.point) {
            os << " = " << to_string(d.lo, sys.names) << '\n';
        } else {
            os << " in [" << to_string(d.lo, sys.names) << ", " << to_string(d.hi, sys.names) << "]\n";
        }
    };
    if (!sys.names.params.empty()) {
        os << "[params]\n";
        for (std::size_t i = 0; i < sys.names.params.size(); ++i) {
            domain(sys.names.params[i], sys.param_decl[i]);
        }
    }
    os << "[vars]\n";
    for (std::size_t i = 0; i < sys.names.vars.size(); ++i) {
        domain(sys.names.vars[i], sys.state_decl[i]);
    }
    os << "[init]\n";
    for (std::size_t i = 0; i < sys.names.vars.size(); ++i) {
        domain(sys.names.vars[i], sys.init_decl[i]);
    }
    os << "[flow]\n";
    for (std::size_t i = 0; i < sys.names.vars.size(); ++i) {
        os << "  " << sys.names.vars[i] << "' = " << to_string(sys.flow[i], sys.names) << '\n';
    }
    return os.str();
}

/// Structural identity of two systems.
inline bool same_system(const ContinuousSystem& a, const ContinuousSystem& b)
{
    if (a.names.params != b.names.params || a.names.vars != b.names.vars || a.param_domain != b.param_domain ||
        a.state_domain != b.state_domain || a.init != b.init || a.flow.size() != b.flow.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.flow.size(); ++i) {
        if (!structurally_equal(a.flow[i], b.flow[i])) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Bundled examples

namespace models {

inline constexpr std::string_view rotation = R"(# Rotation of a point around the origin; spirals out when u1 > 0.
[params] u1 in [-0.1, 0.1]
[vars]   x1 in [-10, 10]
         x2 in [-10, 10]
[init]   x1 = 1
         x2 = 0
[flow]   x1' = u1*x1 - x2
         x2' = x1 + u1*x2
)";

inline constexpr std::string_view lorenz = R"(# Lorenz equations.
[params] u1 in [9, 11]
         u2 in [27, 29]
         u3 in [1.5, 3.5]
[vars]   x1 in [-50, 50]
         x2 in [-50, 50]
         x3 in [-50, 50]
[init]   x1 = 15
         x2 = 15
         x3 = 36
[flow]   x1' = u1*(x2 - x1)
         x2' = x1*(u2 - x3) - x2
         x3' = x1*x2 - u3*x3
)";

inline constexpr std::string_view timer = R"(# The signal is the elapsed time.
[vars]   x in [0, 100]
[init]   x = 0
[flow]   x' = 1
)";

} // namespace models

/// Source text of a bundled model, if `name` is one of rotation, lorenz, timer.
inline std::optional<std::string_view> builtin_model(std::string_view name)
{
    if (name == "rotation") {
        return models::rotation;
    }
    if (name == "lorenz") {
        return models::lorenz;
    }
    if (name == "timer") {
        return models::timer;
    }
    return std::nullopt;
}

} // namespace stlmon
