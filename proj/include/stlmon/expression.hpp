#pragma once

// Expression trees over parameters u_i and variables x_i.
//
// The operation set is closed: constants, references, + - * /, integer powers,
// sin, cos and exp. Adding an operation means extending Op, the evaluator, the
// differentiator, the printer and the Taylor tape compiler.

#include "stlmon/interval.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stlmon {

/// Syntax error with a 1-based source position.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line, int column)
        : std::runtime_error(format(msg, line, column)), line_(line), column_(column), bare_(msg)
    {
    }
    [[nodiscard]] int line() const { return line_; }
    [[nodiscard]] int column() const { return column_; }
    [[nodiscard]] const std::string& bare_message() const { return bare_; }

private:
    static std::string format(const std::string& msg, int line, int column)
    {
        return std::to_string(line) + ":" + std::to_string(column) + ": " + msg;
    }
    int line_;
    int column_;
    std::string bare_;
};

/// Interval evaluation hit an undefined operation (division by an interval
/// containing zero).
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Decimal literals

namespace detail {

// Significant digits and power of ten (value = digits * 10^exp10) with
// leading and trailing zeros removed. Empty digits mean zero.
inline std::pair<std::string, long> normalized_decimal(std::string_view s)
{
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        ++i;
    }
    std::string digits;
    long exp10 = 0;
    bool frac = false;
    for (; i < s.size() && s[i] != 'e' && s[i] != 'E'; ++i) {
        if (s[i] == '.') {
            frac = true;
            continue;
        }
        digits.push_back(s[i]);
        if (frac) {
            --exp10;
        }
    }
    if (i < s.size()) {
        exp10 += std::strtol(std::string(s.substr(i + 1)).c_str(), nullptr, 10);
    }
    const auto first = digits.find_first_not_of('0');
    if (first == std::string::npos) {
        return {"", 0};
    }
    digits.erase(0, first);
    while (digits.size() > 1 && digits.back() == '0') {
        digits.pop_back();
        ++exp10;
    }
    return {digits, exp10};
}

} // namespace detail

/// Exact decimal expansion of a finite double in scientific notation.
inline std::string exact_decimal(double v)
{
    char buf[1100];
    // 767 significant digits suffice for every double.
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 767);
    std::string s(buf, res.ptr);
    const auto e = s.find('e');
    std::string mant = s.substr(0, e);
    while (mant.back() == '0') {
        mant.pop_back();
    }
    if (mant.back() == '.') {
        mant.pop_back();
    }
    return mant + s.substr(e);
}

/// Tightest machine interval enclosing the decimal literal `text`
/// ([+-]digits[.digits][(e|E)[+-]digits]). Exactly representable literals
/// yield point intervals.
inline Interval decimal_enclosure(std::string_view text)
{
    const std::string s(text);
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty() || !std::isfinite(d)) {
        throw std::invalid_argument("not a finite decimal literal: " + s);
    }
    if (detail::normalized_decimal(s) == detail::normalized_decimal(exact_decimal(d))) {
        return Interval{d};
    }
    return {rounding::next_down(d), rounding::next_up(d)};
}

inline std::string format_double(double v)
{
    char buf[40];
    // Shortest representation that round-trips.
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

// ---------------------------------------------------------------------------
// AST

enum class Op { Const, Param, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp };

class Expr;

struct ExprNode {
    Op op = Op::Const;
    Interval value;        // Const
    std::string text;      // Const: source literal used when printing
    int index = 0;         // Param / Var
    int exponent = 0;      // Pow
    std::vector<Expr> args;
};

/// Immutable, cheaply copyable expression handle.
class Expr {
public:
    Expr() : Expr(constant(0.0)) {}

    static Expr constant(const Interval& v, std::string text = {})
    {
        auto n = std::make_shared<ExprNode>();
        n->op = Op::Const;
        n->value = v;
        if (text.empty()) {
            text = v.is_point() ? format_double(v.lo()) : format_double(v.mid());
            if (v.is_point() && !decimal_enclosure(text).is_point()) {
                text = exact_decimal(v.lo());
            }
        }
        n->text = std::move(text);
        return Expr{std::move(n)};
    }
    static Expr literal(std::string_view text) { return constant(decimal_enclosure(text), std::string(text)); }
    static Expr param(int i) { return ref(Op::Param, i); }
    static Expr var(int i) { return ref(Op::Var, i); }
    static Expr unary(Op op, Expr a)
    {
        auto n = std::make_shared<ExprNode>();
        n->op = op;
        n->args = {std::move(a)};
        return Expr{std::move(n)};
    }
    static Expr binary(Op op, Expr a, Expr b)
    {
        auto n = std::make_shared<ExprNode>();
        n->op = op;
        n->args = {std::move(a), std::move(b)};
        return Expr{std::move(n)};
    }
    static Expr power(Expr a, int k)
    {
        auto n = std::make_shared<ExprNode>();
        n->op = Op::Pow;
        n->exponent = k;
        n->args = {std::move(a)};
        return Expr{std::move(n)};
    }

    [[nodiscard]] Op op() const { return node_->op; }
    [[nodiscard]] const ExprNode& node() const { return *node_; }
    [[nodiscard]] const Expr& arg(std::size_t i) const { return node_->args.at(i); }
    [[nodiscard]] const ExprNode* identity() const { return node_.get(); }

    [[nodiscard]] bool is_constant(double v) const
    {
        return op() == Op::Const && node_->value.is_point() && node_->value.lo() == v;
    }

private:
    explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
    static Expr ref(Op op, int i)
    {
        auto n = std::make_shared<ExprNode>();
        n->op = op;
        n->index = i;
        return Expr{std::move(n)};
    }

    std::shared_ptr<const ExprNode> node_;
};

inline Expr operator+(Expr a, Expr b) { return Expr::binary(Op::Add, std::move(a), std::move(b)); }
inline Expr operator-(Expr a, Expr b) { return Expr::binary(Op::Sub, std::move(a), std::move(b)); }
inline Expr operator*(Expr a, Expr b) { return Expr::binary(Op::Mul, std::move(a), std::move(b)); }
inline Expr operator/(Expr a, Expr b) { return Expr::binary(Op::Div, std::move(a), std::move(b)); }
inline Expr operator-(Expr a) { return Expr::unary(Op::Neg, std::move(a)); }
inline Expr sin(Expr a) { return Expr::unary(Op::Sin, std::move(a)); }
inline Expr cos(Expr a) { return Expr::unary(Op::Cos, std::move(a)); }
inline Expr exp(Expr a) { return Expr::unary(Op::Exp, std::move(a)); }
inline Expr pow(Expr a, int k) { return Expr::power(std::move(a), k); }

/// Structural equality; constants compare by enclosure.
inline bool structurally_equal(const Expr& a, const Expr& b)
{
    if (a.identity() == b.identity()) {
        return true;
    }
    const auto& na = a.node();
    const auto& nb = b.node();
    if (na.op != nb.op || na.args.size() != nb.args.size()) {
        return false;
    }
    switch (na.op) {
    case Op::Const:
        return na.value == nb.value;
    case Op::Param:
    case Op::Var:
        return na.index == nb.index;
    case Op::Pow:
        if (na.exponent != nb.exponent) {
            return false;
        }
        break;
    default:
        break;
    }
    for (std::size_t i = 0; i < na.args.size(); ++i) {
        if (!structurally_equal(na.args[i], nb.args[i])) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Names

/// Declared parameter and variable names; positions are the internal indices.
struct SymbolTable {
    std::vector<std::string> params;
    std::vector<std::string> vars;

    /// Returns (Op::Param|Op::Var, index) or nullopt.
    [[nodiscard]] std::optional<std::pair<Op, int>> lookup(std::string_view name) const
    {
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (vars[i] == name) {
                return std::pair{Op::Var, static_cast<int>(i)};
            }
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (params[i] == name) {
                return std::pair{Op::Param, static_cast<int>(i)};
            }
        }
        return std::nullopt;
    }
};

// ---------------------------------------------------------------------------
// Interval evaluation

/// Natural interval extension of `e` over the boxes u and x.
inline Interval eval_box(const Expr& e, const IntervalBox& u, const IntervalBox& x)
{
    const auto& n = e.node();
    switch (n.op) {
    case Op::Const:
        return n.value;
    case Op::Param:
        if (n.index < 0 || static_cast<std::size_t>(n.index) >= u.size()) {
            throw std::out_of_range("eval_box: parameter index out of range");
        }
        return u[n.index];
    case Op::Var:
        if (n.index < 0 || static_cast<std::size_t>(n.index) >= x.size()) {
            throw std::out_of_range("eval_box: variable index out of range");
        }
        return x[n.index];
    case Op::Add:
        return eval_box(n.args[0], u, x) + eval_box(n.args[1], u, x);
    case Op::Sub:
        return eval_box(n.args[0], u, x) - eval_box(n.args[1], u, x);
    case Op::Mul:
        if (structurally_equal(n.args[0], n.args[1])) {
            return sqr(eval_box(n.args[0], u, x));
        }
        return eval_box(n.args[0], u, x) * eval_box(n.args[1], u, x);
    case Op::Div: {
        const Interval den = eval_box(n.args[1], u, x);
        if (den.contains_zero()) {
            throw EvaluationError("division by an interval containing zero");
        }
        return eval_box(n.args[0], u, x) / den;
    }
    case Op::Neg:
        return -eval_box(n.args[0], u, x);
    case Op::Pow: {
        const Interval b = eval_box(n.args[0], u, x);
        if (n.exponent < 0 && b.contains_zero()) {
            throw EvaluationError("negative power of an interval containing zero");
        }
        return pow(b, n.exponent);
    }
    case Op::Sin:
        return sin(eval_box(n.args[0], u, x));
    case Op::Cos:
        return cos(eval_box(n.args[0], u, x));
    case Op::Exp:
        return exp(eval_box(n.args[0], u, x));
    }
    throw std::logic_error("eval_box: unknown op");
}

/// Floating-point evaluation at a point (non-validated; used by oracles and
/// step-size heuristics).
inline double eval_point(const Expr& e, const std::vector<double>& u, const std::vector<double>& x)
{
    const auto& n = e.node();
    switch (n.op) {
    case Op::Const:
        return n.value.mid();
    case Op::Param:
        return u.at(n.index);
    case Op::Var:
        return x.at(n.index);
    case Op::Add:
        return eval_point(n.args[0], u, x) + eval_point(n.args[1], u, x);
    case Op::Sub:
        return eval_point(n.args[0], u, x) - eval_point(n.args[1], u, x);
    case Op::Mul:
        return eval_point(n.args[0], u, x) * eval_point(n.args[1], u, x);
    case Op::Div:
        return eval_point(n.args[0], u, x) / eval_point(n.args[1], u, x);
    case Op::Neg:
        return -eval_point(n.args[0], u, x);
    case Op::Pow:
        return std::pow(eval_point(n.args[0], u, x), n.exponent);
    case Op::Sin:
        return std::sin(eval_point(n.args[0], u, x));
    case Op::Cos:
        return std::cos(eval_point(n.args[0], u, x));
    case Op::Exp:
        return std::exp(eval_point(n.args[0], u, x));
    }
    throw std::logic_error("eval_point: unknown op");
}

// ---------------------------------------------------------------------------
// Differentiation

namespace detail {

inline bool is_const(const Expr& e) { return e.op() == Op::Const; }

inline Expr fold(Op op, const Expr& a, const Expr& b)
{
    const Interval x = a.node().value;
    const Interval y = b.node().value;
    switch (op) {
    case Op::Add:
        return Expr::constant(x + y);
    case Op::Sub:
        return Expr::constant(x - y);
    case Op::Mul:
        return Expr::constant(x * y);
    default:
        break;
    }
    return Expr::binary(op, a, b);
}

// Light algebraic cleanup so that derivatives stay readable.
inline Expr add(const Expr& a, const Expr& b)
{
    if (a.is_constant(0)) {
        return b;
    }
    if (b.is_constant(0)) {
        return a;
    }
    if (is_const(a) && is_const(b)) {
        return fold(Op::Add, a, b);
    }
    return a + b;
}

inline Expr neg(const Expr& a)
{
    if (a.is_constant(0)) {
        return a;
    }
    if (is_const(a) && a.node().value.is_point()) {
        return Expr::constant(-a.node().value);
    }
    if (a.op() == Op::Neg) {
        return a.arg(0);
    }
    return -a;
}

inline Expr sub(const Expr& a, const Expr& b)
{
    if (b.is_constant(0)) {
        return a;
    }
    if (a.is_constant(0)) {
        return neg(b);
    }
    if (is_const(a) && is_const(b)) {
        return fold(Op::Sub, a, b);
    }
    return a - b;
}

inline Expr mul(const Expr& a, const Expr& b)
{
    if (a.is_constant(0) || b.is_constant(0)) {
        return Expr::constant(0.0);
    }
    if (a.is_constant(1)) {
        return b;
    }
    if (b.is_constant(1)) {
        return a;
    }
    if (a.is_constant(-1)) {
        return neg(b);
    }
    if (b.is_constant(-1)) {
        return neg(a);
    }
    if (is_const(a) && is_const(b)) {
        return fold(Op::Mul, a, b);
    }
    return a * b;
}

inline Expr power(const Expr& a, int k)
{
    if (k == 0) {
        return Expr::constant(1.0);
    }
    if (k == 1) {
        return a;
    }
    return pow(a, k);
}

} // namespace detail

/// Symbolic partial derivative with respect to variable `var`. Parameters are
/// treated as constants.
inline Expr derivative(const Expr& e, int var)
{
    using namespace detail;
    const auto& n = e.node();
    switch (n.op) {
    case Op::Const:
    case Op::Param:
        return Expr::constant(0.0);
    case Op::Var:
        return Expr::constant(n.index == var ? 1.0 : 0.0);
    case Op::Add:
        return add(derivative(n.args[0], var), derivative(n.args[1], var));
    case Op::Sub:
        return sub(derivative(n.args[0], var), derivative(n.args[1], var));
    case Op::Mul:
        return add(mul(derivative(n.args[0], var), n.args[1]), mul(n.args[0], derivative(n.args[1], var)));
    case Op::Div: {
        const Expr& a = n.args[0];
        const Expr& b = n.args[1];
        const Expr da = derivative(a, var);
        const Expr db = derivative(b, var);
        if (db.is_constant(0)) {
            if (da.is_constant(0)) {
                return Expr::constant(0.0);
            }
            return da / b;
        }
        return sub(mul(da, b), mul(a, db)) / power(b, 2);
    }
    case Op::Neg:
        return neg(derivative(n.args[0], var));
    case Op::Pow: {
        const Expr& a = n.args[0];
        const Expr da = derivative(a, var);
        if (da.is_constant(0)) {
            return Expr::constant(0.0);
        }
        return mul(mul(Expr::constant(static_cast<double>(n.exponent)), power(a, n.exponent - 1)), da);
    }
    case Op::Sin:
        return mul(cos(n.args[0]), derivative(n.args[0], var));
    case Op::Cos:
        return mul(neg(sin(n.args[0])), derivative(n.args[0], var));
    case Op::Exp:
        return mul(e, derivative(n.args[0], var));
    }
    throw std::logic_error("derivative: unknown op");
}

/// Gradient with respect to the first `n_vars` variables.
inline std::vector<Expr> gradient(const Expr& e, int n_vars)
{
    std::vector<Expr> g;
    g.reserve(n_vars);
    for (int i = 0; i < n_vars; ++i) {
        g.push_back(derivative(e, i));
    }
    return g;
}

/// True if e references variable `var`.
inline bool depends_on_var(const Expr& e, int var)
{
    const auto& n = e.node();
    if (n.op == Op::Var) {
        return n.index == var;
    }
    for (const auto& a : n.args) {
        if (depends_on_var(a, var)) {
            return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline int precedence(const Expr& e)
{
    switch (e.op()) {
    case Op::Add:
    case Op::Sub:
        return 1;
    case Op::Mul:
    case Op::Div:
        return 2;
    case Op::Neg:
        return 3;
    case Op::Pow:
        return 4;
    case Op::Const:
        return e.node().text.starts_with('-') ? 3 : 5;
    default:
        return 5;
    }
}

inline void print(std::ostream& os, const Expr& e, const SymbolTable& names);

inline void print_child(std::ostream& os, const Expr& c, const SymbolTable& names, bool parens)
{
    if (parens) {
        os << '(';
    }
    print(os, c, names);
    if (parens) {
        os << ')';
    }
}

inline void print(std::ostream& os, const Expr& e, const SymbolTable& names)
{
    const auto& n = e.node();
    const int p = precedence(e);
    switch (n.op) {
    case Op::Const:
        os << n.text;
        return;
    case Op::Param:
        if (static_cast<std::size_t>(n.index) < names.params.size()) {
            os << names.params[n.index];
        } else {
            os << 'u' << (n.index + 1);
        }
        return;
    case Op::Var:
        if (static_cast<std::size_t>(n.index) < names.vars.size()) {
            os << names.vars[n.index];
        } else {
            os << 'x' << (n.index + 1);
        }
        return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
        const char sym = n.op == Op::Add ? '+' : n.op == Op::Sub ? '-' : n.op == Op::Mul ? '*' : '/';
        // The grammar is left-associative, so a right operand of the same
        // level keeps its parentheses.
        print_child(os, n.args[0], names, precedence(n.args[0]) < p);
        if (p == 1) {
            os << ' ' << sym << ' ';
        } else {
            os << sym;
        }
        print_child(os, n.args[1], names, precedence(n.args[1]) <= p);
        return;
    }
    case Op::Neg: {
        os << '-';
        const Expr& a = n.args[0];
        // A literal directly after '-' would be read back as a negative constant.
        print_child(os, a, names, precedence(a) < 4 || a.op() == Op::Const);
        return;
    }
    case Op::Pow:
        print_child(os, n.args[0], names, precedence(n.args[0]) < 5);
        os << '^';
        if (n.exponent < 0) {
            os << '(' << n.exponent << ')';
        } else {
            os << n.exponent;
        }
        return;
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
        os << (n.op == Op::Sin ? "sin(" : n.op == Op::Cos ? "cos(" : "exp(");
        print(os, n.args[0], names);
        os << ')';
        return;
    }
}

} // namespace detail

inline std::string to_string(const Expr& e, const SymbolTable& names = {})
{
    std::ostringstream os;
    detail::print(os, e, names);
    return os.str();
}

// ---------------------------------------------------------------------------
// Lexing and parsing (shared with the model and formula grammars)

enum class Tok {
    Number,
    Ident,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Less,
    Greater,
    LessEq,
    GreaterEq,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Prime,
    Equal,
    End
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int line = 1;
    int column = 1;
};

/// Tokenizes `src`; `#` starts a comment running to end of line. Newlines are
/// not tokens, but every token records its line.
inline std::vector<Token> tokenize(std::string_view src, int first_line = 1)
{
    std::vector<Token> out;
    int line = first_line;
    int col = 1;
    std::size_t i = 0;
    auto push = [&](Tok k, std::string t, int c) { out.push_back(Token{k, std::move(t), line, c}); };
    while (i < src.size()) {
        const char c = src[i];
        if (c == '\n') {
            ++line;
            col = 1;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            ++col;
            continue;
        }
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') {
                ++i;
            }
            continue;
        }
        const int start_col = col;
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src.size() &&
                                                            std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t j = i;
            while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) {
                ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) {
                    ++k;
                }
                if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
                    j = k;
                    while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                        ++j;
                    }
                }
            }
            std::string text(src.substr(i, j - i));
            if (std::count(text.begin(), text.end(), '.') > 1) {
                throw ParseError("malformed number '" + text + "'", line, start_col);
            }
            push(Tok::Number, text, start_col);
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
                ++j;
            }
            push(Tok::Ident, std::string(src.substr(i, j - i)), start_col);
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        auto two = [&](char next) { return i + 1 < src.size() && src[i + 1] == next; };
        Tok k = Tok::End;
        int len = 1;
        switch (c) {
        case '+': k = Tok::Plus; break;
        case '-':
            if (two('>')) {
                k = Tok::Arrow;
                len = 2;
            } else {
                k = Tok::Minus;
            }
            break;
        case '*': k = Tok::Star; break;
        case '/': k = Tok::Slash; break;
        case '^': k = Tok::Caret; break;
        case '(': k = Tok::LParen; break;
        case ')': k = Tok::RParen; break;
        case '[': k = Tok::LBracket; break;
        case ']': k = Tok::RBracket; break;
        case ',': k = Tok::Comma; break;
        case '<':
            if (two('=')) {
                k = Tok::LessEq;
                len = 2;
            } else {
                k = Tok::Less;
            }
            break;
        case '>':
            if (two('=')) {
                k = Tok::GreaterEq;
                len = 2;
            } else {
                k = Tok::Greater;
            }
            break;
        case '!': k = Tok::Bang; break;
        case '&':
            k = Tok::Amp;
            if (two('&')) {
                len = 2;
            }
            break;
        case '|':
            k = Tok::Pipe;
            if (two('|')) {
                len = 2;
            }
            break;
        case '\'': k = Tok::Prime; break;
        case '=': k = Tok::Equal; break;
        default:
            throw ParseError(std::string("unexpected character '") + c + "'", line, start_col);
        }
        push(k, std::string(src.substr(i, len)), start_col);
        i += len;
        col += len;
    }
    out.push_back(Token{Tok::End, "", line, col});
    return out;
}

/// Recursive-descent cursor over a token vector.
class TokenCursor {
public:
    explicit TokenCursor(std::vector<Token> toks) : toks_(std::move(toks)) {}

    [[nodiscard]] const Token& peek(std::size_t ahead = 0) const
    {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
    bool accept(Tok k)
    {
        if (peek().kind == k) {
            ++pos_;
            return true;
        }
        return false;
    }
    const Token& expect(Tok k, const char* what)
    {
        if (peek().kind != k) {
            fail(std::string("expected ") + what + describe(peek()));
        }
        return next();
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().line, peek().column); }
    [[nodiscard]] std::size_t position() const { return pos_; }
    void rewind(std::size_t p) { pos_ = p; }
    [[nodiscard]] bool at_end() const { return peek().kind == Tok::End; }

    static std::string describe(const Token& t)
    {
        if (t.kind == Tok::End) {
            return " but reached end of input";
        }
        return " but found '" + t.text + "'";
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

/// Expression grammar:
///   sum     := product (('+'|'-') product)*
///   product := unary (('*'|'/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' ['-'] integer | '^' '(' ['-'] integer ')')?
///   primary := number | name | ('sin'|'cos'|'exp') '(' sum ')' | '(' sum ')'
/// A '-' directly followed by a number literal yields a negative constant.
class ExpressionParser {
public:
    ExpressionParser(TokenCursor& cur, const SymbolTable& names) : cur_(cur), names_(names) {}

    Expr parse_sum()
    {
        Expr lhs = parse_product();
        for (;;) {
            if (cur_.accept(Tok::Plus)) {
                lhs = lhs + parse_product();
            } else if (cur_.accept(Tok::Minus)) {
                lhs = lhs - parse_product();
            } else {
                return lhs;
            }
        }
    }

private:
    Expr parse_product()
    {
        Expr lhs = parse_unary();
        for (;;) {
            if (cur_.accept(Tok::Star)) {
                lhs = lhs * parse_unary();
            } else if (cur_.accept(Tok::Slash)) {
                lhs = lhs / parse_unary();
            } else {
                return lhs;
            }
        }
    }

    Expr parse_unary()
    {
        if (cur_.accept(Tok::Minus)) {
            if (cur_.peek().kind == Tok::Number && cur_.peek(1).kind != Tok::Caret) {
                const Token& t = cur_.next();
                return Expr::literal("-" + t.text);
            }
            return -parse_unary();
        }
        return parse_power();
    }

    Expr parse_power()
    {
        Expr base = parse_primary();
        if (!cur_.accept(Tok::Caret)) {
            return base;
        }
        const bool paren = cur_.accept(Tok::LParen);
        const bool negative = cur_.accept(Tok::Minus);
        const Token& t = cur_.expect(Tok::Number, "an integer exponent");
        int k = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), k);
        if (ec != std::errc{} || p != t.text.data() + t.text.size()) {
            throw ParseError("exponent must be an integer, found '" + t.text + "'", t.line, t.column);
        }
        if (paren) {
            cur_.expect(Tok::RParen, "')'");
        }
        return pow(base, negative ? -k : k);
    }

    Expr parse_primary()
    {
        const Token& t = cur_.peek();
        if (t.kind == Tok::Number) {
            cur_.next();
            return Expr::literal(t.text);
        }
        if (t.kind == Tok::LParen) {
            cur_.next();
            Expr e = parse_sum();
            cur_.expect(Tok::RParen, "')'");
            return e;
        }
        if (t.kind == Tok::Ident) {
            const Token id = cur_.next();
            if (id.text == "sin" || id.text == "cos" || id.text == "exp") {
                cur_.expect(Tok::LParen, "'(' after function name");
                Expr a = parse_sum();
                cur_.expect(Tok::RParen, "')'");
                return id.text == "sin" ? sin(a) : id.text == "cos" ? cos(a) : exp(a);
            }
            auto sym = names_.lookup(id.text);
            if (!sym) {
                throw ParseError("undeclared identifier '" + id.text + "'", id.line, id.column);
            }
            return sym->first == Op::Var ? Expr::var(sym->second) : Expr::param(sym->second);
        }
        cur_.fail("expected an expression" + TokenCursor::describe(t));
    }

    TokenCursor& cur_;
    const SymbolTable& names_;
};

/// Parses a complete expression.
inline Expr parse_expression(std::string_view text, const SymbolTable& names)
{
    TokenCursor cur(tokenize(text));
    ExpressionParser p(cur, names);
    Expr e = p.parse_sum();
    if (!cur.at_end()) {
        cur.fail("unexpected trailing input" + TokenCursor::describe(cur.peek()));
    }
    return e;
}

} // namespace stlmon
