#pragma once

// Signal temporal logic formulas over the variables of a system.
//
// The core syntax is true, atoms f < 0, negation, disjunction and bounded
// until. Everything else (&, ->, F, G, false, >) is desugared by the parser.
//
// Concrete grammar, loosest binding first:
//   formula := disj ('->' formula)?
//   disj    := conj ('|' conj)*
//   conj    := until ('&' until)*
//   until   := unary ('U' bound until)?
//   unary   := '!' unary | ('F'|'G') bound unary | primary
//   primary := 'true' | 'false' | atom | '(' formula ')'
//   atom    := expr ('<'|'>') expr
//   bound   := '[' number ',' number ']'

#include <algorithm>
#include <cstddef>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "expression.hpp"
#include "interval.hpp"

namespace stlmon {

/// Until time bound [lo, hi]; each endpoint is the machine enclosure of the
/// decimal literal it was written as.
struct TimeBound {
    Interval lo;
    Interval hi;
    std::string lo_text;
    std::string hi_text;

    static TimeBound from_text(std::string lo_text, std::string hi_text)
    {
        return TimeBound{decimal_enclosure(lo_text), decimal_enclosure(hi_text), std::move(lo_text), std::move(hi_text)};
    }
    static TimeBound from_values(double lo, double hi)
    {
        return TimeBound{Interval{lo}, Interval{hi}, format_double(lo), format_double(hi)};
    }

    [[nodiscard]] bool same_as(const TimeBound& o) const { return lo == o.lo && hi == o.hi; }
};

enum class FormulaKind { True, Atom, Or, Not, Until };

class Formula;

struct FormulaNode {
    FormulaKind kind = FormulaKind::True;
    Expr atom;        // Atom: holds where atom < 0
    TimeBound bound;  // Until
    std::vector<Formula> args;
};

/// Immutable formula handle.
class Formula {
public:
    Formula() : Formula(truth()) {}

    static Formula truth()
    {
        auto n = std::make_shared<FormulaNode>();
        n->kind = FormulaKind::True;
        return Formula(std::move(n));
    }
    static Formula atom(Expr f)
    {
        auto n = std::make_shared<FormulaNode>();
        n->kind = FormulaKind::Atom;
        n->atom = std::move(f);
        return Formula(std::move(n));
    }
    static Formula negation(Formula a)
    {
        auto n = std::make_shared<FormulaNode>();
        n->kind = FormulaKind::Not;
        n->args = {std::move(a)};
        return Formula(std::move(n));
    }
    static Formula disjunction(Formula a, Formula b)
    {
        auto n = std::make_shared<FormulaNode>();
        n->kind = FormulaKind::Or;
        n->args = {std::move(a), std::move(b)};
        return Formula(std::move(n));
    }
    static Formula until(TimeBound t, Formula a, Formula b)
    {
        if (!(t.lo.lo() >= 0)) {
            throw std::invalid_argument("until: negative time bound");
        }
        if (t.lo.lo() > t.hi.hi()) {
            throw std::invalid_argument("until: empty time bound");
        }
        auto n = std::make_shared<FormulaNode>();
        n->kind = FormulaKind::Until;
        n->bound = std::move(t);
        n->args = {std::move(a), std::move(b)};
        return Formula(std::move(n));
    }

    // Abbreviations.
    static Formula conjunction(Formula a, Formula b)
    {
        return negation(disjunction(negation(std::move(a)), negation(std::move(b))));
    }
    static Formula implication(Formula a, Formula b) { return disjunction(negation(std::move(a)), std::move(b)); }
    static Formula eventually(TimeBound t, Formula a) { return until(std::move(t), truth(), std::move(a)); }
    static Formula always(TimeBound t, Formula a) { return negation(eventually(std::move(t), negation(std::move(a)))); }

    [[nodiscard]] FormulaKind kind() const { return node_->kind; }
    [[nodiscard]] const FormulaNode& node() const { return *node_; }
    [[nodiscard]] const Formula& arg(std::size_t i) const { return node_->args.at(i); }
    [[nodiscard]] const Expr& atom_expr() const { return node_->atom; }
    [[nodiscard]] const TimeBound& bound() const { return node_->bound; }
    [[nodiscard]] const FormulaNode* identity() const { return node_.get(); }

private:
    explicit Formula(std::shared_ptr<const FormulaNode> n) : node_(std::move(n)) {}
    std::shared_ptr<const FormulaNode> node_;
};

inline bool structurally_equal(const Formula& a, const Formula& b)
{
    if (a.identity() == b.identity()) {
        return true;
    }
    if (a.kind() != b.kind()) {
        return false;
    }
    switch (a.kind()) {
    case FormulaKind::True:
        return true;
    case FormulaKind::Atom:
        return structurally_equal(a.atom_expr(), b.atom_expr());
    case FormulaKind::Not:
        return structurally_equal(a.arg(0), b.arg(0));
    case FormulaKind::Or:
        return structurally_equal(a.arg(0), b.arg(0)) && structurally_equal(a.arg(1), b.arg(1));
    case FormulaKind::Until:
        return a.bound().same_as(b.bound()) && structurally_equal(a.arg(0), b.arg(0)) &&
               structurally_equal(a.arg(1), b.arg(1));
    }
    return false;
}

/// Signal length needed to decide the formula, rounded up.
inline double necessary_length(const Formula& f)
{
    switch (f.kind()) {
    case FormulaKind::True:
    case FormulaKind::Atom:
        return 0.0;
    case FormulaKind::Not:
        return necessary_length(f.arg(0));
    case FormulaKind::Or:
        return std::max(necessary_length(f.arg(0)), necessary_length(f.arg(1)));
    case FormulaKind::Until:
        return rounding::add_up(std::max(necessary_length(f.arg(0)), necessary_length(f.arg(1))), f.bound().hi.hi());
    }
    return 0.0;
}

/// Distinct atoms in order of first appearance (left to right).
class AtomRegistry {
public:
    /// Index of `f`, adding it if new.
    std::size_t add(const Expr& f)
    {
        if (auto i = find(f)) {
            return *i;
        }
        atoms_.push_back(f);
        return atoms_.size() - 1;
    }
    [[nodiscard]] std::optional<std::size_t> find(const Expr& f) const
    {
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            if (structurally_equal(atoms_[i], f)) {
                return i;
            }
        }
        return std::nullopt;
    }
    [[nodiscard]] std::size_t size() const { return atoms_.size(); }
    [[nodiscard]] bool empty() const { return atoms_.empty(); }
    [[nodiscard]] const Expr& operator[](std::size_t i) const { return atoms_.at(i); }
    [[nodiscard]] auto begin() const { return atoms_.begin(); }
    [[nodiscard]] auto end() const { return atoms_.end(); }

private:
    std::vector<Expr> atoms_;
};

inline void collect_atoms(const Formula& f, AtomRegistry& reg)
{
    if (f.kind() == FormulaKind::Atom) {
        reg.add(f.atom_expr());
        return;
    }
    for (const auto& a : f.node().args) {
        collect_atoms(a, reg);
    }
}

inline AtomRegistry atoms(const Formula& f)
{
    AtomRegistry reg;
    collect_atoms(f, reg);
    return reg;
}

/// Number of nodes in the core tree.
inline std::size_t formula_size(const Formula& f)
{
    std::size_t n = 1;
    for (const auto& a : f.node().args) {
        n += formula_size(a);
    }
    return n;
}

// ---------------------------------------------------------------------------
// Printing (core syntax, reparsable)

inline void print(std::ostream& os, const Formula& f, const SymbolTable& names)
{
    switch (f.kind()) {
    case FormulaKind::True:
        os << "true";
        return;
    case FormulaKind::Atom:
        os << '(' << to_string(f.atom_expr(), names) << " < 0)";
        return;
    case FormulaKind::Not:
        os << '!';
        print(os, f.arg(0), names);
        return;
    case FormulaKind::Or:
        os << '(';
        print(os, f.arg(0), names);
        os << " | ";
        print(os, f.arg(1), names);
        os << ')';
        return;
    case FormulaKind::Until:
        os << '(';
        print(os, f.arg(0), names);
        os << " U[" << f.bound().lo_text << ',' << f.bound().hi_text << "] ";
        print(os, f.arg(1), names);
        os << ')';
        return;
    }
}

inline std::string to_string(const Formula& f, const SymbolTable& names = {})
{
    std::ostringstream os;
    print(os, f, names);
    return os.str();
}

// ---------------------------------------------------------------------------
// Parsing

class FormulaParser {
public:
    FormulaParser(TokenCursor& cur, const SymbolTable& names) : cur_(cur), names_(names) {}

    Formula parse_formula()
    {
        Formula lhs = parse_disj();
        if (cur_.accept(Tok::Arrow)) {
            return Formula::implication(lhs, parse_formula());
        }
        return lhs;
    }

private:
    Formula parse_disj()
    {
        Formula lhs = parse_conj();
        while (cur_.accept(Tok::Pipe)) {
            lhs = Formula::disjunction(lhs, parse_conj());
        }
        return lhs;
    }

    Formula parse_conj()
    {
        Formula lhs = parse_until();
        while (cur_.accept(Tok::Amp)) {
            lhs = Formula::conjunction(lhs, parse_until());
        }
        return lhs;
    }

    Formula parse_until()
    {
        Formula lhs = parse_unary();
        if (is_keyword(cur_.peek(), "U") && cur_.peek(1).kind == Tok::LBracket) {
            cur_.next();
            TimeBound t = parse_bound();
            return Formula::until(std::move(t), lhs, parse_until());
        }
        return lhs;
    }

    Formula parse_unary()
    {
        if (cur_.accept(Tok::Bang)) {
            return Formula::negation(parse_unary());
        }
        const Token& t = cur_.peek();
        if ((is_keyword(t, "F") || is_keyword(t, "G")) && cur_.peek(1).kind == Tok::LBracket) {
            const bool always = t.text == "G";
            cur_.next();
            TimeBound b = parse_bound();
            Formula body = parse_unary();
            return always ? Formula::always(std::move(b), body) : Formula::eventually(std::move(b), body);
        }
        return parse_primary();
    }

    Formula parse_primary()
    {
        const Token& t = cur_.peek();
        if (is_keyword(t, "true")) {
            cur_.next();
            return Formula::truth();
        }
        if (is_keyword(t, "false")) {
            cur_.next();
            return Formula::negation(Formula::truth());
        }
        if (t.kind != Tok::LParen) {
            return parse_atom();
        }
        // '(' opens either an atom such as (x-1)^2 < 0 or a subformula.
        const std::size_t start = cur_.position();
        try {
            return parse_atom();
        } catch (const ParseError& atom_error) {
            cur_.rewind(start);
            try {
                cur_.expect(Tok::LParen, "'('");
                Formula f = parse_formula();
                cur_.expect(Tok::RParen, "')'");
                return f;
            } catch (const ParseError& group_error) {
                // Report whichever reading got further.
                const bool atom_further = atom_error.line() > group_error.line() ||
                                          (atom_error.line() == group_error.line() &&
                                           atom_error.column() > group_error.column());
                if (atom_further) {
                    throw atom_error;
                }
                throw;
            }
        }
    }

    Formula parse_atom()
    {
        ExpressionParser ep(cur_, names_);
        Expr lhs = ep.parse_sum();
        const Token& op = cur_.peek();
        if (op.kind == Tok::LessEq || op.kind == Tok::GreaterEq) {
            throw ParseError("non-strict comparison '" + op.text + "' is not supported; use '<' or '>'", op.line,
                             op.column);
        }
        if (op.kind != Tok::Less && op.kind != Tok::Greater) {
            cur_.fail("expected '<' or '>'" + TokenCursor::describe(op));
        }
        const bool less = op.kind == Tok::Less;
        cur_.next();
        Expr rhs = ep.parse_sum();
        // a < b holds where a - b < 0; a > b where b - a < 0.
        Expr& pos = less ? lhs : rhs;
        Expr& neg = less ? rhs : lhs;
        if (neg.is_constant(0.0)) {
            return Formula::atom(pos);
        }
        if (pos.is_constant(0.0)) {
            return Formula::atom(-neg);
        }
        return Formula::atom(pos - neg);
    }

    TimeBound parse_bound()
    {
        cur_.expect(Tok::LBracket, "'['");
        std::string lo = parse_bound_number();
        cur_.expect(Tok::Comma, "','");
        std::string hi = parse_bound_number();
        const Token& close = cur_.expect(Tok::RBracket, "']'");
        TimeBound t = TimeBound::from_text(lo, hi);
        if (t.lo.lo() > t.hi.hi()) {
            throw ParseError("empty time bound [" + lo + "," + hi + "]", close.line, close.column);
        }
        return t;
    }

    std::string parse_bound_number()
    {
        const Token& at = cur_.peek();
        if (cur_.accept(Tok::Minus)) {
            const Token& n = cur_.expect(Tok::Number, "a number");
            if (decimal_enclosure(n.text) == Interval{0.0}) {
                return n.text;
            }
            throw ParseError("negative time bound -" + n.text, at.line, at.column);
        }
        return cur_.expect(Tok::Number, "a non-negative number").text;
    }

    static bool is_keyword(const Token& t, std::string_view w) { return t.kind == Tok::Ident && t.text == w; }

    TokenCursor& cur_;
    const SymbolTable& names_;
};

inline Formula parse_formula(std::string_view text, const SymbolTable& names)
{
    TokenCursor cur(tokenize(text));
    FormulaParser p(cur, names);
    Formula f = p.parse_formula();
    if (!cur.at_end()) {
        cur.fail("unexpected trailing input" + TokenCursor::describe(cur.peek()));
    }
    return f;
}

} // namespace stlmon
