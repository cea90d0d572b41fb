#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "stlmon/model.hpp"
#include "stlmon/stl.hpp"

using namespace stlmon;

namespace {

const SymbolTable rotation_names{{"u1"}, {"x1", "x2"}};
const SymbolTable timer_names{{}, {"x"}};

Formula atom(const char* e, const SymbolTable& names) { return Formula::atom(parse_expression(e, names)); }

std::vector<std::string> corpus()
{
    std::vector<std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(std::string(STLMON_SOURCE_DIR) + "/formulas")) {
        std::ifstream in(entry.path());
        std::ostringstream ss;
        ss << in.rdbuf();
        out.push_back(ss.str());
    }
    return out;
}

// Wide enough for every bundled formula.
const SymbolTable corpus_names{{"u1", "u2", "u3"}, {"x", "x1", "x2", "x3"}};

} // namespace

TEST(Stl, DesugarsAlwaysEventually)
{
    const Formula f = parse_formula("G[0,10] F[0,6.284] !(x2 - 1 < 0)", rotation_names);
    const Formula expected = Formula::negation(Formula::until(
        TimeBound::from_text("0", "10"), Formula::truth(),
        Formula::negation(Formula::until(TimeBound::from_text("0", "6.284"), Formula::truth(),
                                         Formula::negation(atom("x2 - 1", rotation_names))))));
    EXPECT_TRUE(structurally_equal(f, expected)) << to_string(f, rotation_names);
}

TEST(Stl, DesugarsConjunction)
{
    const Formula f = parse_formula("F[0,6.284] (cos(x) < 0 & sin(x) < 0)", timer_names);
    const Formula expected = Formula::until(
        TimeBound::from_text("0", "6.284"), Formula::truth(),
        Formula::negation(Formula::disjunction(Formula::negation(atom("cos(x)", timer_names)),
                                               Formula::negation(atom("sin(x)", timer_names)))));
    EXPECT_TRUE(structurally_equal(f, expected)) << to_string(f, timer_names);
}

TEST(Stl, Basics)
{
    EXPECT_EQ(parse_formula("true", timer_names).kind(), FormulaKind::True);
    EXPECT_TRUE(structurally_equal(parse_formula("false", timer_names), Formula::negation(Formula::truth())));
    EXPECT_TRUE(structurally_equal(parse_formula("x > 2", timer_names), atom("2 - x", timer_names)));
    EXPECT_TRUE(structurally_equal(parse_formula("x < 2 -> x < 3", timer_names),
                                   Formula::disjunction(Formula::negation(atom("x - 2", timer_names)),
                                                        atom("x - 3", timer_names))));
    EXPECT_TRUE(structurally_equal(parse_formula("x < 1 U[1,2] x < 3", timer_names),
                                   Formula::until(TimeBound::from_text("1", "2"), atom("x - 1", timer_names),
                                                  atom("x - 3", timer_names))));
    // ! binds tighter than &, & tighter than |, | tighter than ->
    const Formula p = parse_formula("!x < 1 & x < 2 | x < 3 -> x < 4", timer_names);
    ASSERT_EQ(p.kind(), FormulaKind::Or); // implication
    EXPECT_EQ(p.arg(0).kind(), FormulaKind::Not);
    EXPECT_EQ(p.arg(0).arg(0).kind(), FormulaKind::Or);
}

TEST(Stl, NecessaryLength)
{
    EXPECT_EQ(necessary_length(atom("x", timer_names)), 0.0);
    EXPECT_DOUBLE_EQ(necessary_length(parse_formula("F[0,6.284] x < 0", timer_names)), 6.284);
    const double g = necessary_length(parse_formula("G[0,10] F[0,6.284] x < 0", timer_names));
    EXPECT_DOUBLE_EQ(g, 16.284);
    EXPECT_GE(g, 16.284);
    EXPECT_DOUBLE_EQ(necessary_length(parse_formula("x < 0 | F[1,2] x < 1", timer_names)), 2.0);
    EXPECT_DOUBLE_EQ(necessary_length(parse_formula("(F[0,1] x < 0) U[0,3] (G[0,2] x < 1)", timer_names)), 5.0);
    // G[0,t] phi computed through its desugaring and directly
    const Formula inner = parse_formula("F[0.5,5] x < 0", timer_names);
    EXPECT_DOUBLE_EQ(necessary_length(Formula::always(TimeBound::from_text("0", "15"), inner)),
                     necessary_length(inner) + 15);
}

TEST(Stl, Atoms)
{
    const SymbolTable n = rotation_names;
    EXPECT_EQ(atoms(parse_formula("G[0,10] F[0,6.284] !(x2 - 1 < 0)", n)).size(), 1u);
    EXPECT_EQ(atoms(parse_formula("G[0,10] F[0,6.284] (!(x2 - 1 < 0) & F[0,3.142] !(-x2 - 1 < 0))", n)).size(), 2u);
    EXPECT_EQ(atoms(parse_formula("true", n)).size(), 0u);
    EXPECT_EQ(atoms(parse_formula("x2 < 1 & F[0,1] x2 < 1 | 1 > x2", n)).size(), 1u);
    const auto reg = atoms(parse_formula("x1 < 0 | x2 < 0 | x1 < 0", n));
    ASSERT_EQ(reg.size(), 2u);
    EXPECT_TRUE(structurally_equal(reg[0], parse_expression("x1", n)));
}

TEST(Stl, Errors)
{
    EXPECT_THROW((void)parse_formula("x <= 1", timer_names), ParseError);
    EXPECT_THROW((void)parse_formula("x >= 1", timer_names), ParseError);
    EXPECT_THROW((void)parse_formula("F[2,1] x < 1", timer_names), ParseError);
    EXPECT_THROW((void)parse_formula("F[-1,1] x < 1", timer_names), ParseError);
    EXPECT_THROW((void)parse_formula("F[0,] x < 1", timer_names), ParseError);
    EXPECT_THROW((void)parse_formula("y < 1", timer_names), ParseError);
    EXPECT_THROW((void)parse_formula("(x < 1", timer_names), ParseError);
    EXPECT_THROW((void)parse_formula("x < 1 x < 2", timer_names), ParseError);
    try {
        (void)parse_formula("F[0,1]\n  (x < 1 &)", timer_names);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2);
        EXPECT_GT(e.column(), 1);
    }
}

TEST(Stl, CorpusRoundTrip)
{
    const auto texts = corpus();
    ASSERT_GE(texts.size(), 9u);
    for (const auto& text : texts) {
        const SymbolTable& names = corpus_names;
        const Formula f = parse_formula(text, names);
        const std::string printed = to_string(f, names);
        const Formula again = parse_formula(printed, names);
        EXPECT_TRUE(structurally_equal(f, again)) << text << "\n -> " << printed;
        EXPECT_EQ(to_string(again, names), printed);
    }
}

TEST(Stl, LorenzProperty)
{
    const SymbolTable n{{"u1", "u2", "u3"}, {"x1", "x2", "x3"}};
    const Formula f =
        parse_formula("G[0,15] (!(-x1 - 15 < 0) -> F[0.5,5] G[0,1] ((x1 - 10)^2 + (x2 - 10)^2 - 150 < 0))", n);
    EXPECT_DOUBLE_EQ(necessary_length(f), 21.0);
    EXPECT_EQ(atoms(f).size(), 2u);
}
