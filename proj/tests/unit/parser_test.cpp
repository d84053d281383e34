#include <gtest/gtest.h>

#include "hyrql/canonical.hpp"
#include "hyrql/parser.hpp"
#include "support.hpp"

using namespace hyrql;

namespace {
const char* const kCorpus[] = {"hadamard.hyrql", "qs.hyrql", "len.hyrql", "keygen.hyrql",
                               "ackermann.hyrql", "map.hyrql", "diverging_superposition.hyrql"};
}

TEST(Parser, CorpusRoundTripsThroughPretty) {
  for (const char* f : kCorpus) {
    SourceFile src = fixtures::load(f);
    ASSERT_TRUE(src.entry()) << f;
    for (const Definition& d : src.defs) {
      TermPtr again = parse_term(pretty(d.term), src.registry);
      EXPECT_TRUE(alpha_equal(d.term, again)) << f << ": " << d.name << "\n" << pretty(d.term);
    }
  }
}

TEST(Parser, KetSugar) {
  Registry reg;
  EXPECT_TRUE(equiv(parse_term("|+>", reg), fixtures::plus()));
  EXPECT_TRUE(equiv(parse_term("|->", reg), fixtures::minus()));
  EXPECT_EQ(parse_term("|0>", reg)->tag, Tag::Ket0);
}

TEST(Parser, ListAndNatSugar) {
  Registry reg;
  EXPECT_TRUE(alpha_equal(parse_term("[0b, 1b]", reg), mk_list({mk_cons("0b"), mk_cons("1b")})));
  EXPECT_TRUE(alpha_equal(parse_term("3", reg), mk_nat(3)));
  EXPECT_TRUE(alpha_equal(parse_term("S (S 0)", reg), mk_nat(2)));
}

TEST(Parser, DefinitionsAreInlined) {
  SourceFile src = fixtures::load("hadamard.hyrql");
  const Definition* m = src.find("main");
  ASSERT_TRUE(m);
  EXPECT_TRUE(is_closed(m->term));
  EXPECT_EQ(m->term->tag, Tag::App);
  EXPECT_TRUE(alpha_equal(m->term->fn(), src.find("Had")->term));
}

TEST(Parser, UserTypeDeclaration) {
  SourceFile src = parse("type color = Red | Green | Blue;\ndef f = \\c. match c {Red -> 0, Green -> 1, Blue -> 2};\n");
  EXPECT_TRUE(src.registry.is_constructor("Green"));
  EXPECT_EQ(src.registry.constructors_of("color").size(), 3u);
}

TEST(Parser, MissingBranchIsReportedWithLocation) {
  try {
    parse("def f = \\n. match n {0 -> 0};");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.loc.line, 1);
    EXPECT_NE(std::string(e.what()).find("missing a branch"), std::string::npos);
  }
}

TEST(Parser, AmplitudeOutsideFieldRejected) { EXPECT_THROW(parse_amplitude("sqrt3"), std::exception); }

TEST(Parser, TypesPrintAndReparse) {
  Registry reg;
  for (const char* s : {"Qbit <-> Qbit", "[bit] => nat", "(Qbit -o Qbit) => [Qbit] -o [Qbit]", "Qbit * Qbit -o Qbit * Qbit"}) {
    TypePtr t = parse_type(s, reg);
    EXPECT_TRUE(type_equal(parse_type(type_str(t), reg), t)) << s;
  }
}

TEST(Parser, AlphaKeyIgnoresBinderNames) {
  Registry reg;
  EXPECT_EQ(alpha_key(parse_term("\\x. x", reg)), alpha_key(parse_term("\\y. y", reg)));
  EXPECT_NE(alpha_key(parse_term("\\x. \\y. x", reg)), alpha_key(parse_term("\\x. \\y. y", reg)));
}
