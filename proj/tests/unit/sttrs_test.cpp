#include <gtest/gtest.h>

#include "hyrql/sttrs.hpp"
#include "support.hpp"

using namespace hyrql;
using namespace hyrql::trs;

namespace {
const char* const kAck =
    "ack(0, n) -> S(n);\n"
    "ack(S(m), 0) -> ack(m, 1);\n"
    "ack(S(m), S(n)) -> ack(m, ack(S(m), n));\n";

const char* const kHad =
    "Had(|0>) -> (1/2*sqrt2)*|0> + (1/2*sqrt2)*|1>;\n"
    "Had(|1>) -> (1/2*sqrt2)*|0> + (-1/2*sqrt2)*|1>;\n";

unsigned ackermann(unsigned m, unsigned n) {
  if (m == 0) return n + 1;
  if (n == 0) return ackermann(m - 1, 1);
  return ackermann(m - 1, ackermann(m, n - 1));
}
} // namespace

TEST(Sttrs, AckermannRewritesToOracleValue) {
  Sttrs R = parse_trs(kAck);
  ASSERT_TRUE(well_formed(R).ok);
  for (unsigned m = 0; m <= 2; ++m) {
    for (unsigned n = 0; n <= 3; ++n) {
      RewriteResult r = rewrite_star(R, s_apply(s_fn("ack"), {s_nat(m), s_nat(n)}), 100000);
      ASSERT_EQ(r.status, RewriteStatus::Value);
      EXPECT_TRUE(s_equal(r.term, s_nat(ackermann(m, n)))) << m << "," << n << " -> " << print(r.term);
    }
  }
}

TEST(Sttrs, AckOneOneIsThree) {
  Sttrs R = parse_trs(kAck);
  RewriteResult r = rewrite_star(R, parse_sterm("ack(S(0), S(0))", R), 100);
  ASSERT_EQ(r.status, RewriteStatus::Value);
  EXPECT_EQ(print(r.term), "3");
}

TEST(Sttrs, SuperposedHadamardsMergeToZeroKet) {
  Sttrs R = parse_trs(kHad);
  STermPtr t = parse_sterm("(1/2*sqrt2)*Had(|0>) + (1/2*sqrt2)*Had(|1>)", R);
  RewriteResult r = rewrite_star(R, t, 100);
  ASSERT_EQ(r.status, RewriteStatus::Value);
  EXPECT_TRUE(s_equal(r.term, s_con("|0>"))) << print(r.term);
}

TEST(Sttrs, LinearityDecomposesSuperposedArguments) {
  Sttrs R = parse_trs(kHad);
  // Had applied to |+> is |0>.
  STermPtr t = parse_sterm("Had((1/2*sqrt2)*|0> + (1/2*sqrt2)*|1>)", R);
  RewriteResult r = rewrite_star(R, t, 100);
  ASSERT_EQ(r.status, RewriteStatus::Value);
  EXPECT_TRUE(s_equal(r.term, s_con("|0>")));
}

TEST(Sttrs, PrintParseRoundTrip) {
  for (const char* text : {kAck, kHad}) {
    Sttrs R = parse_trs(text);
    std::string once = to_trs(R);
    EXPECT_EQ(to_trs(parse_trs(once)), once);
  }
}

TEST(Sttrs, InferredTypes) {
  WellFormedResult wf = well_formed(parse_trs(kAck));
  ASSERT_TRUE(wf.ok);
  EXPECT_EQ(stype_str(wf.types.at("ack"), 2), "nat x nat -> nat");
}

TEST(Sttrs, NonLeftLinearRejected) {
  WellFormedResult wf = well_formed(parse_trs("eq(x, x) -> 0b;\n"));
  EXPECT_FALSE(wf.ok);
}

TEST(Sttrs, UnboundRhsVariableRejected) {
  WellFormedResult wf = well_formed(parse_trs("f(x) -> y;\n"));
  EXPECT_FALSE(wf.ok);
}

TEST(Sttrs, OverlappingRulesRejected) {
  WellFormedResult wf = well_formed(parse_trs("f(0) -> 0;\nf(n) -> S(n);\n"));
  EXPECT_FALSE(wf.ok);
}

TEST(Sttrs, IllTypedRuleRejected) {
  WellFormedResult wf = well_formed(parse_trs("f(0) -> 0;\nf(S(n)) -> 0b;\n"));
  EXPECT_FALSE(wf.ok);
}

TEST(Sttrs, NoMatchingRuleIsStuck) {
  Sttrs R = parse_trs("f(0) -> 0;\n");
  RewriteResult r = rewrite_star(R, parse_sterm("f(S(0))", R), 10);
  EXPECT_EQ(r.status, RewriteStatus::Stuck);
}

TEST(Sttrs, SyntaxErrorCarriesLocation) {
  try {
    parse_trs("f(0) -> ;\n");
    FAIL();
  } catch (const TrsError& e) {
    EXPECT_EQ(e.loc.line, 1);
  }
}
