#include <gtest/gtest.h>

#include "hyrql/analysis.hpp"
#include "hyrql/translate.hpp"
#include "support.hpp"

using namespace hyrql;
using namespace hyrql::analysis;

namespace {
trs::Sttrs system_of(const std::string& file, const std::string& def) {
  SourceFile src = fixtures::load(file);
  return translate_entry(src.find(def)->term, src.registry).system;
}

const char* const kLenInterp =
    R"({"0":{"constant":0},"S":{"constant":1,"coefficients":[1]},"[]":{"constant":0},)"
    R"("::":{"constant":1,"coefficients":[1,1]},"len":{"coefficients":[1]}})";
} // namespace

TEST(Lpo, ProvesAckermann) {
  trs::Sttrs R = system_of("ackermann.hyrql", "ack");
  LpoResult r = lpo_terminates(R);
  ASSERT_TRUE(r.proved) << r.message;
  EXPECT_EQ(r.justifications.size(), R.program_rules().size());
  EXPECT_TRUE(lpo_replay(R, r));
}

TEST(Lpo, ProvesLen) {
  trs::Sttrs R = system_of("len.hyrql", "len");
  LpoResult r = lpo_terminates(R);
  ASSERT_TRUE(r.proved) << r.message;
  EXPECT_TRUE(lpo_replay(R, r));
}

TEST(Lpo, RejectsSelfLoop) {
  trs::Sttrs R = trs::parse_trs("f(x) -> f(x);\n");
  LpoResult r = lpo_terminates(R);
  EXPECT_FALSE(r.proved);
  EXPECT_FALSE(r.failed_rule.empty());
}

TEST(Lpo, NeedsTheRightPrecedence) {
  trs::Sttrs R = trs::parse_trs("f(x) -> g(x);\ng(x) -> S(x);\n");
  EXPECT_TRUE(lpo_terminates(R, Precedence::parse("f>g")).proved);
  EXPECT_FALSE(lpo_terminates(R, Precedence::parse("g>f")).proved);
  EXPECT_TRUE(lpo_terminates(R).proved);
}

TEST(Lpo, PrecedenceIsTransitiveAndAcyclic) {
  Precedence p = Precedence::parse("a>b>c");
  EXPECT_TRUE(p.greater("a", "c"));
  EXPECT_FALSE(p.greater("c", "a"));
  EXPECT_THROW(Precedence::parse("a>b, b>a"), AnalysisError);
}

TEST(Lpo, SubtermProperty) {
  FTerm x{true, "x", {}};
  FTerm fx{false, "f", {x}};
  EXPECT_TRUE(lpo_greater(fx, x, Precedence{}, {"f"}));
  EXPECT_FALSE(lpo_greater(x, fx, Precedence{}, {"f"}));
}

TEST(Qi, LenExactAssignmentVerified) {
  trs::Sttrs R = system_of("len.hyrql", "len");
  QiResult r = qi_verify(R, parse_interp(kLenInterp));
  EXPECT_EQ(r.status, QiStatus::Verified) << r.message;
}

TEST(Qi, PerturbedAssignmentRefuted) {
  trs::Sttrs R = system_of("len.hyrql", "len");
  std::string bad = kLenInterp;
  bad.replace(bad.find(R"("S":{"constant":1)"), 16, R"("S":{"constant":2)");
  QiResult r = qi_verify(R, parse_interp(bad));
  EXPECT_EQ(r.status, QiStatus::CounterRule);
  EXPECT_FALSE(r.failed_rule.empty());
  EXPECT_FALSE(r.witness.empty());
}

TEST(Qi, MalformedInterpretations) {
  EXPECT_THROW(parse_interp(R"({"S":{"constant":-1}})"), QiMalformed);
  EXPECT_THROW(parse_interp(R"({"S":{"constant":0.5}})"), QiMalformed);
  EXPECT_THROW(parse_interp(R"({"S":{"weight":1}})"), QiMalformed);
  EXPECT_THROW(parse_interp("not json"), QiMalformed);
  QuasiInterp q = parse_interp(R"({"S":{"constant":"3/2"}})");
  EXPECT_EQ(q.symbols.at("S").constant, mpq_class(3, 2));
}

TEST(Qi, MissingSymbolIsMalformed) {
  trs::Sttrs R = system_of("len.hyrql", "len");
  QiResult r = qi_verify(R, parse_interp(R"({"len":{"coefficients":[1]}})"));
  EXPECT_EQ(r.status, QiStatus::Malformed);
}

TEST(Qi, PolynomialEvaluation) {
  Polynomial p;
  p[{{"x", 2}}] = 3;
  p[{}] = 1;
  EXPECT_EQ(poly_eval(p, {{"x", 2}}), mpq_class(13));
}

TEST(Compare, LenValuesAgree) {
  SourceFile src = fixtures::load("len.hyrql");
  CompareReport r = compare_runtime(src.find("len")->term, {parse_term("[0b, 1b, 1b]", src.registry)}, src.registry);
  EXPECT_TRUE(r.ok()) << r.message;
  EXPECT_EQ(r.sttrs_value, "3");
}

TEST(Compare, AckermannTwoThreeIsNine) {
  SourceFile src = fixtures::load("ackermann.hyrql");
  CompareReport r = compare_runtime(src.find("ack")->term, {mk_nat(2), mk_nat(3)}, src.registry);
  EXPECT_TRUE(r.ok()) << r.message;
  EXPECT_EQ(r.sttrs_value, "9");
  EXPECT_LE(r.k_hyrql, r.k_sttrs * r.size);
}
