#include <gtest/gtest.h>

#include "hyrql/typecheck.hpp"
#include "support.hpp"

using namespace hyrql;

namespace {
CheckResult check_def(const SourceFile& src, const std::string& name, Budget b = {}) {
  const Definition* d = src.find(name);
  TypeChecker tc(src.registry, b);
  return d->type ? tc.check(d->term, d->type) : tc.synthesize(d->term);
}

const char* const kLen = "letrec f x = match x {[] -> 0, h :: t -> S (f t)}";
} // namespace

TEST(Typecheck, HadamardIsUnitary) {
  SourceFile src = fixtures::load("hadamard.hyrql");
  CheckResult r = check_def(src, "Had");
  ASSERT_TRUE(r.ok()) << r.rule << ": " << r.message;
  EXPECT_EQ(type_str(r.type), "Qbit <-> Qbit");
}

TEST(Typecheck, LenOnClassicalListsHasNoQueries) {
  SourceFile src = fixtures::load("len.hyrql");
  CheckResult r = check_def(src, "len");
  ASSERT_TRUE(r.ok()) << r.message;
  EXPECT_TRUE(r.queries.empty());
}

TEST(Typecheck, LenAcceptedForClassicalElements) {
  Registry reg;
  TypeChecker tc(reg);
  for (const char* ty : {"[bit] => nat", "[nat] => nat", "[bit * nat] => nat"}) {
    CheckResult r = tc.check(parse_term(kLen, reg), parse_type(ty, reg));
    EXPECT_TRUE(r.ok()) << ty << ": " << r.message;
  }
}

TEST(Typecheck, LenRejectedForQubits) {
  Registry reg;
  TypeChecker tc(reg);
  CheckResult r = tc.check(parse_term(kLen, reg), parse_type("[Qbit] => nat", reg));
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.status, CheckStatus::TypeError);
}

TEST(Typecheck, KeygenAccepted) {
  SourceFile src = fixtures::load("keygen.hyrql");
  CheckResult r = check_def(src, "keygen");
  EXPECT_TRUE(r.ok()) << r.rule << ": " << r.message;
}

TEST(Typecheck, QuantumSwitchAccepted) {
  SourceFile src = fixtures::load("qs.hyrql");
  CheckResult r = check_def(src, "QS");
  ASSERT_TRUE(r.ok()) << r.rule << ": " << r.message;
  EXPECT_TRUE(type_equal(r.type, parse_type("(Qbit <-> Qbit) => (Qbit <-> Qbit) => (Qbit * Qbit -o Qbit * Qbit)",
                                            src.registry)));
}

TEST(Typecheck, DivergingSuperpositionNeverAccepted) {
  SourceFile src = fixtures::load("diverging_superposition.hyrql");
  for (std::size_t fuel : {10u, 100u, 1000u}) {
    Budget b;
    b.fuel = fuel;
    CheckResult r = check_def(src, "main", b);
    EXPECT_FALSE(r.ok()) << "fuel " << fuel;
  }
}

TEST(Typecheck, NonUnitaryGateRejected) {
  Registry reg;
  TypeChecker tc(reg);
  // Sends both basis states to |0>: not an isometry.
  TermPtr t = parse_term("unit (\\x. qcase x {0 -> |0>, 1 -> |0>})", reg);
  EXPECT_FALSE(tc.check(t, parse_type("Qbit <-> Qbit", reg)).ok());
}

TEST(Typecheck, LinearVariableUsedTwiceRejected) {
  Registry reg;
  TypeChecker tc(reg);
  TermPtr t = parse_term("\\q. (q, q)", reg);
  EXPECT_FALSE(tc.check(t, parse_type("Qbit -o Qbit * Qbit", reg)).ok());
}

TEST(Typecheck, ClassicalVariableMayBeDuplicated) {
  Registry reg;
  TypeChecker tc(reg);
  TermPtr t = parse_term("\\b. (b, b)", reg);
  EXPECT_TRUE(tc.check(t, parse_type("bit => bit * bit", reg)).ok());
}

TEST(Typecheck, OrthogonalityVerdicts) {
  Registry reg;
  TypeChecker tc(reg);
  EXPECT_EQ(tc.orthogonal(fixtures::plus(), fixtures::minus(), qbit_type(), {}).verdict, Verdict::Yes);
  EXPECT_EQ(tc.orthogonal(mk_ket(0), fixtures::plus(), qbit_type(), {}).verdict, Verdict::No);
  // Finite context: x ranges over the qubit basis.
  Context c;
  c.delta["x"] = qbit_type();
  TermPtr s = mk_pair(mk_ket(0), mk_var("x"));
  TermPtr t = mk_pair(mk_ket(1), mk_var("x"));
  EXPECT_EQ(tc.orthogonal(s, t, tensor_type(qbit_type(), qbit_type()), c).verdict, Verdict::Yes);
}

TEST(Typecheck, InfiniteContextIsUnknownUnlessAnnotated) {
  Registry reg;
  TypeChecker tc(reg);
  Context c;
  c.gamma["n"] = nat_type();
  TermPtr s = mk_pair(mk_var("n"), mk_ket(0));
  TermPtr t = mk_pair(mk_var("n"), mk_ket(1));
  TypePtr k = tensor_type(nat_type(), qbit_type());
  PredicateResult plain = tc.orthogonal(s, t, k, c);
  EXPECT_EQ(plain.verdict, Verdict::Unknown);
  PredicateResult assumed = tc.orthogonal(s, t, k, c, true);
  EXPECT_EQ(assumed.verdict, Verdict::Yes);
  EXPECT_TRUE(assumed.assumed);
}

TEST(Typecheck, UnitaryVerdicts) {
  SourceFile src = fixtures::load("hadamard.hyrql");
  TypeChecker tc(src.registry);
  TermPtr body = src.find("Had")->term->body();
  EXPECT_EQ(tc.unitary(body, qbit_type(), qbit_type(), {}).verdict, Verdict::Yes);
  TermPtr collapse = parse_term("\\x. qcase x {0 -> |0>, 1 -> |0>}", src.registry);
  EXPECT_EQ(tc.unitary(collapse, qbit_type(), qbit_type(), {}).verdict, Verdict::No);
}
