#include <gtest/gtest.h>

#include "hyrql/canonical.hpp"
#include "hyrql/eval.hpp"
#include "hyrql/translate.hpp"
#include "support.hpp"

using namespace hyrql;

namespace {
std::vector<std::string> program_rules(const std::string& file, const std::string& def) {
  SourceFile src = fixtures::load(file);
  Translation t = translate_entry(src.find(def)->term, src.registry);
  EXPECT_TRUE(trs::well_formed(t.system).ok) << file;
  std::vector<std::string> out;
  for (const auto& r : t.system.program_rules()) out.push_back(trs::rule_str(r));
  return out;
}
} // namespace

TEST(Translate, HadamardGolden) {
  std::vector<std::string> want = {"Had(|0>) -> (1/2*sqrt2)*|0> + (1/2*sqrt2)*|1>",
                                   "Had(|1>) -> (1/2*sqrt2)*|0> + (-1/2*sqrt2)*|1>"};
  EXPECT_EQ(program_rules("hadamard.hyrql", "Had"), want);
}

TEST(Translate, AckermannGolden) {
  std::vector<std::string> want = {"ack(0, n) -> S(n)", "ack(S(m'), 0) -> ack(m', 1)",
                                   "ack(S(m'), S(n')) -> ack(m', ack(S(m'), n'))"};
  EXPECT_EQ(program_rules("ackermann.hyrql", "ack"), want);
}

TEST(Translate, MapGolden) {
  std::vector<std::string> want = {"map(phi, []) -> []", "map(phi, h :: t) -> phi(h) :: map(phi, t)"};
  EXPECT_EQ(program_rules("map.hyrql", "map"), want);
}

TEST(Translate, LenGolden) {
  std::vector<std::string> want = {"len([]) -> 0", "len(h :: t) -> S(len(t))"};
  EXPECT_EQ(program_rules("len.hyrql", "len"), want);
}

TEST(Translate, CorpusEntriesAreWellFormed) {
  for (const char* f : {"hadamard.hyrql", "qs.hyrql", "len.hyrql", "keygen.hyrql", "ackermann.hyrql", "map.hyrql"}) {
    SourceFile src = fixtures::load(f);
    for (const Definition& d : src.defs) {
      Translation t = translate_entry(d.term, src.registry);
      trs::WellFormedResult wf = trs::well_formed(t.system);
      EXPECT_TRUE(wf.ok) << f << " " << d.name << ": " << wf.violation;
      EXPECT_TRUE(is_admissible(t.admissible)) << f << " " << d.name;
    }
  }
}

TEST(Translate, MatchOnApplicationIsLifted) {
  Registry reg;
  TermPtr t = parse_term("\\f. \\x. match f x {0 -> 0, S n -> n}", reg);
  std::string why;
  EXPECT_FALSE(is_admissible(t, &why));
  TermPtr adm = to_admissible(t);
  EXPECT_TRUE(is_admissible(adm, &why)) << why;
  // Same behaviour on a sample input.
  TermPtr succ = parse_term("\\y. S y", reg);
  ReduceResult a = reduce(reg, mk_apps(t, {succ, mk_nat(2)}), 1000);
  ReduceResult b = reduce(reg, mk_apps(adm, {succ, mk_nat(2)}), 1000);
  ASSERT_EQ(a.status, ReduceStatus::Value);
  ASSERT_EQ(b.status, ReduceStatus::Value);
  EXPECT_TRUE(equiv(a.term, b.term));
  EXPECT_TRUE(alpha_equal(a.term, mk_nat(2)));
}

TEST(Translate, InterpretUsesSymbolsAndLinearity) {
  SourceFile src = fixtures::load("hadamard.hyrql");
  Translator tr(src.registry);
  TermPtr had = to_admissible(src.find("Had")->term);
  tr.translate_admissible(had);
  trs::STermPtr m = tr.interpret(mk_app(had, mk_ket(0)));
  EXPECT_EQ(trs::print(m), "Had(|0>)");
  trs::STermPtr sum = tr.interpret(fixtures::plus());
  EXPECT_EQ(trs::print(sum), "(1/2*sqrt2)*|0> + (1/2*sqrt2)*|1>");
}

TEST(Translate, RepeatedSubtermSharesSymbol) {
  SourceFile src = fixtures::load("keygen.hyrql");
  Translator tr(src.registry);
  tr.translate_admissible(to_admissible(src.find("Had")->term));
  std::size_t before = tr.system().rules.size();
  tr.translate_admissible(to_admissible(src.find("Had")->term));
  EXPECT_EQ(tr.system().rules.size(), before);
}

TEST(Translate, MainRewritesLikeSource) {
  SourceFile src = fixtures::load("map.hyrql");
  Translation t = translate_entry(src.entry()->term, src.registry);
  trs::RewriteResult rr = trs::rewrite_star(t.system, t.root, 1000);
  ASSERT_EQ(rr.status, trs::RewriteStatus::Value);
  ReduceResult r = reduce(src.registry, src.entry()->term, 1000);
  ASSERT_EQ(r.status, ReduceStatus::Value);
  Translator tr(src.registry);
  EXPECT_TRUE(trs::s_equal(trs::normalize(tr.interpret(r.term)), rr.term)) << trs::print(rr.term);
}
