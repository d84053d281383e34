#include <gtest/gtest.h>

#include "hyrql/eval.hpp"
#include "hyrql/typecheck.hpp"
#include "support.hpp"

using namespace hyrql;

namespace {

constexpr int kCases = 1000;

struct Corpus {
  SourceFile had = fixtures::load("hadamard.hyrql");
  SourceFile qs = fixtures::load("qs.hyrql");
  SourceFile len = fixtures::load("len.hyrql");
  SourceFile keygen = fixtures::load("keygen.hyrql");
  SourceFile ack = fixtures::load("ackermann.hyrql");
  SourceFile map = fixtures::load("map.hyrql");
};

const Corpus& corpus() {
  static const Corpus c;
  return c;
}

TermPtr random_state(std::mt19937_64& rng) {
  switch (rng() % 4) {
    case 0: return mk_ket(0);
    case 1: return mk_ket(1);
    case 2: return fixtures::plus();
    default: return fixtures::minus();
  }
}

TermPtr random_bit(std::mt19937_64& rng) { return mk_cons(rng() % 2 ? "1b" : "0b"); }

struct Judgment {
  const Registry* reg;
  TermPtr term;
  TypePtr type;
};

// Closed well-typed corpus applications together with their result type.
Judgment random_program(std::mt19937_64& rng) {
  const Corpus& c = corpus();
  TypePtr q = qbit_type();
  switch (rng() % 7) {
    case 0: return {&c.had.registry, mk_app(c.had.find("Had")->term, random_state(rng)), q};
    case 1: return {&c.qs.registry, mk_app(c.qs.find("Not")->term, random_state(rng)), q};
    case 2:
      return {&c.qs.registry,
              mk_apps(c.qs.find("QS")->term,
                      {c.qs.find("Had")->term, c.qs.find("Not")->term, mk_pair(random_state(rng), random_state(rng))}),
              tensor_type(q, q)};
    case 3: {
      std::vector<TermPtr> xs(rng() % 4);
      for (auto& x : xs) x = random_state(rng);
      return {&c.map.registry, mk_apps(c.map.find("map")->term, {c.map.find("not")->term, mk_list(xs)}), list_type(q)};
    }
    case 4: {
      std::vector<TermPtr> xs(rng() % 6);
      for (auto& x : xs) x = random_bit(rng);
      return {&c.len.registry, mk_app(c.len.find("len")->term, mk_list(xs)), nat_type()};
    }
    case 5: {
      std::vector<TermPtr> xs(rng() % 3);
      for (auto& x : xs) x = mk_pair(random_bit(rng), random_bit(rng));
      return {&c.keygen.registry, mk_app(c.keygen.find("keygen")->term, mk_list(xs)), list_type(q)};
    }
    default:
      return {&c.ack.registry, mk_apps(c.ack.find("ack")->term, {mk_nat(rng() % 2), mk_nat(rng() % 3)}), nat_type()};
  }
}

TypePtr random_classical_type(std::mt19937_64& rng) {
  switch (rng() % 5) {
    case 0: return bit_type();
    case 1: return nat_type();
    case 2: return list_type(bit_type());
    case 3: return tensor_type(nat_type(), bit_type());
    default: return class_arrow(nat_type(), nat_type());
  }
}

} // namespace

TEST(TypingProps, SubjectReductionAlongTraces) {
  std::mt19937_64 rng(31);
  std::size_t checked = 0;
  for (int n = 0; n < kCases; ++n) {
    Judgment j = random_program(rng);
    TypeChecker tc(*j.reg);
    CheckResult start = tc.check(j.term, j.type);
    ASSERT_TRUE(start.ok()) << pretty(j.term) << ": " << start.message;
    std::vector<TermPtr> trace;
    ReduceOptions o;
    o.fuel = 5000;
    o.observer = [&](const TermPtr& t) { trace.push_back(t); };
    ReduceResult r = reduce(*j.reg, j.term, o);
    ASSERT_EQ(r.status, ReduceStatus::Value);
    for (const TermPtr& t : trace) {
      CheckResult cr = tc.check(t, j.type);
      ASSERT_TRUE(cr.ok()) << "from " << pretty(j.term) << "\nreached " << pretty(t) << "\n" << cr.rule << ": "
                           << cr.message;
      ++checked;
    }
  }
  EXPECT_GE(checked, static_cast<std::size_t>(kCases));
}

TEST(TypingProps, WeakeningKeepsJudgments) {
  std::mt19937_64 rng(32);
  const Corpus& c = corpus();
  std::vector<std::pair<const SourceFile*, std::string>> defs = {
      {&c.had, "Had"}, {&c.qs, "QS"}, {&c.qs, "Not"}, {&c.len, "len"}, {&c.keygen, "keygen"},
      {&c.ack, "ack"}, {&c.map, "map"}};
  for (int n = 0; n < kCases; ++n) {
    Judgment j;
    if (rng() % 2) {
      j = random_program(rng);
    } else {
      auto [src, name] = defs[rng() % defs.size()];
      j = {&src->registry, src->find(name)->term, src->find(name)->type};
    }
    TypeChecker tc(*j.reg);
    ASSERT_TRUE(tc.check(j.term, j.type).ok()) << pretty(j.term);
    Context wider;
    for (std::size_t i = 0, k = 1 + rng() % 3; i < k; ++i)
      wider.gamma["w" + std::to_string(i)] = random_classical_type(rng);
    CheckResult r = tc.check(j.term, j.type, wider);
    ASSERT_TRUE(r.ok()) << pretty(j.term) << ": " << r.message;
  }
}
