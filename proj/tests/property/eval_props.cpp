#include <gtest/gtest.h>

#include "hyrql/canonical.hpp"
#include "hyrql/eval.hpp"
#include "support.hpp"

using namespace hyrql;

namespace {

constexpr int kCases = 1000;

// Unit-norm single-qubit states: a global phase times one of six axis states.
TermPtr random_qubit_state(std::mt19937_64& rng) {
  Amplitude h = Amplitude::inv_sqrt2();
  Amplitude phase = Amplitude::zeta(static_cast<int>(rng() % 8));
  Amplitude a, b;
  switch (rng() % 6) {
    case 0: a = 1; b = 0; break;
    case 1: a = 0; b = 1; break;
    case 2: a = h; b = h; break;
    case 3: a = h; b = -h; break;
    case 4: a = h; b = h * Amplitude::i(); break;
    default: a = h; b = -(h * Amplitude::i()); break;
  }
  std::vector<SumItem> items;
  if (!a.is_zero()) items.push_back({phase * a, mk_ket(0)});
  if (!b.is_zero()) items.push_back({phase * b, mk_ket(1)});
  return mk_sum(items);
}

TermPtr random_qubit_basis(std::mt19937_64& rng) { return mk_ket(static_cast<int>(rng() % 2)); }

struct Programs {
  SourceFile qs = fixtures::load("qs.hyrql");
  SourceFile map = fixtures::load("map.hyrql");
  SourceFile keygen = fixtures::load("keygen.hyrql");
};

const Programs& programs() {
  static const Programs p;
  return p;
}

// A closed linear function on a finite input type, and a generator of basis inputs.
struct LinearCase {
  const Registry* reg;
  TermPtr fn;
  std::function<TermPtr(std::mt19937_64&)> basis;
};

LinearCase random_linear_case(std::mt19937_64& rng) {
  const Programs& p = programs();
  const SourceFile& q = p.qs;
  auto pair_basis = [](std::mt19937_64& r) { return mk_pair(random_qubit_basis(r), random_qubit_basis(r)); };
  switch (rng() % 5) {
    case 0: return {&q.registry, q.find("Had")->term, random_qubit_basis};
    case 1: return {&q.registry, q.find("Not")->term, random_qubit_basis};
    case 2: return {&q.registry, mk_apps(q.find("QS")->term, {q.find("Had")->term, q.find("Not")->term}), pair_basis};
    case 3: return {&q.registry, mk_apps(q.find("QS")->term, {q.find("Not")->term, q.find("Had")->term}), pair_basis};
    default: {
      std::size_t len = rng() % 4;
      auto list_basis = [len](std::mt19937_64& r) {
        std::vector<TermPtr> xs(len);
        for (auto& x : xs) x = random_qubit_basis(r);
        return mk_list(xs);
      };
      return {&p.map.registry, mk_app(p.map.find("map")->term, p.map.find("not")->term), list_basis};
    }
  }
}

TermPtr value_of(const Registry& reg, const TermPtr& t, std::mt19937_64* perturb = nullptr) {
  ReduceOptions o;
  o.fuel = 10000;
  o.perturb = perturb;
  ReduceResult r = reduce(reg, t, o);
  EXPECT_EQ(r.status, ReduceStatus::Value) << pretty(t);
  return r.term;
}

} // namespace

TEST(EvalProps, ConfluentUnderPerturbation) {
  std::mt19937_64 rng(21), coin(22);
  for (int n = 0; n < kCases; ++n) {
    // Several independent redexes in superposition so that (Can) has choices to make.
    std::vector<SumItem> items;
    std::size_t k = 2 + rng() % 3;
    for (std::size_t i = 0; i < k; ++i) {
      LinearCase c = random_linear_case(rng);
      items.push_back({fixtures::nonzero_amplitude(rng), mk_app(c.fn, c.basis(rng))});
    }
    TermPtr t = mk_sum(items);
    // Corpus files here declare no types, so any of their registries will do.
    const Registry& reg = programs().qs.registry;
    TermPtr plain = value_of(reg, t);
    TermPtr shuffled = value_of(reg, t, &coin);
    ASSERT_TRUE(equiv(plain, shuffled)) << pretty(t);
  }
}

TEST(EvalProps, SelfInnerProductIsOne) {
  std::mt19937_64 rng(23);
  const Registry& reg = programs().qs.registry;
  const SourceFile& q = programs().qs;
  for (int n = 0; n < kCases; ++n) {
    // Unit-norm states, possibly pushed through a unitary.
    TermPtr v = random_qubit_state(rng);
    switch (rng() % 3) {
      case 0: v = mk_app(q.find("Had")->term, v); break;
      case 1: v = mk_apps(q.find("QS")->term, {q.find("Had")->term, q.find("Not")->term, mk_pair(v, random_qubit_state(rng))}); break;
      default: break;
    }
    std::optional<Amplitude> ip = inner_product(reg, v, v, 10000);
    ASSERT_TRUE(ip.has_value());
    ASSERT_TRUE(ip->is_one()) << pretty(v) << " : " << ip->str();
    TermPtr p = fixtures::random_pure_value(rng);
    ASSERT_TRUE(inner_product(reg, p, p, 10000)->is_one());
  }
}

TEST(EvalProps, PlusAndMinusOrthogonal) {
  std::mt19937_64 rng(24);
  Registry reg;
  for (int n = 0; n < kCases; ++n) {
    // Same states under a random global phase.
    Amplitude ph = Amplitude::zeta(static_cast<int>(rng() % 8));
    TermPtr p = mk_sum({{ph, fixtures::plus()}}), m = mk_sum({{ph, fixtures::minus()}});
    ASSERT_TRUE(inner_product(reg, p, m, 10)->is_zero());
    ASSERT_TRUE(inner_product(reg, m, p, 10)->is_zero());
  }
}

TEST(EvalProps, LinearFunctionsCommuteWithSuperposition) {
  std::mt19937_64 rng(25);
  for (int n = 0; n < kCases; ++n) {
    LinearCase c = random_linear_case(rng);
    std::vector<SumItem> input, outputs;
    for (std::size_t i = 0, k = 1 + rng() % 3; i < k; ++i) {
      Amplitude a = fixtures::nonzero_amplitude(rng);
      TermPtr v = c.basis(rng);
      input.push_back({a, v});
      outputs.push_back({a, value_of(*c.reg, mk_app(c.fn, v))});
    }
    TermPtr lhs = value_of(*c.reg, mk_app(c.fn, mk_sum(input)));
    ASSERT_TRUE(equiv(lhs, mk_sum(outputs))) << pretty(mk_app(c.fn, mk_sum(input)));
  }
}
