#include <gtest/gtest.h>

#include "hyrql/canonical.hpp"
#include "support.hpp"

using namespace hyrql;

TEST(Canonical, SumCommutes) {
  TermPtr a = mk_sum({{1, mk_ket(0)}, {1, mk_ket(1)}});
  TermPtr b = mk_sum({{1, mk_ket(1)}, {1, mk_ket(0)}});
  EXPECT_TRUE(equiv(a, b));
}

TEST(Canonical, NestedScalarsMultiply) {
  Amplitude h = Amplitude::inv_sqrt2();
  // 1/sqrt2 * (sqrt2 * (1/sqrt2*|0> + 1/sqrt2*|1>)) is |+> again.
  TermPtr inner = mk_sum({{Amplitude::sqrt2(), fixtures::plus()}});
  TermPtr outer = mk_sum({{h, inner}});
  EXPECT_TRUE(equiv(outer, fixtures::plus()));
  EXPECT_FALSE(equiv(outer, fixtures::minus()));
}

TEST(Canonical, DistinctKetsNotEquivalent) { EXPECT_FALSE(equiv(mk_ket(0), mk_ket(1))); }

TEST(Canonical, PureTermIsItsOwnForm) {
  TermPtr p = mk_pair(mk_ket(1), mk_nat(2));
  CanonicalForm cf = canonicalize(p);
  ASSERT_TRUE(cf.is_singleton());
  EXPECT_TRUE(alpha_equal(cf.items[0].term, p));
}

TEST(Canonical, CancellationGivesZero) {
  TermPtr t = mk_sum({{1, mk_ket(0)}, {-1, mk_ket(0)}});
  EXPECT_TRUE(canonicalize(t).is_zero());
}

TEST(Canonical, PlusPlusMinusIsSqrt2Zero) {
  // |+> + |-> = sqrt2 |0>
  TermPtr t = mk_sum({{1, fixtures::plus()}, {1, fixtures::minus()}});
  CanonicalForm cf = canonicalize(t);
  ASSERT_EQ(cf.items.size(), 1u);
  EXPECT_EQ(cf.items[0].amp, Amplitude::sqrt2());
  EXPECT_EQ(cf.items[0].term->tag, Tag::Ket0);
}

TEST(Canonical, QuantityReadsAmplitudes) {
  TermPtr t = mk_sum({{Amplitude::i(), mk_ket(0)}, {2, mk_ket(1)}, {3, mk_ket(0)}});
  EXPECT_EQ(quantity(mk_ket(0), t), Amplitude::i() + Amplitude(3));
  EXPECT_EQ(quantity(mk_ket(1), t), Amplitude(2));
  EXPECT_TRUE(quantity(mk_nat(0), t).is_zero());
}

TEST(Canonical, LinearInsideConstructors) {
  // (|+>, |0>) is 1/sqrt2 (|0>,|0>) + 1/sqrt2 (|1>,|0>).
  TermPtr t = mk_pair(fixtures::plus(), mk_ket(0));
  TermPtr expected = mk_sum({{Amplitude::inv_sqrt2(), mk_pair(mk_ket(0), mk_ket(0))},
                             {Amplitude::inv_sqrt2(), mk_pair(mk_ket(1), mk_ket(0))}});
  EXPECT_TRUE(equiv(t, expected));
}
