#include <gtest/gtest.h>

#include "hyrql/parser.hpp"
#include "hyrql/sttrs.hpp"
#include "support.hpp"

using namespace hyrql;

namespace {

constexpr int kCases = 1000;

// Syntactically valid, not necessarily well-typed, terms over the built-in constructors.
class TermGen {
public:
  explicit TermGen(std::mt19937_64& rng) : rng_(rng) {}

  TermPtr term(int depth, std::vector<std::string>& scope) {
    int choices = depth <= 0 ? 4 : 13;
    switch (rng_() % choices) {
      case 0: return scope.empty() ? mk_ket(0) : mk_var(scope[rng_() % scope.size()]);
      case 1: return mk_ket(static_cast<int>(rng_() % 2));
      case 2: return mk_nat(static_cast<unsigned>(rng_() % 3));
      case 3: return mk_cons(rng_() % 2 ? "1b" : "0b");
      case 4: return mk_pair(term(depth - 1, scope), term(depth - 1, scope));
      case 5: return mk_cons("::", {term(depth - 1, scope), mk_list({})});
      case 6: return mk_qcase(term(depth - 1, scope), term(depth - 1, scope), term(depth - 1, scope));
      case 7: {
        std::string x = fresh();
        scope.push_back(x);
        TermPtr body = term(depth - 1, scope);
        scope.pop_back();
        return mk_lambda(x, body);
      }
      case 8: return mk_app(term(depth - 1, scope), term(depth - 1, scope));
      case 9: {
        std::vector<SumItem> items;
        for (std::size_t i = 0, k = 1 + rng_() % 3; i < k; ++i)
          items.push_back({fixtures::nonzero_amplitude(rng_), term(depth - 1, scope)});
        return mk_sum(items);
      }
      case 10: return mk_shape(term(depth - 1, scope));
      case 11: {
        std::string h = fresh(), t = fresh();
        TermPtr nil = term(depth - 1, scope);
        scope.push_back(h);
        scope.push_back(t);
        TermPtr cons = term(depth - 1, scope);
        scope.resize(scope.size() - 2);
        return mk_match(term(depth - 1, scope), {{"[]", {}, nil}, {"::", {h, t}, cons}});
      }
      default: {
        std::string f = fresh(), x = fresh();
        scope.push_back(f);
        scope.push_back(x);
        TermPtr body = term(depth - 1, scope);
        scope.resize(scope.size() - 2);
        return mk_letrec(f, x, body);
      }
    }
  }

private:
  std::string fresh() { return "v" + std::to_string(counter_++); }

  std::mt19937_64& rng_;
  int counter_ = 0;
};

trs::STermPtr random_sterm(std::mt19937_64& rng, int depth) {
  switch (depth <= 0 ? rng() % 3 : rng() % 7) {
    case 0: return trs::s_var(rng() % 2 ? "x" : "y");
    case 1: return trs::s_con(rng() % 2 ? "|1>" : "|0>");
    case 2: return trs::s_nat(static_cast<unsigned>(rng() % 3));
    case 3: return trs::s_apply(trs::s_fn("f"), {random_sterm(rng, depth - 1), random_sterm(rng, depth - 1)});
    case 4: return trs::s_con("::", {random_sterm(rng, depth - 1), trs::s_con("[]")});
    case 5: return trs::s_con(",", {random_sterm(rng, depth - 1), random_sterm(rng, depth - 1)});
    default: {
      std::vector<trs::SItem> items;
      for (std::size_t i = 0, k = 2 + rng() % 2; i < k; ++i)
        items.push_back({fixtures::nonzero_amplitude(rng), random_sterm(rng, depth - 1)});
      return trs::s_super(items);
    }
  }
}

} // namespace

TEST(SyntaxProps, PrettyParseRoundTrip) {
  std::mt19937_64 rng(41);
  Registry reg;
  for (int n = 0; n < kCases; ++n) {
    TermGen gen(rng);
    std::vector<std::string> scope;
    TermPtr t = gen.term(4, scope);
    std::string text = pretty(t);
    TermPtr back;
    ASSERT_NO_THROW(back = parse_term(text, reg)) << text;
    ASSERT_TRUE(alpha_equal(t, back)) << text << "\n" << pretty(back);
  }
}

TEST(SyntaxProps, SttrsPrintParseRoundTrip) {
  std::mt19937_64 rng(42);
  trs::Sttrs R = trs::parse_trs("f(x, y) -> x;\n");
  for (int n = 0; n < kCases; ++n) {
    trs::STermPtr t = random_sterm(rng, 4);
    std::string text = trs::print(t);
    trs::STermPtr back;
    ASSERT_NO_THROW(back = trs::parse_sterm(text, R)) << text;
    ASSERT_TRUE(trs::s_equal(t, back)) << text << "\n" << trs::print(back);
  }
}

TEST(SyntaxProps, AmplitudeStrRoundTrip) {
  std::mt19937_64 rng(43);
  for (int n = 0; n < kCases; ++n) {
    Amplitude a = fixtures::random_amplitude(rng, 9);
    ASSERT_EQ(parse_amplitude(a.str()), a) << a.str();
  }
}
