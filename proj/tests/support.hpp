#ifndef HYRQL_TESTS_SUPPORT_HPP
#define HYRQL_TESTS_SUPPORT_HPP

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hyrql/amplitude.hpp"
#include "hyrql/ast.hpp"
#include "hyrql/parser.hpp"

namespace hyrql::fixtures {

inline std::string corpus_path(const std::string& file) { return std::string(HYRQL_CORPUS_DIR) + "/" + file; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline SourceFile load(const std::string& file) { return parse(slurp(corpus_path(file))); }

// Small rationals keep GMP arithmetic fast while still exercising normalisation.
inline mpq_class small_rational(std::mt19937_64& rng, int span = 6) {
  std::uniform_int_distribution<int> num(-span, span), den(1, span);
  mpq_class q(num(rng), den(rng));
  q.canonicalize();
  return q;
}

inline Amplitude random_amplitude(std::mt19937_64& rng, int span = 6) {
  return Amplitude(small_rational(rng, span), small_rational(rng, span), small_rational(rng, span),
                   small_rational(rng, span));
}

inline Amplitude nonzero_amplitude(std::mt19937_64& rng) {
  for (;;) {
    Amplitude a = random_amplitude(rng);
    if (!a.is_zero()) return a;
  }
}

inline TermPtr plus() { return mk_sum({{Amplitude::inv_sqrt2(), mk_ket(0)}, {Amplitude::inv_sqrt2(), mk_ket(1)}}); }
inline TermPtr minus() {
  return mk_sum({{Amplitude::inv_sqrt2(), mk_ket(0)}, {-Amplitude::inv_sqrt2(), mk_ket(1)}});
}

// Random closed pure value of a small family of basic types.
inline TermPtr random_pure_value(std::mt19937_64& rng, int depth = 3) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 5 : 2);
  switch (pick(rng)) {
    case 0: return mk_ket(0);
    case 1: return mk_ket(1);
    case 2: return mk_nat(static_cast<unsigned>(rng() % 4));
    case 3: return mk_pair(random_pure_value(rng, depth - 1), random_pure_value(rng, depth - 1));
    case 4: {
      std::vector<TermPtr> xs(rng() % 3);
      for (auto& x : xs) x = random_pure_value(rng, depth - 1);
      return mk_list(xs);
    }
    default: return mk_cons(rng() % 2 ? "1b" : "0b");
  }
}

} // namespace hyrql::fixtures

#endif
