#ifndef HYRQL_CANONICAL_HPP
#define HYRQL_CANONICAL_HPP

#include <vector>

#include "hyrql/ast.hpp"

namespace hyrql {

// Superposition of pairwise non-equivalent pure terms with nonzero amplitudes,
// sorted by alpha_compare. An empty item list is the zero term.
struct CanonicalForm {
  std::vector<SumItem> items;

  bool is_zero() const { return items.empty(); }
  bool is_singleton() const { return items.size() == 1 && items[0].amp.is_one(); }
};

CanonicalForm canonicalize(const TermPtr& t);

// Term rendering of a canonical form: the pure term itself for 1*p, a Sum otherwise.
// The zero form is rendered as 0*|0>.
TermPtr to_term(const CanonicalForm& cf);
TermPtr canonical_term(const TermPtr& t);

Amplitude quantity(const TermPtr& p, const TermPtr& t);

bool equiv(const TermPtr& s, const TermPtr& t);
bool form_equal(const CanonicalForm& a, const CanonicalForm& b);

} // namespace hyrql

#endif
