#ifndef HYRQL_TYPECHECK_HPP
#define HYRQL_TYPECHECK_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hyrql/ast.hpp"

namespace hyrql {

enum class Verdict { Yes, No, Unknown };

std::string verdict_name(Verdict v);

struct Budget {
  std::size_t fuel = 1000;               // evaluation steps per reduction inside a query
  std::size_t max_substitutions = 4096;  // context substitutions enumerated per query
  std::size_t probe_depth = 3;           // value depth explored for @orthogonal assumptions
};

struct Derivation {
  std::string rule;
  std::string term;
  std::string type;
  std::vector<Derivation> children;
};

struct PredicateQuery {
  std::string predicate;  // "orthogonal" or "unitary"
  std::string lhs;
  std::string rhs;        // empty for unitary
  Verdict verdict = Verdict::Unknown;
  std::string detail;
  bool assumed = false;   // Yes granted by an @orthogonal annotation
};

struct PredicateResult {
  Verdict verdict = Verdict::Unknown;
  std::string detail;  // reason, or the witness substitution for No
  bool assumed = false;
};

enum class CheckStatus { Ok, TypeError, BudgetExceeded };

std::string check_status_name(CheckStatus s);

struct CheckResult {
  CheckStatus status = CheckStatus::TypeError;
  TypePtr type;
  Derivation derivation;
  std::string rule;     // rule at which checking failed
  std::string message;
  SourceLoc loc;
  std::vector<PredicateQuery> queries;

  bool ok() const { return status == CheckStatus::Ok; }
};

class TypeChecker {
public:
  explicit TypeChecker(const Registry& reg, Budget budget = {});

  // Checks Gamma; Delta |- t : T. Every variable of ctx.delta must be consumed.
  CheckResult check(const TermPtr& t, const TypePtr& type, const Context& ctx = {});
  // Infers a type where the term carries enough annotations.
  CheckResult synthesize(const TermPtr& t, const Context& ctx = {});

  // s and t of basic type kappa, free variables typed by ctx.
  PredicateResult orthogonal(const TermPtr& s, const TermPtr& t, const TypePtr& kappa, const Context& ctx,
                             bool annotated = false);
  // t : Q -o Q' with free variables typed by ctx.
  PredicateResult unitary(const TermPtr& t, const TypePtr& q, const TypePtr& q2, const Context& ctx);

  const Budget& budget() const { return budget_; }

private:
  struct Impl;
  const Registry& reg_;
  Budget budget_;
  std::map<std::string, PredicateResult> ortho_cache_;
  std::map<std::string, PredicateResult> unitary_cache_;
  friend struct Impl;
};

} // namespace hyrql

#endif
