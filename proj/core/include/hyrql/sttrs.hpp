#ifndef HYRQL_STTRS_HPP
#define HYRQL_STTRS_HPP

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hyrql/amplitude.hpp"
#include "hyrql/ast.hpp"

namespace hyrql::trs {

enum class SKind { Var, Fn, Con, Apply, Superpose };

struct STerm;
using STermPtr = std::shared_ptr<const STerm>;

struct SItem {
  Amplitude amp;
  STermPtr term;
};

// Applications are kept as flat spines: the head is never itself an application.
struct STerm {
  SKind kind = SKind::Var;
  std::string name;             // Var, Fn, Con
  STermPtr head;                // Apply
  std::vector<STermPtr> args;   // Apply
  std::vector<SItem> items;     // Superpose
};

inline const char* const kUnit = "unit";
inline const char* const kShape = "shape";
inline const char* const kMain = "main";

STermPtr s_var(const std::string& name);
STermPtr s_fn(const std::string& name);
STermPtr s_con(const std::string& name);
STermPtr s_con(const std::string& name, std::vector<STermPtr> args);
// Appends to an existing spine; returns head unchanged when args is empty.
STermPtr s_apply(const STermPtr& head, std::vector<STermPtr> args);
STermPtr s_super(std::vector<SItem> items);
STermPtr s_nat(unsigned n);

bool is_ket(const std::string& con);
std::string print(const STermPtr& t);
bool s_equal(const STermPtr& a, const STermPtr& b);
std::vector<std::string> s_vars(const STermPtr& t);  // in order of first occurrence
STermPtr s_subst(const STermPtr& t, const std::map<std::string, STermPtr>& sigma);
// Symbol-level substitution of function symbols by terms.
STermPtr s_subst_fn(const STermPtr& t, const std::map<std::string, STermPtr>& sigma);
bool mentions_fn(const STermPtr& t, const std::string& f);
std::size_t s_size(const STermPtr& t);

struct Rule {
  STermPtr lhs;
  STermPtr rhs;
  bool library = false;  // unit/shape rules installed by translation
};

struct Sttrs {
  Registry reg;
  std::vector<Rule> rules;
  std::map<std::string, TypePtr> declared;  // optional symbol signatures

  std::vector<std::string> symbols() const;  // defined symbols in first-definition order
  std::optional<std::size_t> arity(const std::string& f) const;
  bool is_constructor(const std::string& name) const;
  std::vector<Rule> program_rules() const;
  // Program rules plus the library rules for symbols they mention.
  std::vector<Rule> used_rules() const;
};

std::string rule_str(const Rule& r);

// Simple types: data types, Qbit, arrows (ClassArrow read as ->), Param for unresolved variables.
std::string stype_str(const TypePtr& t, std::size_t arity = 0);

struct WellFormedResult {
  bool ok = false;
  std::string violation;
  std::map<std::string, TypePtr> types;  // inferred symbol types
};

WellFormedResult well_formed(const Sttrs& R);

// Splits a term into pure components under the equivalence (linearity of every head except shape/unit).
std::vector<SItem> decompose(const STermPtr& t);
STermPtr normalize(const STermPtr& t);
bool is_value(const Sttrs& R, const STermPtr& t);

enum class RewriteStatus { Value, Stuck, FuelExhausted };
std::string rewrite_status_name(RewriteStatus s);

struct StepOutcome {
  enum Kind { Stepped, AtValue, Stuck } kind = Stuck;
  STermPtr term;
  std::string diagnostic;
};

class Rewriter {
public:
  explicit Rewriter(const Sttrs& R);
  StepOutcome step(const STermPtr& t) const;
  const Sttrs& system() const { return R_; }

private:
  StepOutcome step_pure(const STermPtr& t) const;
  StepOutcome step_super(const STermPtr& t) const;
  bool value(const STermPtr& t) const;
  std::optional<STermPtr> fire(const std::string& f, const std::vector<STermPtr>& args, std::size_t& used) const;

  const Sttrs& R_;
  std::map<std::string, std::vector<std::size_t>> by_symbol_;
  std::map<std::string, std::size_t> arity_;
};

struct RewriteResult {
  std::size_t steps = 0;
  STermPtr term;
  RewriteStatus status = RewriteStatus::Stuck;
  std::string diagnostic;
  std::vector<STermPtr> trace;
};

RewriteResult rewrite_star(const Sttrs& R, const STermPtr& t, std::size_t fuel, bool trace = false);

struct TrsError : std::runtime_error {
  TrsError(SourceLoc l, const std::string& msg)
      : std::runtime_error(std::to_string(l.line) + ":" + std::to_string(l.col) + ": " + msg), loc(l) {}
  SourceLoc loc;
};

// `.trs` text: `con` declarations for user data types, `sym` signatures, then rules.
std::string to_trs(const Sttrs& R, bool prune_library = true);
Sttrs parse_trs(const std::string& text);
// Parses a single term against the symbols and constructors of R.
STermPtr parse_sterm(const std::string& text, const Sttrs& R);

} // namespace hyrql::trs

#endif
