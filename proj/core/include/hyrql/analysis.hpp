#ifndef HYRQL_ANALYSIS_HPP
#define HYRQL_ANALYSIS_HPP

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hyrql/ast.hpp"
#include "hyrql/eval.hpp"
#include "hyrql/sttrs.hpp"

namespace hyrql::analysis {

// ---------------------------------------------------------------- first-order view

// Variable-headed applications become `@`(x, args); superpositions become `+`(items).
struct FTerm {
  bool var = false;
  std::string name;
  std::vector<FTerm> args;

  bool operator==(const FTerm& o) const { return var == o.var && name == o.name && args == o.args; }
};

inline const char* const kAt = "@";
inline const char* const kPlus = "+";

FTerm first_order(const trs::STermPtr& t);
std::string fterm_str(const FTerm& t);

// ---------------------------------------------------------------- LPO

struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Strict order on defined symbols; constructors, `@` and `+` sit below all of them.
class Precedence {
public:
  Precedence() = default;
  static Precedence from_order(const std::vector<std::string>& order);
  // "f>g>h, a>b"; throws AnalysisError on cycles or bad syntax.
  static Precedence parse(const std::string& text);

  void add(const std::string& f, const std::string& g);  // f > g, closed transitively
  bool greater(const std::string& f, const std::string& g) const;
  std::string str() const;

private:
  std::map<std::string, std::set<std::string>> above_;  // f -> everything below f
};

struct LpoResult {
  bool proved = false;
  Precedence precedence;
  std::vector<std::string> justifications;  // one per rule when proved
  std::string failed_rule;
  std::string message;
};

// Defined symbols are the rule heads of R; `defined` decides how symbols compare with constructors.
bool lpo_greater(const FTerm& s, const FTerm& t, const Precedence& p, const std::set<std::string>& defined);

// With no precedence, total orders over the defined symbols (at most 8) are searched.
LpoResult lpo_terminates(const trs::Sttrs& R, const std::optional<Precedence>& prec = std::nullopt);
// Re-checks every rule under the recorded precedence.
bool lpo_replay(const trs::Sttrs& R, const LpoResult& proof);

// ---------------------------------------------------------------- quasi-interpretations

// Polynomials over named variables with rational coefficients.
using Monomial = std::map<std::string, unsigned>;
using Polynomial = std::map<Monomial, mpq_class>;

std::string poly_str(const Polynomial& p);
mpq_class poly_eval(const Polynomial& p, const std::map<std::string, mpq_class>& point);

struct MonomialTerm {
  mpq_class coeff;
  std::vector<unsigned> powers;
};

// constant + sum_i coefficients[i]*x_i + sum over monomials.
struct Assignment {
  mpq_class constant;
  std::vector<mpq_class> coefficients;
  std::vector<MonomialTerm> monomials;
};

struct QuasiInterp {
  std::map<std::string, Assignment> symbols;
};

struct QiMalformed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

QuasiInterp parse_interp(const std::string& json_text);

enum class QiStatus { Verified, NotRefuted, CounterRule, Malformed };
std::string qi_status_name(QiStatus s);

struct QiRuleReport {
  std::string rule;
  std::string lhs;
  std::string rhs;
  bool coefficientwise = false;  // every coefficient of lhs - rhs is nonnegative
  std::optional<std::map<std::string, mpq_class>> witness;
};

struct QiResult {
  QiStatus status = QiStatus::Malformed;
  std::string message;
  std::vector<QiRuleReport> rules;
  std::string failed_rule;
  std::map<std::string, mpq_class> witness;
};

struct QiOptions {
  std::size_t samples = 10000;
  unsigned max_value = 20;
  std::uint64_t seed = 0x5eed;
};

// Interpretation of a first-order term under q; throws QiMalformed for missing or ill-shaped symbols.
Polynomial interpret_poly(const FTerm& t, const QuasiInterp& q, const trs::Sttrs& R);
QiResult qi_verify(const trs::Sttrs& R, const QuasiInterp& q, const QiOptions& opts = {});

// ---------------------------------------------------------------- step counts

struct CompareReport {
  std::size_t k_sttrs = 0;
  std::size_t k_hyrql = 0;  // steps of the admissible term applied to the arguments
  std::size_t k_source = 0;  // steps of the original term applied to the arguments
  std::size_t size = 0;      // size of the admissible term
  trs::RewriteStatus sttrs_status = trs::RewriteStatus::Stuck;
  ReduceStatus hyrql_status = ReduceStatus::Stuck;
  bool values_agree = false;
  bool bound_ok = false;
  std::string sttrs_value;
  std::string hyrql_value;
  std::string message;

  bool ok() const { return values_agree && bound_ok; }
};

CompareReport compare_runtime(const TermPtr& source, const std::vector<TermPtr>& args, const Registry& reg,
                              std::size_t fuel = 10000);

} // namespace hyrql::analysis

#endif
