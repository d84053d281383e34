#ifndef HYRQL_EVAL_HPP
#define HYRQL_EVAL_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hyrql/ast.hpp"

namespace hyrql {

enum class Rule { Qcase0, Qcase1, Match, Lbd, Fix, Unit, Can, Shape0, Shape1, ShapeC, ShapeS };

std::string rule_name(Rule r);

enum class StepStatus { Stepped, AtValue, Stuck };

struct StepResult {
  StepStatus status = StepStatus::Stuck;
  TermPtr term;       // the reduct when Stepped
  Rule rule = Rule::Can;
};

class Evaluator {
public:
  explicit Evaluator(const Registry& reg) : reg_(reg) {}

  // When set, (Can) steps a random nonempty subset of the reducible components
  // instead of all of them. Used to explore alternative interleavings.
  void set_perturbation(std::mt19937_64* rng) { rng_ = rng; }

  StepResult step(const TermPtr& t) const;

private:
  StepResult step_pure(const TermPtr& t) const;
  StepResult step_shape_value(const TermPtr& v) const;

  const Registry& reg_;
  std::mt19937_64* rng_ = nullptr;
};

enum class ReduceStatus { Value, Stuck, FuelExhausted };

std::string status_name(ReduceStatus s);

struct TraceEntry {
  std::size_t step = 0;
  Rule rule = Rule::Can;
  std::string term;
};

struct ReduceResult {
  ReduceStatus status = ReduceStatus::Stuck;
  std::size_t steps = 0;
  TermPtr term;  // canonical term of the last reached term
  std::vector<TraceEntry> trace;
};

struct ReduceOptions {
  std::size_t fuel = 10000;
  bool trace = false;
  std::mt19937_64* perturb = nullptr;
  // Called with every intermediate term, including the start.
  std::function<void(const TermPtr&)> observer;
};

ReduceResult reduce(const Registry& reg, const TermPtr& t, const ReduceOptions& opts);
ReduceResult reduce(const Registry& reg, const TermPtr& t, std::size_t fuel);

// Sum over i, j of alpha_i conj(beta_j) [v_i = w_j]; nullopt when either side
// does not reach a value within fuel.
std::optional<Amplitude> inner_product(const Registry& reg, const TermPtr& s, const TermPtr& t, std::size_t fuel);

} // namespace hyrql

#endif
