#include "hyrql/eval.hpp"

#include "hyrql/canonical.hpp"
#include "hyrql/parser.hpp"

namespace hyrql {

std::string rule_name(Rule r) {
  switch (r) {
    case Rule::Qcase0: return "Qcase0";
    case Rule::Qcase1: return "Qcase1";
    case Rule::Match: return "Match";
    case Rule::Lbd: return "Lbd";
    case Rule::Fix: return "Fix";
    case Rule::Unit: return "Unit";
    case Rule::Can: return "Can";
    case Rule::Shape0: return "Shape0";
    case Rule::Shape1: return "Shape1";
    case Rule::ShapeC: return "Shape_c";
    case Rule::ShapeS: return "Shape_s";
  }
  return "?";
}

std::string status_name(ReduceStatus s) {
  switch (s) {
    case ReduceStatus::Value: return "value";
    case ReduceStatus::Stuck: return "stuck";
    case ReduceStatus::FuelExhausted: return "fuel-exhausted";
  }
  return "?";
}

namespace {

StepResult stepped(TermPtr t, Rule r) { return {StepStatus::Stepped, std::move(t), r}; }
StepResult stuck() { return {StepStatus::Stuck, nullptr, Rule::Can}; }
StepResult at_value() { return {StepStatus::AtValue, nullptr, Rule::Can}; }

TermPtr replace_kid(const TermPtr& t, std::size_t i, TermPtr k) {
  auto c = std::make_shared<Term>(*t);
  c->kids[i] = std::move(k);
  // Free variables only shrink under reduction of closed terms; recompute to stay exact.
  std::set<std::string> fv;
  for (const auto& kid : c->kids)
    for (const auto& v : kid->fv) fv.insert(v);
  if (t->tag == Tag::QCase || t->tag == Tag::Cons || t->tag == Tag::App || t->tag == Tag::Shape) {
    c->fv.assign(fv.begin(), fv.end());
    return c;
  }
  // Match keeps branch binders; rebuild through the factory.
  std::vector<TermPtr> kids = c->kids;
  return mk_match(kids[0], t->branches);
}

} // namespace

StepResult Evaluator::step(const TermPtr& t) const {
  if (is_pure(t)) return step_pure(t);
  CanonicalForm cf = canonicalize(t);
  if (cf.is_zero()) return stuck();
  if (cf.is_singleton()) return step_pure(cf.items[0].term);
  std::vector<std::size_t> reducible;
  for (std::size_t i = 0; i < cf.items.size(); ++i)
    if (!is_value(cf.items[i].term)) reducible.push_back(i);
  if (reducible.empty()) return at_value();
  std::vector<bool> chosen(cf.items.size(), false);
  if (rng_) {
    std::uniform_int_distribution<int> coin(0, 1);
    bool any = false;
    for (auto i : reducible) any |= (chosen[i] = coin(*rng_) == 1);
    if (!any) chosen[reducible[std::uniform_int_distribution<std::size_t>(0, reducible.size() - 1)(*rng_)]] = true;
  } else {
    for (auto i : reducible) chosen[i] = true;
  }
  std::vector<SumItem> out;
  out.reserve(cf.items.size());
  for (std::size_t i = 0; i < cf.items.size(); ++i) {
    if (!chosen[i]) {
      out.push_back(cf.items[i]);
      continue;
    }
    StepResult r = step_pure(cf.items[i].term);
    if (r.status != StepStatus::Stepped) return stuck();
    out.push_back({cf.items[i].amp, r.term});
  }
  return stepped(mk_sum(std::move(out)), Rule::Can);
}

StepResult Evaluator::step_pure(const TermPtr& t) const {
  switch (t->tag) {
    case Tag::Var:
    case Tag::Ket0:
    case Tag::Ket1:
    case Tag::Lambda:
    case Tag::LetRec:
    case Tag::Unit: return at_value();
    case Tag::Sum: return step(t);
    case Tag::Cons: {
      for (std::size_t i = t->kids.size(); i-- > 0;) {
        if (is_value(t->kids[i])) continue;
        StepResult r = step(t->kids[i]);
        if (r.status == StepStatus::Stepped) return stepped(replace_kid(t, i, r.term), r.rule);
        if (r.status == StepStatus::AtValue) return step_pure(replace_kid(t, i, canonical_term(t->kids[i])));
        return stuck();
      }
      return at_value();
    }
    case Tag::QCase: {
      const TermPtr& s = t->kids[0];
      if (s->tag == Tag::Ket0) return stepped(t->kids[1], Rule::Qcase0);
      if (s->tag == Tag::Ket1) return stepped(t->kids[2], Rule::Qcase1);
      if (is_value(s)) return stuck();
      StepResult r = step(s);
      if (r.status == StepStatus::Stepped) return stepped(replace_kid(t, 0, r.term), r.rule);
      return stuck();
    }
    case Tag::Match: {
      const TermPtr& s = t->kids[0];
      if (is_value(s)) {
        if (s->tag != Tag::Cons) return stuck();
        for (const auto& b : t->branches) {
          if (b.ctor != s->name) continue;
          if (b.vars.size() != s->kids.size()) return stuck();
          Subst sub;
          for (std::size_t i = 0; i < b.vars.size(); ++i) sub[b.vars[i]] = s->kids[i];
          return stepped(substitute(b.body, sub), Rule::Match);
        }
        return stuck();
      }
      StepResult r = step(s);
      if (r.status == StepStatus::Stepped) return stepped(replace_kid(t, 0, r.term), r.rule);
      return stuck();
    }
    case Tag::App: {
      const TermPtr& f = t->kids[0];
      const TermPtr& a = t->kids[1];
      if (!is_value(a)) {
        StepResult r = step(a);
        if (r.status == StepStatus::Stepped) return stepped(replace_kid(t, 1, r.term), r.rule);
        if (r.status == StepStatus::AtValue) return step_pure(replace_kid(t, 1, canonical_term(a)));
        return stuck();
      }
      if (!is_value(f)) {
        StepResult r = step(f);
        if (r.status == StepStatus::Stepped) return stepped(replace_kid(t, 0, r.term), r.rule);
        if (r.status == StepStatus::AtValue) return step_pure(replace_kid(t, 0, canonical_term(f)));
        return stuck();
      }
      switch (f->tag) {
        case Tag::Lambda: return stepped(substitute(f->kids[0], {{f->name, a}}), Rule::Lbd);
        case Tag::LetRec: return stepped(substitute(f->kids[0], {{f->name, f}, {f->name2, a}}), Rule::Fix);
        case Tag::Unit: return stepped(mk_app(f->kids[0], a), Rule::Unit);
        case Tag::Sum: {
          CanonicalForm cf = canonicalize(f);
          if (cf.is_singleton() && cf.items[0].term->tag != Tag::Sum) return step_pure(mk_app(cf.items[0].term, a));
          return stuck();
        }
        default: return stuck();
      }
    }
    case Tag::Shape: {
      const TermPtr& b = t->kids[0];
      if (!is_value(b)) {
        StepResult r = step(b);
        if (r.status == StepStatus::Stepped) return stepped(mk_shape(r.term), r.rule);
        if (r.status == StepStatus::AtValue) return step_shape_value(canonical_term(b));
        return stuck();
      }
      return step_shape_value(b);
    }
  }
  return stuck();
}

StepResult Evaluator::step_shape_value(const TermPtr& v) const {
  switch (v->tag) {
    case Tag::Ket0: return stepped(mk_cons("()"), Rule::Shape0);
    case Tag::Ket1: return stepped(mk_cons("()"), Rule::Shape1);
    case Tag::Cons: {
      std::vector<TermPtr> args;
      args.reserve(v->kids.size());
      for (const auto& k : v->kids) args.push_back(mk_shape(k));
      std::string c;
      try {
        c = reg_.shadow_ctor(v->name);
      } catch (const RegistryError&) {
        return stuck();
      }
      return stepped(mk_cons(c, std::move(args)), Rule::ShapeC);
    }
    case Tag::Sum: {
      CanonicalForm cf = canonicalize(v);
      if (cf.is_zero()) return stuck();
      if (cf.is_singleton()) return step_shape_value(cf.items[0].term);
      return stepped(mk_shape(cf.items[0].term), Rule::ShapeS);
    }
    default: return stuck();
  }
}

ReduceResult reduce(const Registry& reg, const TermPtr& t, const ReduceOptions& opts) {
  Evaluator ev(reg);
  ev.set_perturbation(opts.perturb);
  ReduceResult res;
  TermPtr cur = t;
  if (opts.observer) opts.observer(cur);
  for (;;) {
    StepResult r = ev.step(cur);
    if (r.status == StepStatus::AtValue) {
      res.status = ReduceStatus::Value;
      break;
    }
    if (r.status == StepStatus::Stuck) {
      res.status = ReduceStatus::Stuck;
      break;
    }
    if (res.steps == opts.fuel) {
      res.status = ReduceStatus::FuelExhausted;
      break;
    }
    cur = r.term;
    ++res.steps;
    if (opts.trace) res.trace.push_back({res.steps, r.rule, pretty(cur)});
    if (opts.observer) opts.observer(cur);
  }
  res.term = canonical_term(cur);
  return res;
}

ReduceResult reduce(const Registry& reg, const TermPtr& t, std::size_t fuel) {
  ReduceOptions o;
  o.fuel = fuel;
  return reduce(reg, t, o);
}

std::optional<Amplitude> inner_product(const Registry& reg, const TermPtr& s, const TermPtr& t, std::size_t fuel) {
  ReduceResult rs = reduce(reg, s, fuel);
  if (rs.status != ReduceStatus::Value) return std::nullopt;
  ReduceResult rt = reduce(reg, t, fuel);
  if (rt.status != ReduceStatus::Value) return std::nullopt;
  CanonicalForm a = canonicalize(rs.term), b = canonicalize(rt.term);
  Amplitude acc(0);
  for (const auto& x : a.items)
    for (const auto& y : b.items)
      if (alpha_equal(x.term, y.term)) acc += x.amp * y.amp.conj();
  return acc;
}

} // namespace hyrql
