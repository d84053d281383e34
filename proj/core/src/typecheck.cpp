#include "hyrql/typecheck.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "hyrql/canonical.hpp"
#include "hyrql/eval.hpp"
#include "hyrql/parser.hpp"

namespace hyrql {

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Yes: return "yes";
    case Verdict::No: return "no";
    case Verdict::Unknown: return "unknown";
  }
  return "?";
}

std::string check_status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::Ok: return "ok";
    case CheckStatus::TypeError: return "type-error";
    case CheckStatus::BudgetExceeded: return "budget-exceeded";
  }
  return "?";
}

namespace {

using VarMap = std::map<std::string, TypePtr>;

struct Env {
  VarMap gamma;
  VarMap boxed;
  VarMap delta;
};

struct Failure {
  CheckStatus status;
  std::string rule;
  std::string msg;
  SourceLoc loc;
};

struct CannotSynth {};

bool same_keys(const VarMap& a, const VarMap& b) {
  if (a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
    if (ia->first != ib->first) return false;
  return true;
}

std::string key_list(const VarMap& m) {
  std::string s;
  for (const auto& [k, v] : m) s += (s.empty() ? "" : ", ") + k;
  return s;
}

Context to_context(const Env& e) {
  Context c;
  c.gamma = e.gamma;
  c.boxed = e.boxed;
  c.delta = e.delta;
  return c;
}

Derivation node(const std::string& rule, const TermPtr& t, const TypePtr& T, std::vector<Derivation> kids = {}) {
  return {rule, pretty(t), type_str(T), std::move(kids)};
}

std::vector<TermPtr> spine(const TermPtr& t, TermPtr& head) {
  std::vector<TermPtr> args;
  TermPtr cur = t;
  while (cur->tag == Tag::App) {
    args.push_back(cur->kids[1]);
    cur = cur->kids[0];
  }
  std::reverse(args.begin(), args.end());
  head = cur;
  return args;
}

} // namespace

struct TypeChecker::Impl {
  TypeChecker& tc;
  const Registry& reg;
  std::vector<PredicateQuery>& queries;

  [[noreturn]] void fail(const std::string& rule, const TermPtr& t, const std::string& msg) const {
    throw Failure{CheckStatus::TypeError, rule, msg, t->loc};
  }

  void require(const PredicateResult& r, const std::string& rule, const TermPtr& t, const std::string& what) const {
    if (r.verdict == Verdict::Yes) return;
    if (r.verdict == Verdict::No) fail(rule, t, what + " does not hold: " + r.detail);
    throw Failure{CheckStatus::BudgetExceeded, rule, what + " could not be decided: " + r.detail, t->loc};
  }

  void bind_linear(Env& e, const std::string& x, const TypePtr& A) const {
    e.gamma.erase(x);
    e.delta[x] = A;
    if (is_basic(A)) e.boxed[x] = A;
    else e.boxed.erase(x);
  }

  void unbind(Env& e, const std::string& x) const {
    e.gamma.erase(x);
    e.delta.erase(x);
    e.boxed.erase(x);
  }

  PredicateResult ortho(const TermPtr& s, const TermPtr& t, const TypePtr& kappa, const Env& env, bool annotated) {
    PredicateResult r = tc.orthogonal(s, t, kappa, to_context(env), annotated);
    queries.push_back({"orthogonal", pretty(s), pretty(t), r.verdict, r.detail, r.assumed});
    return r;
  }

  // ------------------------------------------------------------------ checking

  Derivation check(Env& env, const TermPtr& t, const TypePtr& T) {
    switch (t->tag) {
      case Tag::Var: {
        auto [A, rule] = use_var(env, t);
        if (!type_equal(A, T)) fail(rule, t, "variable '" + t->name + "' has type " + type_str(A) + ", expected " + type_str(T));
        return node(rule, t, T);
      }
      case Tag::Ket0:
      case Tag::Ket1:
        if (T->kind != TypeKind::Qbit) fail("ax", t, "a qubit is not of type " + type_str(T));
        return node(t->tag == Tag::Ket0 ? "ax0" : "ax1", t, T);
      case Tag::QCase: return check_qcase(env, t, T);
      case Tag::Cons: {
        const ConstructorSig* sig = reg.find(t->name);
        if (!sig) fail("cons", t, "unknown constructor '" + t->name + "'");
        if (T->kind != TypeKind::Data || T->name != sig->type_name)
          fail("cons", t, "constructor '" + t->name + "' does not build values of type " + type_str(T));
        std::vector<TypePtr> args = reg.instantiate(t->name, T);
        std::vector<Derivation> kids;
        for (std::size_t i = 0; i < args.size(); ++i) kids.push_back(check(env, t->kids[i], args[i]));
        return node("cons", t, T, std::move(kids));
      }
      case Tag::Match: return check_match(env, t, T);
      case Tag::Lambda: {
        if (t->ann && !type_equal(t->ann, T))
          fail("abs", t, "abstraction annotated " + type_str(t->ann) + " but expected " + type_str(T));
        return check_abs(env, t->name, t->kids[0], t, T);
      }
      case Tag::LetRec: {
        if (t->ann && !type_equal(t->ann, T))
          fail("rec", t, "recursive abstraction annotated " + type_str(t->ann) + " but expected " + type_str(T));
        if (T->kind != TypeKind::Lollipop && T->kind != TypeKind::ClassArrow)
          fail("rec", t, "letrec cannot have type " + type_str(T));
        Env inner{env.gamma, env.boxed, {}};
        inner.gamma[t->name] = T;
        inner.boxed.erase(t->name);
        Derivation d = check_abs(inner, t->name2, t->kids[0], t, T);
        return node("rec", t, T, {std::move(d)});
      }
      case Tag::Unit: {
        if (T->kind != TypeKind::UnitArrow) fail("unit", t, "unit term checked against " + type_str(T));
        if (!reg.is_quantum(T->dom()) || !reg.is_quantum(T->cod()))
          fail("unit", t, "unitary types relate quantum types, got " + type_str(T));
        Env inner{env.gamma, env.boxed, {}};
        TypePtr lin = lollipop(T->dom(), T->cod());
        Derivation d = check(inner, t->kids[0], lin);
        PredicateResult r = tc.unitary(t->kids[0], T->dom(), T->cod(), to_context(env));
        queries.push_back({"unitary", pretty(t->kids[0]), "", r.verdict, r.detail, false});
        require(r, "unit", t, "unitarity");
        return node("unit", t, T, {std::move(d)});
      }
      case Tag::App: return check_app(env, t, T);
      case Tag::Sum: return check_sum(env, t, T);
      case Tag::Shape: {
        if (T->kind != TypeKind::Data) fail("shape", t, "shape produces constructor data, not " + type_str(T));
        Env inner{env.gamma, env.boxed, env.boxed};
        std::pair<TypePtr, Derivation> s;
        try {
          s = synth(inner, t->kids[0]);
        } catch (const CannotSynth&) {
          fail("shape", t, "cannot infer the type of the term under shape");
        }
        if (!is_basic(s.first)) fail("shape", t, "shape applies to basic types, got " + type_str(s.first));
        TypePtr st = reg.shape_type(s.first);
        if (!type_equal(st, T)) fail("shape", t, "shape has type " + type_str(st) + ", expected " + type_str(T));
        return node("shape", t, T, {std::move(s.second)});
      }
    }
    fail("?", t, "unsupported term");
  }

  std::pair<TypePtr, std::string> use_var(Env& env, const TermPtr& t) {
    const std::string& x = t->name;
    if (auto it = env.delta.find(x); it != env.delta.end()) {
      TypePtr A = it->second;
      env.delta.erase(it);
      return {A, "ax"};
    }
    if (auto it = env.gamma.find(x); it != env.gamma.end()) return {it->second, "ax_c"};
    if (env.boxed.count(x)) fail("ax", t, "linear variable '" + x + "' is used more than once");
    fail("ax", t, "unbound variable '" + x + "'");
  }

  Derivation check_abs(Env& env, const std::string& x, const TermPtr& body, const TermPtr& t, const TypePtr& T) {
    if (T->kind == TypeKind::Lollipop) {
      Env e = env;
      bind_linear(e, x, T->dom());
      Derivation d = check(e, body, T->cod());
      if (e.delta.count(x)) fail("abs", t, "linear variable '" + x + "' is never used");
      unbind(e, x);
      restore_shadowed(e, env, x);
      env = std::move(e);
      return node("abs", t, T, {std::move(d)});
    }
    if (T->kind == TypeKind::ClassArrow) {
      if (!reg.is_classical(T->dom())) fail("abs_c", t, "non-linear abstraction over quantum type " + type_str(T->dom()));
      Env e = env;
      unbind(e, x);
      e.gamma[x] = T->dom();
      Derivation d = check(e, body, T->cod());
      unbind(e, x);
      restore_shadowed(e, env, x);
      env = std::move(e);
      return node("abs_c", t, T, {std::move(d)});
    }
    if (T->kind == TypeKind::UnitArrow) fail("abs", t, "a unitary type needs a unit term");
    fail("abs", t, "abstraction checked against non-function type " + type_str(T));
  }

  // Binders are uniquified before checking, so shadowing only happens with caller contexts.
  void restore_shadowed(Env& e, const Env& before, const std::string& x) const {
    if (auto it = before.gamma.find(x); it != before.gamma.end()) e.gamma[x] = it->second;
    if (auto it = before.boxed.find(x); it != before.boxed.end()) e.boxed[x] = it->second;
  }

  Derivation check_qcase(Env& env, const TermPtr& t, const TypePtr& T) {
    Derivation ds = check(env, t->kids[0], qbit_type());
    if (!is_basic(T)) fail("qcase", t, "qcase branches must have a basic type, got " + type_str(T));
    Env e0 = env, e1 = env;
    Derivation d0 = check(e0, t->kids[1], T);
    Derivation d1 = check(e1, t->kids[2], T);
    if (!same_keys(e0.delta, e1.delta))
      fail("qcase", t, "branches consume different linear variables (" + key_list(e0.delta) + " vs " + key_list(e1.delta) + ")");
    require(ortho(t->kids[1], t->kids[2], T, env, t->orthogonal_annot), "qcase", t, "orthogonality of the branches");
    env = std::move(e0);
    return node("qcase", t, T, {std::move(ds), std::move(d0), std::move(d1)});
  }

  std::pair<TypePtr, Derivation> scrutinee(Env& env, const TermPtr& t) {
    const ConstructorSig* sig = reg.find(t->branches.at(0).ctor);
    if (!sig) fail("match", t, "unknown constructor '" + t->branches[0].ctor + "'");
    const TypeFamily* fam = reg.family(sig->type_name);
    Env e = env;
    try {
      auto [B, d] = synth(e, t->kids[0]);
      if (B->kind != TypeKind::Data || B->name != sig->type_name)
        fail("match", t, "scrutinee has type " + type_str(B) + " but the patterns are of type " + sig->type_name);
      env = std::move(e);
      return {B, std::move(d)};
    } catch (const CannotSynth&) {
      if (!fam->params.empty()) fail("match", t, "cannot infer the type of the scrutinee");
      TypePtr B = data_type(sig->type_name);
      e = env;
      Derivation d = check(e, t->kids[0], B);
      env = std::move(e);
      return {B, std::move(d)};
    }
  }

  static void basic_subtypes(const TypePtr& T, std::vector<TypePtr>& out) {
    if (!T) return;
    if (is_basic(T) && std::none_of(out.begin(), out.end(), [&](const TypePtr& u) { return type_equal(u, T); }))
      out.push_back(T);
    for (const auto& a : T->args) basic_subtypes(a, out);
  }

  static void annotated_types(const TermPtr& t, std::vector<TypePtr>& out) {
    basic_subtypes(t->ann, out);
    for (const auto& k : t->kids) annotated_types(k, out);
    for (const auto& b : t->branches) annotated_types(b.body, out);
    for (const auto& it : t->items) annotated_types(it.term, out);
  }

  // A scrutinee such as `[]` leaves the family parameters open. Reduction
  // produces these, so candidates are drawn from the types written in the
  // term and the context, and each is checked in full.
  Derivation check_match_open(Env& env, const TermPtr& t, const TypePtr& T, const TypeFamily& fam) {
    std::vector<TypePtr> pool = {T};
    basic_subtypes(T, pool);
    annotated_types(t, pool);
    for (const auto* m : {&env.gamma, &env.boxed, &env.delta})
      for (const auto& [x, A] : *m) basic_subtypes(A, pool);
    if (fam.params.size() > 2) fail("match", t, "cannot infer the type of the scrutinee");
    std::size_t n = pool.size(), combos = fam.params.size() == 1 ? n : n * n;
    std::optional<Failure> first;
    for (std::size_t c = 0; c < combos; ++c) {
      std::vector<TypePtr> args = {pool[c % n]};
      if (fam.params.size() == 2) args.push_back(pool[c / n]);
      TypePtr B = data_type(fam.name, args);
      Env e = env;
      try {
        Derivation d = check_match_at(e, t, T, B, check(e, t->kids[0], B));
        env = std::move(e);
        return d;
      } catch (const Failure& f) {
        if (f.status == CheckStatus::BudgetExceeded) throw;
        if (!first) first = f;
      }
    }
    if (first) throw *first;
    fail("match", t, "cannot infer the type of the scrutinee");
  }

  Env bind_pattern(const Env& base, const Branch& b, const TypePtr& B) const {
    Env e = base;
    std::vector<TypePtr> args = reg.instantiate(b.ctor, B);
    for (std::size_t i = 0; i < b.vars.size(); ++i) {
      if (reg.is_quantum(args[i])) {
        bind_linear(e, b.vars[i], args[i]);
      } else {
        unbind(e, b.vars[i]);
        e.gamma[b.vars[i]] = args[i];
      }
    }
    return e;
  }

  Derivation check_match(Env& env, const TermPtr& t, const TypePtr& T) {
    const ConstructorSig* sig = reg.find(t->branches.at(0).ctor);
    const TypeFamily* fam = sig ? reg.family(sig->type_name) : nullptr;
    if (fam && !fam->params.empty()) {
      Env e = env;
      try {
        synth(e, t->kids[0]);
      } catch (const CannotSynth&) {
        return check_match_open(env, t, T, *fam);
      }
    }
    auto [B, ds] = scrutinee(env, t);
    return check_match_at(env, t, T, B, std::move(ds));
  }

  Derivation check_match_at(Env& env, const TermPtr& t, const TypePtr& T, const TypePtr& B, Derivation ds) {
    if (!is_basic(T)) fail("match", t, "match branches must have a basic type, got " + type_str(T));
    std::vector<Derivation> kids = {std::move(ds)};
    std::optional<Env> out;
    for (const auto& b : t->branches) {
      Env e = bind_pattern(env, b, B);
      kids.push_back(check(e, b.body, T));
      for (const auto& v : b.vars) {
        if (e.delta.count(v)) fail("match", b.body, "linear pattern variable '" + v + "' is never used");
        unbind(e, v);
        restore_shadowed(e, env, v);
      }
      if (out && !same_keys(out->delta, e.delta))
        fail("match", t, "branches consume different linear variables (" + key_list(out->delta) + " vs " + key_list(e.delta) + ")");
      if (!out) out = std::move(e);
    }
    env = std::move(*out);
    return node("match", t, T, std::move(kids));
  }

  static bool unannotated_abstraction(const TermPtr& f) {
    return (f->tag == Tag::Lambda || f->tag == Tag::LetRec) && !f->ann;
  }

  Derivation check_app(Env& env, const TermPtr& t, const TypePtr& T) {
    const TermPtr& f = t->kids[0];
    const TermPtr& a = t->kids[1];
    std::vector<Failure> failures;
    auto fn_first = [&]() -> std::optional<Derivation> {
      Env e = env;
      std::pair<TypePtr, Derivation> sf;
      try {
        sf = synth(e, f);
      } catch (const CannotSynth&) {
        return std::nullopt;
      }
      const TypePtr& Tf = sf.first;
      if (!is_arrow(Tf)) fail("app", t, "applying a term of non-function type " + type_str(Tf));
      if (!type_equal(Tf->cod(), T))
        fail("app", t, "function returns " + type_str(Tf->cod()) + ", expected " + type_str(T));
      if (Tf->kind == TypeKind::Lollipop) {
        Derivation da = check(e, a, Tf->dom());
        env = std::move(e);
        return node("app", t, T, {std::move(sf.second), std::move(da)});
      }
      if (Tf->kind == TypeKind::ClassArrow) {
        Env ea{e.gamma, e.boxed, {}};
        Derivation da = check(ea, a, Tf->dom());
        env = std::move(e);
        return node("app_c", t, T, {std::move(sf.second), std::move(da)});
      }
      if (!same_keys(e.delta, env.delta)) fail("app_u", t, "a unitary function may not consume linear variables");
      Derivation da = check(e, a, Tf->dom());
      env = std::move(e);
      return node("app_u", t, T, {std::move(sf.second), std::move(da)});
    };
    auto arg_first = [&]() -> std::optional<Derivation> {
      Env ea = env;
      std::pair<TypePtr, Derivation> sa;
      try {
        sa = synth(ea, a);
      } catch (const CannotSynth&) {
        return std::nullopt;
      }
      const TypePtr& Ta = sa.first;
      bool consumed = !same_keys(ea.delta, env.delta);
      if (reg.is_classical(Ta) && !consumed) {
        try {
          Env e = env;
          Derivation df = check(e, f, class_arrow(Ta, T));
          env = std::move(e);
          return node("app_c", t, T, {std::move(df), sa.second});
        } catch (const Failure& x) {
          failures.push_back(x);
        }
      }
      try {
        Env e = ea;
        Derivation df = check(e, f, lollipop(Ta, T));
        env = std::move(e);
        return node("app", t, T, {std::move(df), sa.second});
      } catch (const Failure& x) {
        failures.push_back(x);
      }
      if (is_basic(Ta) && is_basic(T) && reg.is_quantum(Ta) && reg.is_quantum(T)) {
        try {
          Env ef{env.gamma, env.boxed, {}};
          Derivation df = check(ef, f, unit_arrow(Ta, T));
          env = std::move(ea);
          return node("app_u", t, T, {std::move(df), sa.second});
        } catch (const Failure& x) {
          failures.push_back(x);
        }
      }
      throw_best(failures, t);
    };
    std::vector<std::function<std::optional<Derivation>()>> order;
    if (unannotated_abstraction(f)) order = {arg_first, fn_first};
    else order = {fn_first, arg_first};
    for (auto& strategy : order) {
      try {
        if (auto d = strategy()) return *d;
      } catch (const Failure& x) {
        failures.push_back(x);
        throw_best(failures, t);
      }
    }
    if (!failures.empty()) throw_best(failures, t);
    fail("app", t, "cannot infer the type of the function or of its argument; add a type annotation");
  }

  [[noreturn]] void throw_best(const std::vector<Failure>& failures, const TermPtr& t) const {
    for (const auto& f : failures)
      if (f.status == CheckStatus::BudgetExceeded) throw f;
    if (!failures.empty()) throw failures.front();
    fail("app", t, "application cannot be typed");
  }

  Derivation check_sum(Env& env, const TermPtr& t, const TypePtr& T) {
    std::optional<Failure> sup_failure;
    if (is_basic(T) && reg.is_quantum(T)) {
      try {
        Amplitude norm(0);
        for (const auto& it : t->items) norm += it.amp.norm_sq();
        if (!norm.is_one()) fail("sup", t, "squared amplitudes sum to " + norm.str() + ", not 1");
        std::vector<Derivation> kids;
        std::optional<Env> out;
        for (const auto& it : t->items) {
          Env e = env;
          kids.push_back(check(e, it.term, T));
          if (out && !same_keys(out->delta, e.delta))
            fail("sup", t, "superposed terms consume different linear variables");
          if (!out) out = std::move(e);
        }
        for (std::size_t i = 0; i < t->items.size(); ++i)
          for (std::size_t j = i + 1; j < t->items.size(); ++j)
            require(ortho(t->items[i].term, t->items[j].term, T, env, t->orthogonal_annot), "sup", t,
                    "orthogonality of superposed terms");
        env = std::move(*out);
        return node("sup", t, T, std::move(kids));
      } catch (const Failure& f) {
        sup_failure = f;
      }
    }
    CanonicalForm cf = canonicalize(t);
    if (cf.is_zero()) fail("equiv", t, "superposition is equivalent to the zero term");
    TermPtr c = cf.is_singleton() ? cf.items[0].term : mk_sum(cf.items, t->orthogonal_annot);
    if (alpha_equal(c, t)) {
      if (sup_failure) throw *sup_failure;
      fail("sup", t, "superpositions must have a quantum basic type, not " + type_str(T));
    }
    try {
      Env e = env;
      Derivation d = check(e, c, T);
      env = std::move(e);
      return node("equiv", t, T, {std::move(d)});
    } catch (const Failure& f) {
      if (sup_failure && sup_failure->status == CheckStatus::BudgetExceeded) throw *sup_failure;
      if (f.status == CheckStatus::BudgetExceeded || !sup_failure) throw;
      throw *sup_failure;
    }
  }

  // ------------------------------------------------------------------ synthesis

  std::optional<TypePtr> guess_param(const std::string& x, const TermPtr& t) const {
    switch (t->tag) {
      case Tag::QCase:
        if (t->kids[0]->tag == Tag::Var && t->kids[0]->name == x) return qbit_type();
        break;
      case Tag::Match:
        if (t->kids[0]->tag == Tag::Var && t->kids[0]->name == x) {
          const ConstructorSig* sig = reg.find(t->branches.at(0).ctor);
          const TypeFamily* fam = sig ? reg.family(sig->type_name) : nullptr;
          if (fam && fam->params.empty()) return data_type(fam->name);
        }
        break;
      case Tag::Lambda:
        if (t->name == x) return std::nullopt;
        break;
      case Tag::LetRec:
        if (t->name == x || t->name2 == x) return std::nullopt;
        break;
      default: break;
    }
    for (const auto& k : t->kids)
      if (auto g = guess_param(x, k)) return g;
    for (const auto& b : t->branches) {
      if (std::find(b.vars.begin(), b.vars.end(), x) != b.vars.end()) continue;
      if (auto g = guess_param(x, b.body)) return g;
    }
    for (const auto& it : t->items)
      if (auto g = guess_param(x, it.term)) return g;
    return std::nullopt;
  }

  std::pair<TypePtr, Derivation> checked(Env& env, const TermPtr& t, const TypePtr& T) {
    Derivation d = check(env, t, T);
    return {T, std::move(d)};
  }

  std::pair<TypePtr, Derivation> synth(Env& env, const TermPtr& t) {
    switch (t->tag) {
      case Tag::Var: {
        auto [A, rule] = use_var(env, t);
        return {A, node(rule, t, A)};
      }
      case Tag::Ket0:
      case Tag::Ket1: return checked(env, t, qbit_type());
      case Tag::Cons: return synth_cons(env, t);
      case Tag::QCase: {
        Env e = env;
        check(e, t->kids[0], qbit_type());
        TypePtr T = synth_any(e, {t->kids[1], t->kids[2]});
        return checked(env, t, T);
      }
      case Tag::Match: {
        Env e = env;
        auto [B, ds] = scrutinee(e, t);
        std::optional<TypePtr> T;
        for (const auto& b : t->branches) {
          Env eb = bind_pattern(e, b, B);
          try {
            T = synth(eb, b.body).first;
            break;
          } catch (const CannotSynth&) {
          }
        }
        if (!T) throw CannotSynth{};
        return checked(env, t, *T);
      }
      case Tag::Lambda: {
        if (t->ann) return checked(env, t, t->ann);
        auto A = guess_param(t->name, t->kids[0]);
        if (!A) throw CannotSynth{};
        Env e = env;
        bool quantum = reg.is_quantum(*A);
        if (quantum) {
          bind_linear(e, t->name, *A);
        } else {
          unbind(e, t->name);
          e.gamma[t->name] = *A;
        }
        TypePtr B = synth(e, t->kids[0]).first;
        return checked(env, t, quantum ? lollipop(*A, B) : class_arrow(*A, B));
      }
      case Tag::LetRec:
        if (t->ann) return checked(env, t, t->ann);
        throw CannotSynth{};
      case Tag::Unit: {
        const TermPtr& b = t->kids[0];
        TypePtr L;
        if ((b->tag == Tag::Lambda || b->tag == Tag::LetRec) && b->ann) {
          L = b->ann;
        } else {
          Env e{env.gamma, env.boxed, {}};
          L = synth(e, b).first;
        }
        if (L->kind != TypeKind::Lollipop) fail("unit", t, "unit body has type " + type_str(L) + ", expected Q -o Q'");
        return checked(env, t, unit_arrow(L->dom(), L->cod()));
      }
      case Tag::App: return synth_app(env, t);
      case Tag::Sum: {
        std::vector<TermPtr> items;
        for (const auto& it : t->items) items.push_back(it.term);
        Env e = env;
        TypePtr T = synth_any(e, items);
        return checked(env, t, T);
      }
      case Tag::Shape: {
        Env inner{env.gamma, env.boxed, env.boxed};
        auto [K, d] = synth(inner, t->kids[0]);
        if (!is_basic(K)) fail("shape", t, "shape applies to basic types, got " + type_str(K));
        TypePtr st = reg.shape_type(K);
        return {st, node("shape", t, st, {std::move(d)})};
      }
    }
    throw CannotSynth{};
  }

  // Type of the first synthesizable term among alternatives sharing one context.
  TypePtr synth_any(const Env& env, const std::vector<TermPtr>& ts) {
    for (const auto& x : ts) {
      Env e = env;
      try {
        return synth(e, x).first;
      } catch (const CannotSynth&) {
      }
    }
    throw CannotSynth{};
  }

  std::pair<TypePtr, Derivation> synth_cons(Env& env, const TermPtr& t) {
    const ConstructorSig* sig = reg.find(t->name);
    if (!sig) fail("cons", t, "unknown constructor '" + t->name + "'");
    const TypeFamily* fam = reg.family(sig->type_name);
    if (fam->params.empty()) return checked(env, t, data_type(sig->type_name));
    // Determine the parameters from whichever arguments synthesize.
    std::map<std::string, TypePtr> bound;
    Env e = env;
    for (std::size_t i = 0; i < t->kids.size(); ++i) {
      Env ei = e;
      try {
        TypePtr A = synth(ei, t->kids[i]).first;
        e = std::move(ei);
        match_param(sig->arg_types[i], A, bound);
      } catch (const CannotSynth&) {
      }
    }
    std::vector<TypePtr> ps;
    for (const auto& p : fam->params) {
      auto it = bound.find(p);
      if (it == bound.end()) throw CannotSynth{};
      ps.push_back(it->second);
    }
    return checked(env, t, data_type(sig->type_name, std::move(ps)));
  }

  static void match_param(const TypePtr& pat, const TypePtr& actual, std::map<std::string, TypePtr>& bound) {
    if (pat->kind == TypeKind::Param) {
      bound.emplace(pat->name, actual);
      return;
    }
    if (pat->kind != actual->kind || pat->name != actual->name || pat->args.size() != actual->args.size()) return;
    for (std::size_t i = 0; i < pat->args.size(); ++i) match_param(pat->args[i], actual->args[i], bound);
  }

  std::pair<TypePtr, Derivation> synth_app(Env& env, const TermPtr& t) {
    {
      Env e = env;
      bool synthesized = false;
      std::pair<TypePtr, Derivation> sf;
      try {
        sf = synth(e, t->kids[0]);
        synthesized = true;
      } catch (const CannotSynth&) {
      }
      if (synthesized) {
        if (!is_arrow(sf.first)) fail("app", t, "applying a term of non-function type " + type_str(sf.first));
        return checked(env, t, sf.first->cod());
      }
    }
    // Beta synthesis: a spine headed by unannotated abstractions with synthesizable arguments.
    TermPtr head;
    std::vector<TermPtr> args = spine(t, head);
    if (!unannotated_abstraction(head) || head->tag != Tag::Lambda) throw CannotSynth{};
    Env e = env;
    std::vector<std::pair<TypePtr, bool>> arg_types;
    for (const auto& a : args) {
      Env before = e;
      TypePtr A = synth(e, a).first;
      bool consumed = !same_keys(before.delta, e.delta);
      arg_types.push_back({A, reg.is_classical(A) && !consumed});
    }
    TermPtr body = head;
    std::size_t k = 0;
    while (k < args.size() && body->tag == Tag::Lambda) {
      if (arg_types[k].second) {
        unbind(e, body->name);
        e.gamma[body->name] = arg_types[k].first;
      } else {
        bind_linear(e, body->name, arg_types[k].first);
      }
      body = body->kids[0];
      ++k;
    }
    std::vector<TermPtr> rest(args.begin() + static_cast<std::ptrdiff_t>(k), args.end());
    TypePtr R = synth(e, mk_apps(body, rest)).first;
    return checked(env, t, R);
  }
};

// ====================================================================== predicates

namespace {

struct VarInfo {
  std::string name;
  TypePtr type;
  bool quantum;
};

std::optional<TypePtr> lookup(const Context& ctx, const std::string& x) {
  if (auto it = ctx.delta.find(x); it != ctx.delta.end()) return it->second;
  if (auto it = ctx.gamma.find(x); it != ctx.gamma.end()) return it->second;
  if (auto it = ctx.boxed.find(x); it != ctx.boxed.end()) return it->second;
  return std::nullopt;
}

std::string type_key(const Context& ctx, const std::vector<std::string>& vars) {
  std::string k;
  for (const auto& v : vars) {
    auto t = lookup(ctx, v);
    k += v + ":" + (t ? type_str(*t) : "?") + ";";
  }
  return k;
}

std::vector<std::string> union_fv(const TermPtr& a, const TermPtr& b) {
  std::set<std::string> s(a->fv.begin(), a->fv.end());
  s.insert(b->fv.begin(), b->fv.end());
  return {s.begin(), s.end()};
}

// Closed values of t up to the given constructor depth.
std::vector<TermPtr> values_upto(const Registry& reg, const TypePtr& t, std::size_t depth, std::size_t limit) {
  if (t->kind == TypeKind::Qbit) return {mk_ket(0), mk_ket(1)};
  if (t->kind != TypeKind::Data) return {};
  std::vector<TermPtr> out;
  for (const auto& c : reg.constructors_of(t->name)) {
    std::vector<TypePtr> args = reg.instantiate(c, t);
    if (!args.empty() && depth == 0) continue;
    std::vector<std::vector<TermPtr>> combos = {{}};
    for (const auto& a : args) {
      std::vector<TermPtr> vs = values_upto(reg, a, depth - 1, limit);
      std::vector<std::vector<TermPtr>> next;
      for (const auto& pre : combos)
        for (const auto& v : vs) {
          if (next.size() >= limit) break;
          auto n = pre;
          n.push_back(v);
          next.push_back(std::move(n));
        }
      combos = std::move(next);
    }
    for (auto& xs : combos) {
      if (out.size() >= limit) return out;
      out.push_back(mk_cons(c, std::move(xs)));
    }
  }
  return out;
}

TermPtr shape_of_value(const Registry& reg, const TermPtr& v) {
  switch (v->tag) {
    case Tag::Ket0:
    case Tag::Ket1: return mk_cons("()");
    case Tag::Cons: {
      std::vector<TermPtr> args;
      for (const auto& k : v->kids) args.push_back(shape_of_value(reg, k));
      return mk_cons(reg.shadow_ctor(v->name), std::move(args));
    }
    default: return v;
  }
}

std::string describe(const Subst& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& [x, v] : s) {
    out += (first ? "" : ", ") + x + " := " + pretty(v);
    first = false;
  }
  return out + "}";
}

using Assignment = std::vector<TermPtr>;

std::vector<Assignment> product(const std::vector<std::vector<TermPtr>>& domains, std::size_t limit, bool& overflow) {
  std::vector<Assignment> out = {{}};
  for (const auto& d : domains) {
    std::vector<Assignment> next;
    for (const auto& pre : out)
      for (const auto& v : d) {
        if (next.size() >= limit) {
          overflow = true;
          return {};
        }
        auto n = pre;
        n.push_back(v);
        next.push_back(std::move(n));
      }
    out = std::move(next);
  }
  return out;
}

} // namespace

TypeChecker::TypeChecker(const Registry& reg, Budget budget) : reg_(reg), budget_(budget) {}

namespace {

struct Enumerated {
  Verdict verdict = Verdict::Yes;
  std::string detail;
};

// Checks orthogonality over every context substitution built from the given value domains.
// Classical variables take the same value on both sides; quantum variables are paired
// independently (superposed inputs are covered by linearity) as long as their shapes agree.
Enumerated enumerate_ortho(const Registry& reg, const TermPtr& s, const TermPtr& t, const std::vector<VarInfo>& vars,
                           const std::vector<std::vector<TermPtr>>& domains, const Budget& budget) {
  std::vector<std::vector<TermPtr>> cdom, qdom;
  std::vector<std::string> cname, qname;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    (vars[i].quantum ? qdom : cdom).push_back(domains[i]);
    (vars[i].quantum ? qname : cname).push_back(vars[i].name);
  }
  bool overflow = false;
  auto cs = product(cdom, budget.max_substitutions, overflow);
  auto qs = product(qdom, budget.max_substitutions, overflow);
  if (overflow || cs.size() * qs.size() * qs.size() > budget.max_substitutions * 16)
    return {Verdict::Unknown, "too many context substitutions"};
  std::vector<std::vector<TermPtr>> qshape;
  for (const auto& q : qs) {
    std::vector<TermPtr> sh;
    for (const auto& v : q) sh.push_back(shape_of_value(reg, v));
    qshape.push_back(std::move(sh));
  }
  std::size_t visited = 0;
  for (const auto& c : cs) {
    Subst base;
    for (std::size_t i = 0; i < c.size(); ++i) base[cname[i]] = c[i];
    for (std::size_t a = 0; a < qs.size(); ++a) {
      for (std::size_t b = 0; b < qs.size(); ++b) {
        bool same_shape = true;
        for (std::size_t i = 0; i < qname.size() && same_shape; ++i)
          same_shape = alpha_equal(qshape[a][i], qshape[b][i]);
        if (!same_shape) continue;
        if (++visited > budget.max_substitutions) return {Verdict::Unknown, "too many context substitutions"};
        Subst s1 = base, s2 = base;
        for (std::size_t i = 0; i < qname.size(); ++i) {
          s1[qname[i]] = qs[a][i];
          s2[qname[i]] = qs[b][i];
        }
        TermPtr ls = substitute(s, s1), rt = substitute(t, s2);
        if (a == b) {
          ReduceResult r1 = reduce(reg, mk_shape(ls), budget.fuel);
          ReduceResult r2 = reduce(reg, mk_shape(rt), budget.fuel);
          if (r1.status != ReduceStatus::Value || r2.status != ReduceStatus::Value)
            return {Verdict::Unknown, "shape evaluation did not finish within fuel " + std::to_string(budget.fuel)};
          if (!equiv(r1.term, r2.term))
            return {Verdict::No, "shapes differ under " + describe(s1) + ": " + pretty(r1.term) + " vs " + pretty(r2.term)};
        }
        auto ip = inner_product(reg, ls, rt, budget.fuel);
        if (!ip) return {Verdict::Unknown, "evaluation did not finish within fuel " + std::to_string(budget.fuel)};
        if (!ip->is_zero()) {
          std::string where = a == b ? describe(s1) : describe(s1) + " / " + describe(s2);
          return {Verdict::No, "inner product " + ip->str() + " under " + where};
        }
      }
    }
  }
  return {Verdict::Yes, "checked " + std::to_string(visited) + " substitution(s)"};
}

bool single_shape(const Registry& reg, const TypePtr& A) {
  if (!is_basic(A)) return false;
  auto b = reg.basis(reg.shape_type(A), 2);
  return b && b->size() == 1;
}

bool surely_terminates(const TermPtr& u, const Context& ctx) {
  switch (u->tag) {
    case Tag::Var:
    case Tag::Ket0:
    case Tag::Ket1:
    case Tag::Lambda:
    case Tag::LetRec:
    case Tag::Unit: return true;
    case Tag::Cons:
      return std::all_of(u->kids.begin(), u->kids.end(), [&](const TermPtr& k) { return surely_terminates(k, ctx); });
    case Tag::Sum:
      return std::all_of(u->items.begin(), u->items.end(),
                         [&](const SumItem& it) { return surely_terminates(it.term, ctx); });
    case Tag::Shape: return surely_terminates(u->kids[0], ctx);
    case Tag::App: {
      const TermPtr& f = u->kids[0];
      bool unitary_fn = f->tag == Tag::Unit;
      if (f->tag == Tag::Var) {
        auto T = lookup(ctx, f->name);
        unitary_fn = T && (*T)->kind == TypeKind::UnitArrow;
      }
      return unitary_fn && surely_terminates(u->kids[1], ctx);
    }
    default: return false;
  }
}

} // namespace

PredicateResult TypeChecker::orthogonal(const TermPtr& s, const TermPtr& t, const TypePtr& kappa, const Context& ctx,
                                        bool annotated) {
  std::vector<std::string> fvs = union_fv(s, t);
  std::string key = alpha_key(s) + "|" + alpha_key(t) + "|" + type_str(kappa) + "|" + type_key(ctx, fvs) +
                    (annotated ? "|@" : "");
  if (auto it = ortho_cache_.find(key); it != ortho_cache_.end()) return it->second;
  auto remember = [&](PredicateResult r) {
    ortho_cache_[key] = r;
    return r;
  };

  std::vector<VarInfo> vars;
  bool functional = false, infinite = false;
  std::string infinite_name;
  for (const auto& x : fvs) {
    auto T = lookup(ctx, x);
    if (!T) return remember({Verdict::Unknown, "free variable '" + x + "' has no type", false});
    if (is_arrow(*T)) {
      functional = true;
    } else if (!reg_.type_depth(*T)) {
      infinite = true;
      infinite_name = x + " : " + type_str(*T);
    }
    vars.push_back({x, *T, reg_.is_quantum(*T)});
  }

  if (infinite) {
    if (!annotated)
      return remember({Verdict::Unknown, "context variable " + infinite_name + " has infinite type depth", false});
    if (functional)
      return remember({Verdict::Yes, "assumed by @orthogonal annotation (functional context not explored)", true});
    std::vector<std::vector<TermPtr>> domains;
    for (const auto& v : vars) domains.push_back(values_upto(reg_, v.type, budget_.probe_depth, 64));
    Enumerated e = enumerate_ortho(reg_, s, t, vars, domains, budget_);
    if (e.verdict == Verdict::No) return remember({Verdict::No, e.detail, false});
    return remember({Verdict::Yes,
                     "assumed by @orthogonal annotation; no counterexample among values of depth <= " +
                         std::to_string(budget_.probe_depth),
                     true});
  }

  if (functional) {
    TermPtr cs = canonical_term(s), ct = canonical_term(t);
    if (cs->tag == Tag::Cons && ct->tag == Tag::Cons && cs->name == ct->name && kappa->kind == TypeKind::Data) {
      std::vector<TypePtr> args = reg_.instantiate(cs->name, kappa);
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (!is_basic(args[i])) continue;
        if (orthogonal(cs->kids[i], ct->kids[i], args[i], ctx).verdict != Verdict::Yes) continue;
        bool rest = true;
        for (std::size_t j = 0; j < args.size() && rest; ++j) {
          if (j == i) continue;
          rest = (alpha_equal(cs->kids[j], ct->kids[j]) || single_shape(reg_, args[j])) &&
                 surely_terminates(cs->kids[j], ctx) && surely_terminates(ct->kids[j], ctx);
        }
        if (rest)
          return remember({Verdict::Yes, "component " + std::to_string(i + 1) + " of '" + cs->name +
                                             "' is orthogonal and the others terminate with equal shapes",
                           false});
      }
    }
    if (annotated) return remember({Verdict::Yes, "assumed by @orthogonal annotation", true});
    return remember({Verdict::Unknown, "free functional variables; structural criterion does not apply", false});
  }

  std::vector<std::vector<TermPtr>> domains;
  for (const auto& v : vars) {
    auto b = reg_.basis(v.type, budget_.max_substitutions);
    if (!b) return remember({Verdict::Unknown, "too many values of type " + type_str(v.type), false});
    domains.push_back(std::move(*b));
  }
  Enumerated e = enumerate_ortho(reg_, s, t, vars, domains, budget_);
  if (e.verdict == Verdict::Unknown && annotated)
    return remember({Verdict::Yes, "assumed by @orthogonal annotation: " + e.detail, true});
  return remember({e.verdict, e.detail, false});
}

PredicateResult TypeChecker::unitary(const TermPtr& t, const TypePtr& q, const TypePtr& q2, const Context& ctx) {
  std::string key = alpha_key(t) + "|" + type_str(q) + "|" + type_str(q2) + "|" + type_key(ctx, t->fv);
  if (auto it = unitary_cache_.find(key); it != unitary_cache_.end()) return it->second;
  auto remember = [&](PredicateResult r) {
    unitary_cache_[key] = r;
    return r;
  };
  std::vector<std::vector<TermPtr>> domains;
  std::vector<std::string> names;
  for (const auto& x : t->fv) {
    auto T = lookup(ctx, x);
    if (!T) return remember({Verdict::Unknown, "free variable '" + x + "' has no type", false});
    if (is_arrow(*T)) return remember({Verdict::Unknown, "free functional variable '" + x + "'", false});
    auto b = reg_.basis(*T, budget_.max_substitutions);
    if (!b) return remember({Verdict::Unknown, "context variable '" + x + "' ranges over infinitely many values", false});
    domains.push_back(std::move(*b));
    names.push_back(x);
  }
  auto bq = reg_.basis(q, budget_.max_substitutions);
  auto bq2 = reg_.basis(q2, budget_.max_substitutions);
  if (!bq || !bq2) return remember({Verdict::Unknown, "input or output type is not finite", false});
  if (bq->size() != bq2->size())
    return remember({Verdict::No, "matrix is not square (" + std::to_string(bq2->size()) + "x" +
                                      std::to_string(bq->size()) + ")",
                     false});
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < bq2->size(); ++i) index[alpha_key((*bq2)[i])] = i;
  bool overflow = false;
  auto sigmas = product(domains, budget_.max_substitutions, overflow);
  if (overflow) return remember({Verdict::Unknown, "too many context substitutions", false});
  const std::size_t n = bq->size();
  for (const auto& sg : sigmas) {
    Subst sub;
    for (std::size_t i = 0; i < names.size(); ++i) sub[names[i]] = sg[i];
    TermPtr ts = substitute(t, sub);
    std::vector<std::vector<Amplitude>> M(n, std::vector<Amplitude>(n, Amplitude(0)));
    for (std::size_t i = 0; i < n; ++i) {
      ReduceResult r = reduce(reg_, mk_app(ts, (*bq)[i]), budget_.fuel);
      if (r.status == ReduceStatus::FuelExhausted)
        return remember({Verdict::Unknown, "evaluation on " + pretty((*bq)[i]) + " exceeded fuel", false});
      if (r.status == ReduceStatus::Stuck) return remember({Verdict::No, "evaluation on " + pretty((*bq)[i]) + " is stuck", false});
      for (const auto& it : canonicalize(r.term).items) {
        auto j = index.find(alpha_key(it.term));
        if (j == index.end()) return remember({Verdict::No, "output " + pretty(it.term) + " is not a basis value", false});
        M[j->second][i] = it.amp;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        Amplitude cols(0), rows(0);
        for (std::size_t j = 0; j < n; ++j) {
          cols += M[j][i].conj() * M[j][k];
          rows += M[i][j] * M[k][j].conj();
        }
        Amplitude want(i == k ? 1 : 0);
        if (cols != want || rows != want)
          return remember({Verdict::No, "matrix is not unitary" + (names.empty() ? "" : " under " + describe(sub)), false});
      }
    }
  }
  return remember({Verdict::Yes, std::to_string(n) + "x" + std::to_string(n) + " matrix is unitary", false});
}

namespace {

Env env_of(const Context& ctx) { return {ctx.gamma, ctx.boxed, ctx.delta}; }

} // namespace

CheckResult TypeChecker::check(const TermPtr& t, const TypePtr& type, const Context& ctx) {
  CheckResult res;
  Impl impl{*this, reg_, res.queries};
  Env env = env_of(ctx);
  for (const auto& [x, A] : ctx.delta)
    if (is_basic(A) && !env.boxed.count(x)) env.boxed[x] = A;
  TermPtr u = uniquify_binders(t);
  try {
    res.derivation = impl.check(env, u, type);
    if (!env.delta.empty()) {
      res.status = CheckStatus::TypeError;
      res.rule = "ax";
      res.message = "linear variables not consumed: " + key_list(env.delta);
      res.loc = t->loc;
      return res;
    }
    res.status = CheckStatus::Ok;
    res.type = type;
  } catch (const Failure& f) {
    res.status = f.status;
    res.rule = f.rule;
    res.message = f.msg;
    res.loc = f.loc;
  } catch (const CannotSynth&) {
    res.status = CheckStatus::TypeError;
    res.message = "cannot infer a type; add an annotation";
    res.loc = t->loc;
  } catch (const RegistryError& e) {
    res.status = CheckStatus::TypeError;
    res.message = e.what();
    res.loc = t->loc;
  }
  return res;
}

CheckResult TypeChecker::synthesize(const TermPtr& t, const Context& ctx) {
  CheckResult res;
  Impl impl{*this, reg_, res.queries};
  Env env = env_of(ctx);
  for (const auto& [x, A] : ctx.delta)
    if (is_basic(A) && !env.boxed.count(x)) env.boxed[x] = A;
  TermPtr u = uniquify_binders(t);
  try {
    auto [T, d] = impl.synth(env, u);
    res.derivation = std::move(d);
    if (!env.delta.empty()) {
      res.status = CheckStatus::TypeError;
      res.rule = "ax";
      res.message = "linear variables not consumed: " + key_list(env.delta);
      return res;
    }
    res.status = CheckStatus::Ok;
    res.type = T;
  } catch (const Failure& f) {
    res.status = f.status;
    res.rule = f.rule;
    res.message = f.msg;
    res.loc = f.loc;
  } catch (const CannotSynth&) {
    res.status = CheckStatus::TypeError;
    res.message = "cannot infer a type; add an annotation";
    res.loc = t->loc;
  } catch (const RegistryError& e) {
    res.status = CheckStatus::TypeError;
    res.message = e.what();
    res.loc = t->loc;
  }
  return res;
}

} // namespace hyrql
