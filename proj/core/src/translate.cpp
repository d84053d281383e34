#include "hyrql/translate.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "hyrql/parser.hpp"

namespace hyrql {

using trs::s_apply;
using trs::s_con;
using trs::s_fn;
using trs::s_var;
using trs::STermPtr;

// ================================================================ admissible form

namespace {

TermPtr keep_hint(TermPtr t, const TermPtr& orig) { return orig->hint.empty() ? t : with_hint(t, orig->hint); }

std::vector<std::string> union_fv(const std::vector<TermPtr>& ts, const std::set<std::string>& minus = {}) {
  std::set<std::string> out;
  for (const auto& t : ts)
    for (const auto& v : free_vars(t))
      if (!minus.count(v)) out.insert(v);
  return {out.begin(), out.end()};
}

TermPtr lambdas(const std::vector<std::string>& xs, TermPtr body) {
  for (std::size_t i = xs.size(); i-- > 0;) body = mk_lambda(xs[i], body);
  return body;
}

std::vector<TermPtr> vars(const std::vector<std::string>& xs) {
  std::vector<TermPtr> out;
  for (const auto& x : xs) out.push_back(mk_var(x));
  return out;
}

class Admissible {
public:
  // Value position: no pattern matching, abstractions closed.
  TermPtr a(const TermPtr& t) {
    switch (t->tag) {
      case Tag::Var:
      case Tag::Ket0:
      case Tag::Ket1: return t;
      case Tag::Cons: {
        std::vector<TermPtr> args;
        for (const auto& k : t->kids) args.push_back(a(k));
        return mk_cons(t->name, std::move(args));
      }
      case Tag::Sum: {
        std::vector<SumItem> items;
        for (const auto& it : t->items) items.push_back({it.amp, a(it.term)});
        return mk_sum(std::move(items), t->orthogonal_annot);
      }
      case Tag::Shape: return mk_shape(a(t->body()));
      case Tag::Unit: return keep_hint(mk_unit(a(t->body())), t);
      case Tag::App: return mk_app(a(t->fn()), a(t->arg()));
      case Tag::QCase:
      case Tag::Match: return lift_case(t);
      case Tag::Lambda: {
        std::set<std::string> none;
        TermPtr lam = keep_hint(mk_lambda(t->name, s(t->body(), none), t->ann), t);
        if (is_closed(t)) return lam;
        const auto& ys = free_vars(t);
        return mk_apps(keep_hint(lambdas(ys, lam), t), vars(ys));
      }
      case Tag::LetRec: {
        if (is_closed(t)) {
          std::set<std::string> none;
          return keep_hint(mk_letrec(t->name, t->name2, s(t->body(), none), t->ann), t);
        }
        // letrec g y1 = \y2..yn x. body[f := g y1..yn], applied to y1..yn.
        std::vector<std::string> ys = free_vars(t);
        std::string g = fresh_name(t->name);
        TermPtr body = substitute(t->body(), {{t->name, mk_apps(mk_var(g), vars(ys))}});
        TermPtr inner = mk_lambda(t->name2, body);
        inner = lambdas({ys.begin() + 1, ys.end()}, inner);
        TermPtr rec = keep_hint(mk_letrec(g, ys[0], inner), t);
        return mk_apps(a(rec), vars(ys));
      }
    }
    return t;
  }

  // Body position: matching on a variable not yet inspected on this path, and open abstractions.
  TermPtr s(const TermPtr& t, std::set<std::string>& matched) {
    switch (t->tag) {
      case Tag::QCase: {
        const TermPtr& x = t->scrutinee();
        if (x->tag != Tag::Var || matched.count(x->name)) return a(t);
        std::set<std::string> m = matched;
        m.insert(x->name);
        TermPtr t0 = s(t->branch0(), m);
        m = matched;
        m.insert(x->name);
        TermPtr t1 = s(t->branch1(), m);
        return mk_qcase(x, t0, t1, t->orthogonal_annot);
      }
      case Tag::Match: {
        const TermPtr& x = t->scrutinee();
        if (x->tag != Tag::Var || matched.count(x->name)) return a(t);
        std::vector<Branch> bs;
        for (const auto& b : t->branches) {
          std::set<std::string> m = matched;
          m.insert(x->name);
          bs.push_back({b.ctor, b.vars, s(b.body, m)});
        }
        return mk_match(x, std::move(bs));
      }
      case Tag::Lambda: return keep_hint(mk_lambda(t->name, s(t->body(), matched), t->ann), t);
      default: return a(t);
    }
  }

private:
  // (\x \xs. case x {...}) s' xs with xs the free variables of the branches.
  TermPtr lift_case(const TermPtr& t) {
    TermPtr scr = a(t->scrutinee());
    std::string x = fresh_name("x");
    TermPtr inner;
    std::vector<std::string> xs;
    if (t->tag == Tag::QCase) {
      xs = union_fv({t->branch0(), t->branch1()});
      inner = mk_qcase(mk_var(x), t->branch0(), t->branch1(), t->orthogonal_annot);
    } else {
      std::set<std::string> out;
      for (const auto& b : t->branches) {
        std::set<std::string> bound(b.vars.begin(), b.vars.end());
        for (const auto& v : union_fv({b.body}, bound)) out.insert(v);
      }
      xs.assign(out.begin(), out.end());
      inner = mk_match(mk_var(x), t->branches);
    }
    std::set<std::string> none;
    TermPtr lam = mk_lambda(x, lambdas(xs, s(inner, none)));
    std::vector<TermPtr> args = {scr};
    for (auto& v : vars(xs)) args.push_back(std::move(v));
    return mk_apps(lam, args);
  }
};

bool fail_why(std::string* why, const std::string& msg) {
  if (why) *why = msg;
  return false;
}

struct AdmissibleCheck {
  std::string* why;

  bool a(const TermPtr& t) {
    switch (t->tag) {
      case Tag::Var:
      case Tag::Ket0:
      case Tag::Ket1: return true;
      case Tag::Cons:
        return std::all_of(t->kids.begin(), t->kids.end(), [&](const TermPtr& k) { return a(k); });
      case Tag::Sum:
        return std::all_of(t->items.begin(), t->items.end(), [&](const SumItem& it) { return a(it.term); });
      case Tag::Shape:
      case Tag::Unit: return a(t->body());
      case Tag::App: {
        Tag f = t->fn()->tag;
        if (f != Tag::Var && f != Tag::Lambda && f != Tag::LetRec && f != Tag::Unit && f != Tag::App)
          return fail_why(why, "function position holds " + pretty(t->fn()));
        return a(t->fn()) && a(t->arg());
      }
      case Tag::Lambda:
      case Tag::LetRec: {
        if (!is_closed(t)) return fail_why(why, "open abstraction in value position: " + pretty(t));
        std::set<std::string> none;
        return s(t->body(), none);
      }
      case Tag::QCase:
      case Tag::Match: return fail_why(why, "pattern matching in value position: " + pretty(t));
    }
    return true;
  }

  bool s(const TermPtr& t, const std::set<std::string>& matched) {
    switch (t->tag) {
      case Tag::QCase:
      case Tag::Match: {
        const TermPtr& x = t->scrutinee();
        if (x->tag != Tag::Var) return fail_why(why, "matching on a non-variable: " + pretty(t));
        if (matched.count(x->name)) return fail_why(why, "variable " + x->name + " is matched twice");
        std::set<std::string> m = matched;
        m.insert(x->name);
        if (t->tag == Tag::QCase) return s(t->branch0(), m) && s(t->branch1(), m);
        return std::all_of(t->branches.begin(), t->branches.end(), [&](const Branch& b) { return s(b.body, m); });
      }
      case Tag::Lambda: return s(t->body(), matched);
      default: return a(t);
    }
  }
};

} // namespace

TermPtr to_admissible(const TermPtr& t) {
  Admissible adm;
  return adm.a(uniquify_binders(t));
}

bool is_admissible(const TermPtr& t, std::string* why) {
  if (!is_closed(t)) return fail_why(why, "term is not closed");
  AdmissibleCheck c{why};
  return c.a(t);
}

// ================================================================ symbol table

std::optional<std::string> SymbolTable::find(const TermPtr& t) const {
  auto it = by_key_.find(alpha_key(t));
  if (it == by_key_.end()) return std::nullopt;
  return entries_[it->second].symbol;
}

void SymbolTable::add(const TermPtr& t, const std::string& symbol) {
  by_key_[alpha_key(t)] = entries_.size();
  entries_.push_back({t, symbol});
}

void SymbolTable::rekey(const TermPtr& from, const TermPtr& to) {
  auto it = by_key_.find(alpha_key(from));
  if (it == by_key_.end()) return;
  std::size_t idx = it->second;
  by_key_.erase(it);
  entries_[idx].term = to;
  by_key_[alpha_key(to)] = idx;
}

// ================================================================ translation

namespace {

[[noreturn]] void invariant(const std::string& what, const TermPtr& t) {
  throw TranslateError("internal invariant violated (" + what + ") at " + pretty(t));
}

const PartialRule& single(const std::vector<PartialRule>& C, const TermPtr& t) {
  if (C.size() != 1 || C[0].lhs || !C[0].sigma.empty()) invariant("expected a single unconditional rule", t);
  return C[0];
}

std::map<std::string, STermPtr> compose(const std::map<std::string, STermPtr>& sigma,
                                        const std::map<std::string, STermPtr>& inner) {
  std::map<std::string, STermPtr> out = sigma;
  for (const auto& [k, v] : inner) out[k] = trs::s_subst(v, sigma);
  return out;
}

std::string stem(const std::string& v) {
  auto q = v.rfind('\'');
  if (q == std::string::npos || q == 0 || q + 1 == v.size()) return v;
  for (std::size_t i = q + 1; i < v.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(v[i]))) return v;
  return v.substr(0, q);
}

bool identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; });
}

} // namespace

Translator::Translator(const Registry& reg) { R_.reg = reg; }

std::string Translator::mint(const std::string& hint) {
  std::string base = identifier(hint) ? hint : "f";
  auto free = [&](const std::string& n) {
    if (taken_.count(n) || n == trs::kUnit || n == trs::kShape || R_.is_constructor(n)) return false;
    return n != trs::kMain || hint == trs::kMain;
  };
  std::string name = base;
  for (unsigned k = 2; !free(name); ++k) name = base + "_" + std::to_string(k);
  taken_.insert(name);
  return name;
}

void Translator::add_rule(trs::Rule r) {
  // Drop the numeric suffixes of generated binder names where that stays unambiguous.
  std::vector<std::string> vs = trs::s_vars(r.lhs);
  for (const auto& v : trs::s_vars(r.rhs))
    if (std::find(vs.begin(), vs.end(), v) == vs.end()) vs.push_back(v);
  std::set<std::string> used;
  std::map<std::string, STermPtr> ren;
  auto clashes = [&](const std::string& n) {
    return used.count(n) || R_.is_constructor(n) || n == trs::kUnit || n == trs::kShape || n == trs::kMain ||
           n == "sym" || n == "con" || (taken_.count(n) && !vars_.count(n));
  };
  for (const auto& v : vs) {
    std::string n = stem(v);
    if (clashes(n)) n = v;
    while (clashes(n)) n += "'";
    used.insert(n);
    if (n != v) ren[v] = s_var(n);
  }
  for (const auto& n : used) {
    taken_.insert(n);
    vars_.insert(n);
  }
  r.lhs = trs::s_subst(r.lhs, ren);
  r.rhs = trs::s_subst(r.rhs, ren);
  R_.rules.push_back(std::move(r));
}

void Translator::install_library() {
  if (library_) return;
  library_ = true;
  auto fn = [](const char* f, std::vector<STermPtr> args) { return s_apply(s_fn(f), std::move(args)); };
  R_.rules.push_back({fn(trs::kUnit, {s_var("x"), s_var("y")}), s_apply(s_var("x"), {s_var("y")}), true});
  R_.rules.push_back({fn(trs::kShape, {s_con("|0>")}), s_con("()"), true});
  R_.rules.push_back({fn(trs::kShape, {s_con("|1>")}), s_con("()"), true});
  for (const auto& c : R_.reg.base_constructors()) {
    std::size_t n = R_.reg.arity(c);
    std::vector<STermPtr> xs, shaped;
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(s_var("x" + std::to_string(i + 1)));
      shaped.push_back(fn(trs::kShape, {xs.back()}));
    }
    std::string shadow = R_.reg.shadow_ctor(c);
    R_.rules.push_back({fn(trs::kShape, {n ? s_con(c, xs) : s_con(c)}), n ? s_con(shadow, shaped) : s_con(shadow), true});
  }
}

std::vector<PartialRule> Translator::translate(const TermPtr& s) {
  switch (s->tag) {
    case Tag::Var: return {{std::nullopt, s_var(s->name), {}}};
    case Tag::Ket0: return {{std::nullopt, s_con("|0>"), {}}};
    case Tag::Ket1: return {{std::nullopt, s_con("|1>"), {}}};
    case Tag::QCase: {
      const TermPtr& x = s->scrutinee();
      if (x->tag != Tag::Var) invariant("qcase on a non-variable", s);
      std::vector<PartialRule> out;
      for (int i = 0; i < 2; ++i) {
        std::map<std::string, STermPtr> sx = {{x->name, s_con(i ? "|1>" : "|0>")}};
        for (auto& pr : translate(s->kids[1 + i])) {
          if (pr.sigma.count(x->name)) invariant("variable matched twice", s);
          pr.sigma = compose(pr.sigma, sx);
          pr.rhs = trs::s_subst(pr.rhs, sx);
          out.push_back(std::move(pr));
        }
      }
      return out;
    }
    case Tag::Match: {
      const TermPtr& x = s->scrutinee();
      if (x->tag != Tag::Var) invariant("match on a non-variable", s);
      std::vector<PartialRule> out;
      for (const auto& b : s->branches) {
        std::vector<STermPtr> pv;
        for (const auto& v : b.vars) pv.push_back(s_var(v));
        STermPtr pat = pv.empty() ? s_con(b.ctor) : s_con(b.ctor, pv);
        for (auto& pr : translate(b.body)) {
          if (pr.sigma.count(x->name)) invariant("variable matched twice", s);
          STermPtr v = trs::s_subst(pat, pr.sigma);
          for (const auto& bv : b.vars) pr.sigma.erase(bv);
          std::map<std::string, STermPtr> sc = {{x->name, v}};
          pr.rhs = trs::s_subst(pr.rhs, sc);
          pr.sigma = compose(pr.sigma, sc);
          out.push_back(std::move(pr));
        }
      }
      return out;
    }
    case Tag::Cons: {
      std::vector<STermPtr> args;
      for (const auto& k : s->kids) args.push_back(single(translate(k), k).rhs);
      return {{std::nullopt, args.empty() ? s_con(s->name) : s_con(s->name, std::move(args)), {}}};
    }
    case Tag::Lambda:
    case Tag::LetRec: {
      bool closed = is_closed(s);
      if (closed)
        if (auto f = S_.find(s)) return {{std::nullopt, s_fn(*f), {}}};
      const std::string& x = s->tag == Tag::Lambda ? s->name : s->name2;
      std::vector<PartialRule> C = translate(s->body());
      for (auto& pr : C) {
        auto it = pr.sigma.find(x);
        std::vector<STermPtr> lhs = {it == pr.sigma.end() ? s_var(x) : it->second};
        if (pr.lhs) lhs.insert(lhs.end(), pr.lhs->begin(), pr.lhs->end());
        pr.lhs = std::move(lhs);
      }
      if (!closed) return C;
      std::string f = mint(s->hint);
      std::map<std::string, STermPtr> tau;
      if (s->tag == Tag::LetRec) tau[s->name] = s_fn(f);
      for (const auto& pr : C) add_rule({s_apply(s_fn(f), *pr.lhs), trs::s_subst(pr.rhs, tau), false});
      S_.add(s, f);
      return {{std::nullopt, s_fn(f), {}}};
    }
    case Tag::Unit: {
      if (auto done = S_.find(s)) return {{std::nullopt, s_apply(s_fn(trs::kUnit), {s_fn(*done)}), {}}};
      TermPtr body = s->body();
      if ((body->tag == Tag::Lambda || body->tag == Tag::LetRec) && body->hint.empty() && !s->hint.empty())
        body = with_hint(body, s->hint);
      std::vector<PartialRule> C = translate(body);
      auto f = S_.find(body);
      if (f && C.size() == 1 && !C[0].lhs && C[0].rhs->kind == trs::SKind::Fn && C[0].rhs->name == *f) {
        S_.rekey(body, s);
        for (auto& pr : C) pr.rhs = trs::s_subst_fn(pr.rhs, {{*f, s_apply(s_fn(trs::kUnit), {s_fn(*f)})}});
      } else {
        for (auto& pr : C) pr.rhs = s_apply(s_fn(trs::kUnit), {pr.rhs});
      }
      return C;
    }
    case Tag::App: {
      STermPtr r1 = single(translate(s->fn()), s->fn()).rhs;
      STermPtr r2 = single(translate(s->arg()), s->arg()).rhs;
      return {{std::nullopt, s_apply(r1, {r2}), {}}};
    }
    case Tag::Sum: {
      std::vector<trs::SItem> items;
      for (const auto& it : s->items) items.push_back({it.amp, single(translate(it.term), it.term).rhs});
      return {{std::nullopt, trs::s_super(std::move(items)), {}}};
    }
    case Tag::Shape: {
      std::vector<PartialRule> C = translate(s->body());
      for (auto& pr : C) pr.rhs = s_apply(s_fn(trs::kShape), {pr.rhs});
      return C;
    }
  }
  invariant("unknown term", s);
}

STermPtr Translator::translate_admissible(const TermPtr& s) {
  std::string why;
  if (!is_admissible(s, &why)) throw TranslateError("term is not admissible: " + why);
  STermPtr r = single(translate(s), s).rhs;
  bool partial_unit = r->kind == trs::SKind::Apply && r->head->kind == trs::SKind::Fn && r->head->name == trs::kUnit &&
                      r->args.size() < 2;
  if (r->kind == trs::SKind::Apply && r->head->kind != trs::SKind::Con && !partial_unit &&
      !(r->head->kind == trs::SKind::Fn && r->head->name == trs::kShape)) {
    std::string f = mint(trs::kMain);
    add_rule({s_fn(f), r, false});
    S_.add(s, f);
    r = s_fn(f);
  }
  install_library();
  return r;
}

STermPtr Translator::interpret(const TermPtr& t) const {
  if (auto f = S_.find(t)) return s_fn(*f);
  switch (t->tag) {
    case Tag::Var: return s_var(t->name);
    case Tag::Ket0: return s_con("|0>");
    case Tag::Ket1: return s_con("|1>");
    case Tag::Cons: {
      std::vector<STermPtr> args;
      for (const auto& k : t->kids) args.push_back(interpret(k));
      return args.empty() ? s_con(t->name) : s_con(t->name, std::move(args));
    }
    case Tag::Sum: {
      std::vector<trs::SItem> items;
      for (const auto& it : t->items) items.push_back({it.amp, interpret(it.term)});
      return trs::s_super(std::move(items));
    }
    case Tag::App: return s_apply(interpret(t->fn()), {interpret(t->arg())});
    case Tag::Shape: return s_apply(s_fn(trs::kShape), {interpret(t->body())});
    case Tag::Unit: return s_apply(s_fn(trs::kUnit), {interpret(t->body())});
    default: break;
  }
  throw TranslateError("no function symbol interprets " + pretty(t));
}

Translation translate_entry(const TermPtr& t, const Registry& reg) {
  Translation out;
  out.admissible = to_admissible(t);
  Translator tr(reg);
  out.root = tr.translate_admissible(out.admissible);
  out.system = tr.system();
  out.symbols = tr.symbols();
  return out;
}

} // namespace hyrql
