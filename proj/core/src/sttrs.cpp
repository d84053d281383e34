#include "hyrql/sttrs.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "hyrql/parser.hpp"
#include "lexer.hpp"

namespace hyrql::trs {

// ================================================================ construction

namespace {

STermPtr make(STerm t) { return std::make_shared<const STerm>(std::move(t)); }

} // namespace

STermPtr s_var(const std::string& name) { return make({SKind::Var, name, nullptr, {}, {}}); }
STermPtr s_fn(const std::string& name) { return make({SKind::Fn, name, nullptr, {}, {}}); }
STermPtr s_con(const std::string& name) { return make({SKind::Con, name, nullptr, {}, {}}); }
STermPtr s_con(const std::string& name, std::vector<STermPtr> args) { return s_apply(s_con(name), std::move(args)); }

STermPtr s_apply(const STermPtr& head, std::vector<STermPtr> args) {
  if (args.empty()) return head;
  if (head->kind == SKind::Apply) {
    std::vector<STermPtr> all = head->args;
    all.insert(all.end(), args.begin(), args.end());
    return make({SKind::Apply, "", head->head, std::move(all), {}});
  }
  return make({SKind::Apply, "", head, std::move(args), {}});
}

STermPtr s_super(std::vector<SItem> items) { return make({SKind::Superpose, "", nullptr, {}, std::move(items)}); }

STermPtr s_nat(unsigned n) {
  STermPtr t = s_con("0");
  for (unsigned i = 0; i < n; ++i) t = s_con("S", {t});
  return t;
}

bool is_ket(const std::string& con) { return con == "|0>" || con == "|1>"; }

// ================================================================ printing

namespace {

std::optional<unsigned> numeral(const STermPtr& t) {
  unsigned n = 0;
  const STerm* cur = t.get();
  while (cur->kind == SKind::Apply && cur->head->kind == SKind::Con && cur->head->name == "S" && cur->args.size() == 1) {
    ++n;
    cur = cur->args[0].get();
  }
  if (cur->kind == SKind::Con && cur->name == "0") return n;
  return std::nullopt;
}

bool is_con_app(const STermPtr& t, const char* name, std::size_t n) {
  return t->kind == SKind::Apply && t->head->kind == SKind::Con && t->head->name == name && t->args.size() == n;
}

// ctx 0: anything; 1: no bare sums; 2: no bare sums or cons cells.
void print_to(std::string& out, const STermPtr& t, int ctx) {
  switch (t->kind) {
    case SKind::Var:
    case SKind::Fn:
    case SKind::Con:
      out += t->name;
      return;
    case SKind::Superpose: {
      if (ctx > 0) out += "(";
      if (t->items.empty()) out += "(0)*()";
      for (std::size_t i = 0; i < t->items.size(); ++i) {
        if (i) out += " + ";
        out += "(" + t->items[i].amp.str() + ")*";
        print_to(out, t->items[i].term, 1);
      }
      if (ctx > 0) out += ")";
      return;
    }
    case SKind::Apply: {
      if (auto n = numeral(t)) {
        out += std::to_string(*n);
        return;
      }
      if (is_con_app(t, "::", 2)) {
        if (ctx > 1) out += "(";
        print_to(out, t->args[0], 2);
        out += " :: ";
        print_to(out, t->args[1], 1);
        if (ctx > 1) out += ")";
        return;
      }
      if (is_con_app(t, ",", 2)) {
        out += "(";
        print_to(out, t->args[0], 0);
        out += ", ";
        print_to(out, t->args[1], 0);
        out += ")";
        return;
      }
      print_to(out, t->head, 2);
      out += "(";
      for (std::size_t i = 0; i < t->args.size(); ++i) {
        if (i) out += ", ";
        print_to(out, t->args[i], 0);
      }
      out += ")";
      return;
    }
  }
}

} // namespace

std::string print(const STermPtr& t) {
  std::string out;
  print_to(out, t, 0);
  return out;
}

bool s_equal(const STermPtr& a, const STermPtr& b) {
  if (a == b) return true;
  if (a->kind != b->kind || a->name != b->name) return false;
  switch (a->kind) {
    case SKind::Var:
    case SKind::Fn:
    case SKind::Con: return true;
    case SKind::Apply:
      if (a->args.size() != b->args.size() || !s_equal(a->head, b->head)) return false;
      for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!s_equal(a->args[i], b->args[i])) return false;
      return true;
    case SKind::Superpose:
      if (a->items.size() != b->items.size()) return false;
      for (std::size_t i = 0; i < a->items.size(); ++i)
        if (a->items[i].amp != b->items[i].amp || !s_equal(a->items[i].term, b->items[i].term)) return false;
      return true;
  }
  return false;
}

namespace {

void collect_vars(const STermPtr& t, std::vector<std::string>& out, bool dedupe) {
  switch (t->kind) {
    case SKind::Var:
      if (!dedupe || std::find(out.begin(), out.end(), t->name) == out.end()) out.push_back(t->name);
      return;
    case SKind::Fn:
    case SKind::Con: return;
    case SKind::Apply:
      collect_vars(t->head, out, dedupe);
      for (const auto& a : t->args) collect_vars(a, out, dedupe);
      return;
    case SKind::Superpose:
      for (const auto& it : t->items) collect_vars(it.term, out, dedupe);
      return;
  }
}

STermPtr map_leaves(const STermPtr& t, const std::function<STermPtr(const STermPtr&)>& leaf) {
  switch (t->kind) {
    case SKind::Var:
    case SKind::Fn:
    case SKind::Con: return leaf(t);
    case SKind::Apply: {
      std::vector<STermPtr> args;
      for (const auto& a : t->args) args.push_back(map_leaves(a, leaf));
      return s_apply(map_leaves(t->head, leaf), std::move(args));
    }
    case SKind::Superpose: {
      std::vector<SItem> items;
      for (const auto& it : t->items) items.push_back({it.amp, map_leaves(it.term, leaf)});
      return s_super(std::move(items));
    }
  }
  return t;
}

} // namespace

std::vector<std::string> s_vars(const STermPtr& t) {
  std::vector<std::string> out;
  collect_vars(t, out, true);
  return out;
}

STermPtr s_subst(const STermPtr& t, const std::map<std::string, STermPtr>& sigma) {
  if (sigma.empty()) return t;
  return map_leaves(t, [&](const STermPtr& l) {
    if (l->kind != SKind::Var) return l;
    auto it = sigma.find(l->name);
    return it == sigma.end() ? l : it->second;
  });
}

STermPtr s_subst_fn(const STermPtr& t, const std::map<std::string, STermPtr>& sigma) {
  if (sigma.empty()) return t;
  return map_leaves(t, [&](const STermPtr& l) {
    if (l->kind != SKind::Fn) return l;
    auto it = sigma.find(l->name);
    return it == sigma.end() ? l : it->second;
  });
}

bool mentions_fn(const STermPtr& t, const std::string& f) {
  switch (t->kind) {
    case SKind::Fn: return t->name == f;
    case SKind::Var:
    case SKind::Con: return false;
    case SKind::Apply:
      return mentions_fn(t->head, f) ||
             std::any_of(t->args.begin(), t->args.end(), [&](const STermPtr& a) { return mentions_fn(a, f); });
    case SKind::Superpose:
      return std::any_of(t->items.begin(), t->items.end(), [&](const SItem& it) { return mentions_fn(it.term, f); });
  }
  return false;
}

std::size_t s_size(const STermPtr& t) {
  switch (t->kind) {
    case SKind::Var:
    case SKind::Fn:
    case SKind::Con: return 1;
    case SKind::Apply: {
      std::size_t n = s_size(t->head);
      for (const auto& a : t->args) n += s_size(a);
      return n;
    }
    case SKind::Superpose: {
      std::size_t n = 1;
      for (const auto& it : t->items) n += s_size(it.term);
      return n;
    }
  }
  return 1;
}

std::string rule_str(const Rule& r) { return print(r.lhs) + " -> " + print(r.rhs); }

// ================================================================ systems

namespace {

const STerm* lhs_head(const Rule& r) {
  if (r.lhs->kind == SKind::Fn) return r.lhs.get();
  if (r.lhs->kind == SKind::Apply && r.lhs->head->kind == SKind::Fn) return r.lhs->head.get();
  return nullptr;
}

std::size_t lhs_arity(const Rule& r) { return r.lhs->kind == SKind::Apply ? r.lhs->args.size() : 0; }

} // namespace

std::vector<std::string> Sttrs::symbols() const {
  std::vector<std::string> out;
  for (const auto& r : rules)
    if (const STerm* h = lhs_head(r))
      if (std::find(out.begin(), out.end(), h->name) == out.end()) out.push_back(h->name);
  return out;
}

std::optional<std::size_t> Sttrs::arity(const std::string& f) const {
  for (const auto& r : rules)
    if (const STerm* h = lhs_head(r); h && h->name == f) return lhs_arity(r);
  return std::nullopt;
}

bool Sttrs::is_constructor(const std::string& name) const { return is_ket(name) || reg.find(name) != nullptr; }

std::vector<Rule> Sttrs::program_rules() const {
  std::vector<Rule> out;
  for (const auto& r : rules)
    if (!r.library) out.push_back(r);
  return out;
}

std::vector<Rule> Sttrs::used_rules() const {
  std::vector<Rule> out = program_rules();
  std::set<std::string> used;
  for (const auto& r : out)
    for (const char* f : {kUnit, kShape})
      if (mentions_fn(r.lhs, f) || mentions_fn(r.rhs, f)) used.insert(f);
  for (const auto& r : rules) {
    if (!r.library) continue;
    const STerm* h = lhs_head(r);
    if (h && used.count(h->name)) out.push_back(r);
  }
  return out;
}

// ================================================================ types

namespace {

std::string type_prec(const TypePtr& t, int prec) {
  switch (t->kind) {
    case TypeKind::Qbit: return "Qbit";
    case TypeKind::Param: return "'" + t->name;
    case TypeKind::Data: {
      if (t->name == "list" && t->args.size() == 1) return "[" + type_prec(t->args[0], 0) + "]";
      if (t->name == "tensor" && t->args.size() == 2) {
        std::string s = type_prec(t->args[0], 1) + " * " + type_prec(t->args[1], 2);
        return prec > 1 ? "(" + s + ")" : s;
      }
      if (t->args.empty()) return t->name;
      std::string s = t->name + "(";
      for (std::size_t i = 0; i < t->args.size(); ++i) s += (i ? ", " : "") + type_prec(t->args[i], 0);
      return s + ")";
    }
    default: {
      std::string s = type_prec(t->dom(), 1) + " -> " + type_prec(t->cod(), 0);
      return prec > 0 ? "(" + s + ")" : s;
    }
  }
}

} // namespace

std::string stype_str(const TypePtr& t, std::size_t arity) {
  std::vector<TypePtr> doms;
  TypePtr cur = t;
  while (doms.size() < arity && is_arrow(cur)) {
    doms.push_back(cur->dom());
    cur = cur->cod();
  }
  if (doms.empty()) return type_prec(t, 0);
  std::string s;
  for (std::size_t i = 0; i < doms.size(); ++i) s += (i ? " x " : "") + type_prec(doms[i], 1);
  return s + " -> " + type_prec(cur, 0);
}

namespace {

struct TypeClash {
  std::string msg;
};

class Inference {
public:
  explicit Inference(const Sttrs& R) : R_(R) {}

  TypePtr fresh() { return param_type("?" + std::to_string(counter_++)); }

  TypePtr resolve(const TypePtr& t) const {
    if (t->kind == TypeKind::Param) {
      auto it = subst_.find(t->name);
      return it == subst_.end() ? t : resolve(it->second);
    }
    if (t->args.empty()) return t;
    std::vector<TypePtr> args;
    for (const auto& a : t->args) args.push_back(resolve(a));
    Type c = *t;
    c.args = std::move(args);
    return std::make_shared<const Type>(std::move(c));
  }

  void unify(const TypePtr& a0, const TypePtr& b0) {
    TypePtr a = shallow(a0), b = shallow(b0);
    if (a->kind == TypeKind::Param && b->kind == TypeKind::Param && a->name == b->name) return;
    if (a->kind == TypeKind::Param) return bind(a->name, b);
    if (b->kind == TypeKind::Param) return bind(b->name, a);
    bool arrow_a = is_arrow(a), arrow_b = is_arrow(b);
    if (arrow_a != arrow_b || (!arrow_a && (a->kind != b->kind || a->name != b->name)) || a->args.size() != b->args.size())
      throw TypeClash{type_prec(resolve(a0), 0) + " vs " + type_prec(resolve(b0), 0)};
    for (std::size_t i = 0; i < a->args.size(); ++i) unify(a->args[i], b->args[i]);
  }

  TypePtr symbol(const std::string& f) {
    auto it = sym_.find(f);
    if (it != sym_.end()) return it->second;
    TypePtr t;
    if (auto d = R_.declared.find(f); d != R_.declared.end()) {
      std::map<std::string, TypePtr> inst;
      t = instantiate(d->second, inst);
    } else {
      t = fresh();
    }
    sym_[f] = t;
    return t;
  }

  TypePtr constructor(const std::string& c, std::size_t nargs) {
    if (is_ket(c)) return qbit_type();
    const ConstructorSig* sig = R_.reg.find(c);
    if (!sig) throw TypeClash{"unknown constructor '" + c + "'"};
    const TypeFamily* fam = R_.reg.family(sig->type_name);
    std::map<std::string, TypePtr> inst;
    std::vector<TypePtr> params;
    for (const auto& p : fam->params) {
      inst[p] = fresh();
      params.push_back(inst[p]);
    }
    TypePtr res = data_type(sig->type_name, params);
    if (nargs > sig->arg_types.size())
      throw TypeClash{"constructor '" + c + "' applied to " + std::to_string(nargs) + " arguments"};
    for (std::size_t i = sig->arg_types.size(); i-- > 0;) res = class_arrow(instantiate(sig->arg_types[i], inst), res);
    return res;
  }

  TypePtr infer(const STermPtr& t, std::map<std::string, TypePtr>& env) {
    switch (t->kind) {
      case SKind::Var: {
        auto it = env.find(t->name);
        if (it != env.end()) return it->second;
        return env[t->name] = fresh();
      }
      case SKind::Fn: {
        if (t->name == kUnit) {
          TypePtr a = fresh(), b = fresh();
          return class_arrow(class_arrow(a, b), class_arrow(a, b));
        }
        if (t->name == kShape) {
          TypePtr a = fresh(), b = fresh();
          shapes_.push_back({a, b});
          return class_arrow(a, b);
        }
        return symbol(t->name);
      }
      case SKind::Con: return constructor(t->name, 0);
      case SKind::Apply: {
        TypePtr th = t->head->kind == SKind::Con ? constructor(t->head->name, t->args.size()) : infer(t->head, env);
        for (const auto& a : t->args) {
          TypePtr ta = infer(a, env);
          TypePtr r = fresh();
          unify(th, class_arrow(ta, r));
          th = r;
        }
        return th;
      }
      case SKind::Superpose: {
        TypePtr ty = fresh();
        for (const auto& it : t->items) unify(ty, infer(it.term, env));
        return ty;
      }
    }
    return fresh();
  }

  // Shape results are determined once the argument type is known.
  void settle_shapes() {
    bool progress = true;
    while (progress) {
      progress = false;
      for (auto it = shapes_.begin(); it != shapes_.end();) {
        TypePtr a = resolve(it->first);
        if (has_vars(a) || !is_basic(a)) {
          ++it;
          continue;
        }
        unify(it->second, R_.reg.shape_type(a));
        it = shapes_.erase(it);
        progress = true;
      }
    }
  }

  std::map<std::string, TypePtr> symbol_types() const {
    std::map<std::string, TypePtr> out;
    for (const auto& [f, t] : sym_) out[f] = rename_vars(resolve(t));
    return out;
  }

private:
  TypePtr shallow(const TypePtr& t) const {
    if (t->kind != TypeKind::Param) return t;
    auto it = subst_.find(t->name);
    return it == subst_.end() ? t : shallow(it->second);
  }

  void bind(const std::string& v, const TypePtr& t) {
    if (occurs(v, resolve(t))) throw TypeClash{"infinite type for " + v};
    subst_[v] = t;
  }

  static bool occurs(const std::string& v, const TypePtr& t) {
    if (t->kind == TypeKind::Param) return t->name == v;
    return std::any_of(t->args.begin(), t->args.end(), [&](const TypePtr& a) { return occurs(v, a); });
  }

  static bool has_vars(const TypePtr& t) {
    if (t->kind == TypeKind::Param) return true;
    return std::any_of(t->args.begin(), t->args.end(), has_vars);
  }

  TypePtr instantiate(const TypePtr& t, std::map<std::string, TypePtr>& inst) {
    if (t->kind == TypeKind::Param) {
      auto it = inst.find(t->name);
      if (it != inst.end()) return it->second;
      return inst[t->name] = fresh();
    }
    if (t->args.empty()) return t;
    Type c = *t;
    for (auto& a : c.args) a = instantiate(a, inst);
    if (is_arrow(t)) c.kind = TypeKind::ClassArrow;
    return std::make_shared<const Type>(std::move(c));
  }

  static TypePtr rename_vars(const TypePtr& t) {
    std::map<std::string, std::string> names;
    std::function<TypePtr(const TypePtr&)> go = [&](const TypePtr& u) -> TypePtr {
      if (u->kind == TypeKind::Param) {
        auto it = names.find(u->name);
        if (it == names.end()) {
          std::size_t k = names.size();
          std::string n(1, static_cast<char>('a' + k % 26));
          if (k >= 26) n += std::to_string(k / 26);
          it = names.emplace(u->name, n).first;
        }
        return param_type(it->second);
      }
      if (u->args.empty()) return u;
      Type c = *u;
      for (auto& a : c.args) a = go(a);
      return std::make_shared<const Type>(std::move(c));
    };
    return go(t);
  }

  const Sttrs& R_;
  std::map<std::string, TypePtr> subst_;
  std::map<std::string, TypePtr> sym_;
  std::vector<std::pair<TypePtr, TypePtr>> shapes_;
  int counter_ = 0;
};

bool is_pattern(const STermPtr& p, const Sttrs& R) {
  switch (p->kind) {
    case SKind::Var: return true;
    case SKind::Con: return R.is_constructor(p->name);
    case SKind::Apply:
      return p->head->kind == SKind::Con && R.is_constructor(p->head->name) &&
             std::all_of(p->args.begin(), p->args.end(), [&](const STermPtr& a) { return is_pattern(a, R); });
    default: return false;
  }
}

bool overlap(const STermPtr& p, const STermPtr& q) {
  if (p->kind == SKind::Var || q->kind == SKind::Var) return true;
  const std::string& cp = p->kind == SKind::Con ? p->name : p->head->name;
  const std::string& cq = q->kind == SKind::Con ? q->name : q->head->name;
  if (cp != cq) return false;
  std::size_t np = p->kind == SKind::Apply ? p->args.size() : 0;
  std::size_t nq = q->kind == SKind::Apply ? q->args.size() : 0;
  if (np != nq) return false;
  for (std::size_t i = 0; i < np; ++i)
    if (!overlap(p->args[i], q->args[i])) return false;
  return true;
}

std::string rule_label(std::size_t i, const Rule& r) {
  return "rule " + std::to_string(i + 1) + " `" + rule_str(r) + "`";
}

} // namespace

WellFormedResult well_formed(const Sttrs& R) {
  WellFormedResult res;
  auto violation = [&](const std::string& msg) {
    res.ok = false;
    res.violation = msg;
    return res;
  };
  std::map<std::string, std::pair<std::size_t, std::size_t>> arities;  // symbol -> (arity, first rule)
  for (std::size_t i = 0; i < R.rules.size(); ++i) {
    const Rule& r = R.rules[i];
    const STerm* h = lhs_head(r);
    if (!h) return violation(rule_label(i, r) + ": left-hand side is not headed by a function symbol");
    if (R.is_constructor(h->name)) return violation(rule_label(i, r) + ": '" + h->name + "' is a constructor");
    if (r.lhs->kind == SKind::Apply)
      for (const auto& p : r.lhs->args)
        if (!is_pattern(p, R)) return violation(rule_label(i, r) + ": argument " + print(p) + " is not a pattern");
    std::vector<std::string> occ;
    collect_vars(r.lhs, occ, false);
    std::set<std::string> seen;
    for (const auto& v : occ)
      if (!seen.insert(v).second) return violation(rule_label(i, r) + ": variable '" + v + "' occurs twice on the left");
    for (const auto& v : s_vars(r.rhs))
      if (!seen.count(v)) return violation(rule_label(i, r) + ": variable '" + v + "' does not occur on the left");
    auto [it, inserted] = arities.emplace(h->name, std::make_pair(lhs_arity(r), i));
    if (!inserted && it->second.first != lhs_arity(r))
      return violation(rule_label(i, r) + ": '" + h->name + "' used with arity " + std::to_string(lhs_arity(r)) +
                       " but " + rule_label(it->second.second, R.rules[it->second.second]) + " uses arity " +
                       std::to_string(it->second.first));
  }
  for (std::size_t i = 0; i < R.rules.size(); ++i) {
    for (std::size_t j = i + 1; j < R.rules.size(); ++j) {
      const Rule &a = R.rules[i], &b = R.rules[j];
      if (lhs_head(a)->name != lhs_head(b)->name) continue;
      bool ov = true;
      for (std::size_t k = 0; k < lhs_arity(a) && ov; ++k) ov = overlap(a.lhs->args[k], b.lhs->args[k]);
      if (ov) return violation(rule_label(i, a) + " overlaps " + rule_label(j, b));
    }
  }
  Inference inf(R);
  for (std::size_t i = 0; i < R.rules.size(); ++i) {
    const Rule& r = R.rules[i];
    if (r.library) continue;
    std::map<std::string, TypePtr> env;
    try {
      TypePtr tl = inf.infer(r.lhs, env);
      TypePtr tr = inf.infer(r.rhs, env);
      inf.unify(tl, tr);
      inf.settle_shapes();
    } catch (const TypeClash& e) {
      return violation(rule_label(i, r) + ": ill-typed (" + e.msg + ")");
    } catch (const RegistryError& e) {
      return violation(rule_label(i, r) + ": " + e.what());
    }
  }
  res.types = inf.symbol_types();
  res.types.erase(kUnit);
  res.types.erase(kShape);
  res.ok = true;
  return res;
}

// ================================================================ rewriting

std::string rewrite_status_name(RewriteStatus s) {
  switch (s) {
    case RewriteStatus::Value: return "value";
    case RewriteStatus::Stuck: return "stuck";
    case RewriteStatus::FuelExhausted: return "fuel-exhausted";
  }
  return "?";
}

namespace {

bool linear_head(const STermPtr& h) { return !(h->kind == SKind::Fn && (h->name == kUnit || h->name == kShape)); }

std::vector<SItem> merge(std::vector<SItem> items) {
  std::map<std::string, SItem> acc;
  for (auto& it : items) {
    std::string k = print(it.term);
    auto found = acc.find(k);
    if (found == acc.end()) acc.emplace(std::move(k), std::move(it));
    else found->second.amp += it.amp;
  }
  std::vector<SItem> out;
  for (auto& [k, it] : acc)
    if (!it.amp.is_zero()) out.push_back(std::move(it));
  return out;
}

STermPtr from_items(std::vector<SItem> items) {
  if (items.size() == 1 && items[0].amp.is_one()) return items[0].term;
  return s_super(std::move(items));
}

} // namespace

std::vector<SItem> decompose(const STermPtr& t) {
  switch (t->kind) {
    case SKind::Var:
    case SKind::Fn:
    case SKind::Con: return {{Amplitude(1), t}};
    case SKind::Superpose: {
      std::vector<SItem> out;
      for (const auto& it : t->items)
        for (auto& sub : decompose(it.term)) out.push_back({it.amp * sub.amp, std::move(sub.term)});
      return out;
    }
    case SKind::Apply: {
      if (!linear_head(t->head)) {
        std::vector<STermPtr> args;
        for (const auto& a : t->args) args.push_back(normalize(a));
        return {{Amplitude(1), s_apply(t->head, std::move(args))}};
      }
      struct Partial {
        Amplitude amp;
        std::vector<STermPtr> args;
      };
      std::vector<Partial> acc = {{Amplitude(1), {}}};
      for (const auto& a : t->args) {
        std::vector<SItem> parts = decompose(a);
        std::vector<Partial> next;
        next.reserve(acc.size() * parts.size());
        for (const auto& p : acc)
          for (const auto& q : parts) {
            Partial n{p.amp * q.amp, p.args};
            n.args.push_back(q.term);
            next.push_back(std::move(n));
          }
        acc = std::move(next);
      }
      std::vector<SItem> out;
      for (const auto& h : decompose(t->head))
        for (auto& p : acc) out.push_back({h.amp * p.amp, s_apply(h.term, p.args)});
      return out;
    }
  }
  return {};
}

STermPtr normalize(const STermPtr& t) { return from_items(merge(decompose(t))); }

Rewriter::Rewriter(const Sttrs& R) : R_(R) {
  for (std::size_t i = 0; i < R.rules.size(); ++i) {
    const STerm* h = lhs_head(R.rules[i]);
    if (!h) continue;
    by_symbol_[h->name].push_back(i);
    arity_.emplace(h->name, lhs_arity(R.rules[i]));
  }
}

bool Rewriter::value(const STermPtr& t) const {
  switch (t->kind) {
    case SKind::Var:
    case SKind::Con: return true;
    case SKind::Fn: {
      auto it = arity_.find(t->name);
      return it == arity_.end() || it->second > 0;
    }
    case SKind::Superpose:
      return std::all_of(t->items.begin(), t->items.end(), [&](const SItem& it) { return value(it.term); });
    case SKind::Apply: {
      if (!std::all_of(t->args.begin(), t->args.end(), [&](const STermPtr& a) { return value(a); })) return false;
      if (t->head->kind != SKind::Fn) return t->head->kind != SKind::Superpose;
      auto it = arity_.find(t->head->name);
      if (t->head->name == kShape || t->head->name == kUnit)
        return it != arity_.end() && t->args.size() < it->second;
      return it != arity_.end() && t->args.size() < it->second;
    }
  }
  return false;
}

bool is_value(const Sttrs& R, const STermPtr& t) {
  Rewriter rw(R);
  StepOutcome o = rw.step(t);
  return o.kind == StepOutcome::AtValue;
}

namespace {

bool match(const STermPtr& p, const STermPtr& t, std::map<std::string, STermPtr>& sigma) {
  switch (p->kind) {
    case SKind::Var: sigma[p->name] = t; return true;
    case SKind::Con: return t->kind == SKind::Con && t->name == p->name;
    case SKind::Apply: {
      if (t->kind != SKind::Apply || t->head->kind != SKind::Con || t->head->name != p->head->name ||
          t->args.size() != p->args.size())
        return false;
      for (std::size_t i = 0; i < p->args.size(); ++i)
        if (!match(p->args[i], t->args[i], sigma)) return false;
      return true;
    }
    default: return false;
  }
}

} // namespace

std::optional<STermPtr> Rewriter::fire(const std::string& f, const std::vector<STermPtr>& args, std::size_t& used) const {
  auto it = by_symbol_.find(f);
  if (it == by_symbol_.end()) return std::nullopt;
  used = arity_.at(f);
  for (std::size_t idx : it->second) {
    const Rule& r = R_.rules[idx];
    std::map<std::string, STermPtr> sigma;
    bool ok = true;
    for (std::size_t k = 0; k < used && ok; ++k) ok = match(r.lhs->args[k], args[k], sigma);
    if (ok) return s_subst(r.rhs, sigma);
  }
  return std::nullopt;
}

StepOutcome Rewriter::step(const STermPtr& t) const { return step_super(t); }

StepOutcome Rewriter::step_super(const STermPtr& t) const {
  std::vector<SItem> items = merge(decompose(t));
  if (items.empty()) return {StepOutcome::Stuck, t, "the superposition is the zero vector"};
  if (items.size() == 1 && items[0].amp.is_one()) return step_pure(items[0].term);
  bool any = false;
  std::vector<SItem> next;
  for (const auto& it : items) {
    if (value(it.term)) {
      next.push_back(it);
      continue;
    }
    StepOutcome o = step_pure(it.term);
    if (o.kind == StepOutcome::Stuck) return o;
    if (o.kind == StepOutcome::Stepped) any = true;
    next.push_back({it.amp, o.term});
  }
  if (!any) return {StepOutcome::AtValue, from_items(items), ""};
  return {StepOutcome::Stepped, normalize(s_super(std::move(next))), ""};
}

StepOutcome Rewriter::step_pure(const STermPtr& t) const {
  switch (t->kind) {
    case SKind::Var:
    case SKind::Con: return {StepOutcome::AtValue, t, ""};
    case SKind::Superpose: return step_super(t);
    case SKind::Fn: {
      auto it = arity_.find(t->name);
      if (it == arity_.end() || it->second > 0) return {StepOutcome::AtValue, t, ""};
      std::size_t used = 0;
      if (auto r = fire(t->name, {}, used)) return {StepOutcome::Stepped, *r, ""};
      return {StepOutcome::Stuck, t, "no rule for " + t->name};
    }
    case SKind::Apply: break;
  }
  for (std::size_t i = t->args.size(); i-- > 0;) {
    if (value(t->args[i])) continue;
    StepOutcome o = t->args[i]->kind == SKind::Superpose ? step_super(t->args[i]) : step_pure(t->args[i]);
    if (o.kind == StepOutcome::Stuck) return o;
    if (o.kind == StepOutcome::AtValue) continue;
    std::vector<STermPtr> args = t->args;
    args[i] = o.term;
    return {StepOutcome::Stepped, s_apply(t->head, std::move(args)), ""};
  }
  if (t->head->kind != SKind::Fn) return {StepOutcome::AtValue, t, ""};
  const std::string& f = t->head->name;
  if (f == kShape && !t->args.empty() && t->args[0]->kind == SKind::Superpose) {
    const auto& items = t->args[0]->items;
    if (items.empty()) return {StepOutcome::Stuck, t, "shape of the zero vector"};
    bool qubit = std::all_of(items.begin(), items.end(),
                             [](const SItem& it) { return it.term->kind == SKind::Con && is_ket(it.term->name); });
    // Components of a well-typed superposition share their shape.
    STermPtr r = qubit ? s_con("()") : s_apply(s_fn(kShape), {items[0].term});
    return {StepOutcome::Stepped, s_apply(r, {t->args.begin() + 1, t->args.end()}), ""};
  }
  auto ar = arity_.find(f);
  if (ar == arity_.end()) return {StepOutcome::Stuck, t, "no rules define '" + f + "'"};
  if (t->args.size() < ar->second) return {StepOutcome::AtValue, t, ""};
  std::size_t used = 0;
  if (auto r = fire(f, t->args, used))
    return {StepOutcome::Stepped, s_apply(*r, {t->args.begin() + static_cast<std::ptrdiff_t>(used), t->args.end()}), ""};
  return {StepOutcome::Stuck, t, "no rule of '" + f + "' matches " + print(t)};
}

RewriteResult rewrite_star(const Sttrs& R, const STermPtr& t, std::size_t fuel, bool trace) {
  Rewriter rw(R);
  RewriteResult res;
  STermPtr cur = normalize(t);
  if (trace) res.trace.push_back(cur);
  for (;;) {
    StepOutcome o = rw.step(cur);
    if (o.kind == StepOutcome::AtValue) {
      res.status = RewriteStatus::Value;
      break;
    }
    if (o.kind == StepOutcome::Stuck) {
      res.status = RewriteStatus::Stuck;
      res.diagnostic = o.diagnostic;
      break;
    }
    if (res.steps == fuel) {
      res.status = RewriteStatus::FuelExhausted;
      res.diagnostic = "fuel of " + std::to_string(fuel) + " rewrite steps exhausted";
      break;
    }
    cur = o.term;
    ++res.steps;
    if (trace) res.trace.push_back(cur);
  }
  res.term = cur;
  return res;
}

// ================================================================ text format

std::string to_trs(const Sttrs& R, bool prune_library) {
  Sttrs out;
  out.reg = R.reg;
  out.declared = R.declared;
  out.rules = prune_library ? R.used_rules() : R.rules;
  std::ostringstream os;
  for (const auto& fam : out.reg.declared_types()) {
    for (const auto& c : out.reg.constructors_of(fam)) {
      const ConstructorSig* sig = out.reg.find(c);
      TypePtr t = data_type(fam);
      for (std::size_t i = sig->arg_types.size(); i-- > 0;) t = class_arrow(sig->arg_types[i], t);
      os << "con " << c << " : " << stype_str(t, sig->arg_types.size()) << ";\n";
    }
  }
  WellFormedResult wf = well_formed(out);
  bool any_sym = false;
  for (const auto& f : out.symbols()) {
    if (f == kUnit || f == kShape) continue;
    TypePtr t;
    if (auto it = wf.types.find(f); it != wf.types.end()) t = it->second;
    else if (auto d = out.declared.find(f); d != out.declared.end()) t = d->second;
    if (!t) continue;
    os << "sym " << f << " : " << stype_str(t, out.arity(f).value_or(0)) << ";\n";
    any_sym = true;
  }
  if (any_sym || !out.reg.declared_types().empty()) os << "\n";
  for (const auto& r : out.rules) os << rule_str(r) << ";\n";
  return os.str();
}

namespace {

using detail::Tok;
using detail::Token;
using detail::TokenStream;

class TrsParser {
public:
  TrsParser(TokenStream ts, Sttrs& R, std::set<std::string> fns) : ts_(std::move(ts)), R_(R), fns_(std::move(fns)) {
    fns_.insert(kUnit);
    fns_.insert(kShape);
  }

  TokenStream& stream() { return ts_; }

  [[noreturn]] void fail_at(SourceLoc loc, const std::string& msg) const { throw TrsError(loc, msg); }

  // ---------------------------------------------------------------- types

  TypePtr stype() {
    TypePtr d = dtype();
    if (ts_.is_ident("x")) {
      std::vector<TypePtr> doms = {d};
      while (ts_.is_ident("x")) {
        ts_.next();
        doms.push_back(dtype());
      }
      ts_.expect_sym("->");
      TypePtr r = stype();
      for (std::size_t i = doms.size(); i-- > 0;) r = class_arrow(doms[i], r);
      return r;
    }
    if (ts_.accept_sym("->")) return class_arrow(d, stype());
    return d;
  }

  TypePtr dtype() {
    TypePtr a = datom();
    while (ts_.accept_sym("*")) a = tensor_type(a, datom());
    return a;
  }

  TypePtr datom() {
    const Token tok = ts_.peek();
    if (ts_.accept_sym("[")) {
      TypePtr e = stype();
      ts_.expect_sym("]");
      return list_type(e);
    }
    if (ts_.accept_sym("(")) {
      TypePtr t = stype();
      ts_.expect_sym(")");
      return t;
    }
    if (tok.kind != Tok::Ident) ts_.fail("expected type");
    ts_.next();
    if (tok.text == "Qbit") return qbit_type();
    if (tok.text[0] == '\'') return param_type(tok.text.substr(1));
    std::string name = tok.text;
    if (name[0] == '~' && !R_.reg.family(name)) {
      std::string base = name.substr(1);
      if (R_.reg.family(base)) R_.reg.shape_type(data_type(base));
    }
    const TypeFamily* fam = R_.reg.family(name);
    if (!fam && name != pending_family_) fail_at(tok.loc, "unknown type '" + name + "'");
    if (fam && !fam->params.empty()) fail_at(tok.loc, "type '" + name + "' needs parameters");
    return data_type(name);
  }

  // ---------------------------------------------------------------- terms

  STermPtr term() {
    std::vector<SItem> items;
    bool explicit_amp = false;
    bool neg = ts_.accept_sym("-");
    items.push_back(item(neg, explicit_amp));
    while (ts_.is_sym("+") || ts_.is_sym("-")) {
      bool n = ts_.next().text == "-";
      items.push_back(item(n, explicit_amp));
    }
    if (items.size() == 1 && !explicit_amp && !neg) return items[0].term;
    return s_super(std::move(items));
  }

  SItem item(bool negate, bool& explicit_amp) {
    if (ts_.is_sym("(")) {
      std::size_t depth = 0, k = 0;
      for (;; ++k) {
        const Token& t = ts_.peek(k);
        if (t.kind == Tok::End) break;
        if (t.kind == Tok::Sym && t.text == "(") ++depth;
        if (t.kind == Tok::Sym && t.text == ")" && --depth == 0) break;
      }
      if (ts_.is_sym("*", k + 1)) {
        SourceLoc loc = ts_.peek().loc;
        std::string text;
        ts_.next();
        for (std::size_t i = 1; i < k; ++i) text += ts_.next().text + " ";
        ts_.expect_sym(")");
        ts_.expect_sym("*");
        Amplitude a;
        try {
          a = parse_amplitude(text);
        } catch (const std::exception& e) {
          fail_at(loc, std::string("bad amplitude: ") + e.what());
        }
        explicit_amp = true;
        STermPtr t = cons();
        return {negate ? -a : a, t};
      }
    }
    STermPtr t = cons();
    return {negate ? Amplitude(-1) : Amplitude(1), t};
  }

  STermPtr cons() {
    STermPtr lhs = app();
    if (ts_.accept_sym("::")) return s_con("::", {lhs, cons()});
    return lhs;
  }

  STermPtr app() {
    const Token tok = ts_.peek();
    STermPtr head = atom();
    if (tok.kind == Tok::Ident && ts_.is_sym("(")) {
      ts_.next();
      std::vector<STermPtr> args;
      do {
        args.push_back(term());
      } while (ts_.accept_sym(","));
      ts_.expect_sym(")");
      if (head->kind == SKind::Con) {
        std::size_t n = is_ket(head->name) ? 0 : R_.reg.arity(head->name);
        if (n != args.size())
          fail_at(tok.loc, "constructor '" + head->name + "' expects " + std::to_string(n) + " arguments");
      }
      return s_apply(head, std::move(args));
    }
    if (head->kind == SKind::Con && !is_ket(head->name) && R_.reg.arity(head->name) > 0)
      fail_at(tok.loc, "constructor '" + head->name + "' needs arguments");
    return head;
  }

  STermPtr atom() {
    const Token tok = ts_.peek();
    switch (tok.kind) {
      case Tok::Int: {
        ts_.next();
        unsigned long n = std::stoul(tok.text);
        if (n > 100000) fail_at(tok.loc, "numeral too large");
        return s_nat(static_cast<unsigned>(n));
      }
      case Tok::Ket: {
        ts_.next();
        if (tok.text == "|0>" || tok.text == "|1>") return s_con(tok.text);
        Amplitude h = Amplitude::inv_sqrt2();
        return s_super({{h, s_con("|0>")}, {tok.text == "|->" ? -h : h, s_con("|1>")}});
      }
      case Tok::Ident: {
        ts_.next();
        const std::string& n = tok.text;
        if (n[0] == '~' && !R_.reg.find(n)) {
          std::string base = n.substr(1);
          if (R_.reg.find(base)) R_.reg.shadow_ctor(base);
        }
        if (R_.is_constructor(n)) return s_con(n);
        if (fns_.count(n)) return s_fn(n);
        return s_var(n);
      }
      case Tok::Sym: {
        if (ts_.accept_sym("[")) {
          ts_.expect_sym("]");
          return s_con("[]");
        }
        if (ts_.accept_sym("(")) {
          if (ts_.accept_sym(")")) return s_con("()");
          STermPtr a = term();
          if (ts_.accept_sym(",")) {
            STermPtr b = term();
            ts_.expect_sym(")");
            return s_con(",", {a, b});
          }
          ts_.expect_sym(")");
          return a;
        }
        break;
      }
      default: break;
    }
    ts_.fail("expected term");
  }

  // ---------------------------------------------------------------- statements

  void con_decl(std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::vector<TypePtr>>>>>& fams) {
    ts_.next();
    SourceLoc loc = ts_.peek().loc;
    std::string c = ts_.expect_ident();
    ts_.expect_sym(":");
    // The result type is the last component; allow self references while reading.
    std::size_t m = ts_.mark();
    while (!ts_.is_sym(";") && !ts_.at_end()) ts_.next();
    std::size_t end = ts_.mark();
    ts_.reset(m);
    std::string fam;
    for (std::size_t k = end - m; k-- > 0;) {
      const Token& t = ts_.peek(k);
      if (t.kind == Tok::Ident) {
        fam = t.text;
        break;
      }
    }
    pending_family_ = fam;
    TypePtr t = stype();
    pending_family_.clear();
    ts_.expect_sym(";");
    std::vector<TypePtr> args;
    while (is_arrow(t)) {
      args.push_back(t->dom());
      t = t->cod();
    }
    if (t->kind != TypeKind::Data || t->name != fam) fail_at(loc, "constructor '" + c + "' must build a named data type");
    auto it = std::find_if(fams.begin(), fams.end(), [&](const auto& f) { return f.first == fam; });
    if (it == fams.end()) {
      fams.push_back({fam, {}});
      it = fams.end() - 1;
    }
    it->second.push_back({c, args});
  }

private:
  TokenStream ts_;
  Sttrs& R_;
  std::set<std::string> fns_;
  std::string pending_family_;
};

// Collects rule heads and declared symbols so identifiers can be classified in one pass.
std::set<std::string> function_names(const std::vector<Token>& toks) {
  std::set<std::string> out = {kMain};
  bool at_start = true;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const Token& t = toks[i];
    if (t.kind == Tok::End) break;
    if (at_start && t.kind == Tok::Ident) {
      if (t.text == "sym" && i + 1 < toks.size() && toks[i + 1].kind == Tok::Ident) out.insert(toks[i + 1].text);
      else if (t.text != "con") out.insert(t.text);
    }
    at_start = t.kind == Tok::Sym && t.text == ";";
  }
  return out;
}

} // namespace

Sttrs parse_trs(const std::string& text) {
  std::vector<Token> toks;
  try {
    toks = detail::tokenize(text);
  } catch (const ParseError& e) {
    throw TrsError(e.loc, e.what());
  }
  Sttrs R;
  TrsParser p(TokenStream(toks), R, function_names(toks));
  TokenStream& ts = p.stream();
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::vector<TypePtr>>>>> fams;
  try {
    while (ts.is_ident("con")) {
      SourceLoc loc = ts.peek().loc;
      p.con_decl(fams);
      (void)loc;
    }
    for (const auto& [name, ctors] : fams) {
      try {
        R.reg.declare_type(name, ctors);
      } catch (const RegistryError& e) {
        throw TrsError(ts.peek().loc, e.what());
      }
    }
    while (!ts.at_end()) {
      if (ts.is_ident("con")) ts.fail("constructor declarations must precede symbols and rules");
      if (ts.is_ident("sym")) {
        ts.next();
        std::string f = ts.expect_ident();
        ts.expect_sym(":");
        R.declared[f] = p.stype();
        ts.expect_sym(";");
        continue;
      }
      Rule r;
      r.lhs = p.term();
      ts.expect_sym("->");
      r.rhs = p.term();
      ts.expect_sym(";");
      const STerm* h = r.lhs->kind == SKind::Apply ? r.lhs->head.get() : r.lhs.get();
      r.library = h->kind == SKind::Fn && (h->name == kUnit || h->name == kShape);
      R.rules.push_back(std::move(r));
    }
  } catch (const ParseError& e) {
    throw TrsError(e.loc, e.what());
  }
  return R;
}

STermPtr parse_sterm(const std::string& text, const Sttrs& R) {
  std::vector<Token> toks;
  try {
    toks = detail::tokenize(text);
  } catch (const ParseError& e) {
    throw TrsError(e.loc, e.what());
  }
  std::vector<std::string> syms = R.symbols();
  std::set<std::string> fns(syms.begin(), syms.end());
  for (const auto& [f, t] : R.declared) fns.insert(f);
  fns.insert(kMain);
  // Shadow constructors may be created lazily while reading.
  Sttrs& scratch = const_cast<Sttrs&>(R);
  TrsParser p(TokenStream(toks), scratch, fns);
  try {
    STermPtr t = p.term();
    if (!p.stream().at_end()) p.stream().fail("unexpected input after term");
    return t;
  } catch (const ParseError& e) {
    throw TrsError(e.loc, e.what());
  }
}

} // namespace hyrql::trs
