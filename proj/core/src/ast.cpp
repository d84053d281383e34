#include "hyrql/ast.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>

namespace hyrql {

// ================================================================ types

namespace {

TypePtr make_type(TypeKind k, std::string name, std::vector<TypePtr> args) {
  auto t = std::make_shared<Type>();
  t->kind = k;
  t->name = std::move(name);
  t->args = std::move(args);
  return t;
}

} // namespace

TypePtr qbit_type() {
  static const TypePtr q = make_type(TypeKind::Qbit, "Qbit", {});
  return q;
}
TypePtr data_type(const std::string& name, std::vector<TypePtr> args) {
  return make_type(TypeKind::Data, name, std::move(args));
}
TypePtr param_type(const std::string& name) { return make_type(TypeKind::Param, name, {}); }
TypePtr lollipop(TypePtr a, TypePtr b) {
  return make_type(TypeKind::Lollipop, "", {std::move(a), std::move(b)});
}
TypePtr class_arrow(TypePtr a, TypePtr b) {
  return make_type(TypeKind::ClassArrow, "", {std::move(a), std::move(b)});
}
TypePtr unit_arrow(TypePtr a, TypePtr b) {
  return make_type(TypeKind::UnitArrow, "", {std::move(a), std::move(b)});
}
TypePtr unit_type() { return data_type("unit"); }
TypePtr bit_type() { return data_type("bit"); }
TypePtr nat_type() { return data_type("nat"); }
TypePtr list_type(TypePtr elem) { return data_type("list", {std::move(elem)}); }
TypePtr tensor_type(TypePtr a, TypePtr b) { return data_type("tensor", {std::move(a), std::move(b)}); }

bool type_equal(const TypePtr& a, const TypePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->name != b->name || a->args.size() != b->args.size()) return false;
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!type_equal(a->args[i], b->args[i])) return false;
  return true;
}

bool is_basic(const TypePtr& t) {
  return t && (t->kind == TypeKind::Qbit || t->kind == TypeKind::Data);
}

bool is_arrow(const TypePtr& t) {
  return t && (t->kind == TypeKind::Lollipop || t->kind == TypeKind::ClassArrow ||
               t->kind == TypeKind::UnitArrow);
}

namespace {

std::string type_str_prec(const TypePtr& t, int prec) {
  if (!t) return "?";
  switch (t->kind) {
    case TypeKind::Qbit: return "Qbit";
    case TypeKind::Param: return "'" + t->name;
    case TypeKind::Data:
      if (t->name == "list" && t->args.size() == 1) return "[" + type_str_prec(t->args[0], 0) + "]";
      if (t->name == "tensor" && t->args.size() == 2) {
        std::string s = type_str_prec(t->args[0], 1) + " * " + type_str_prec(t->args[1], 2);
        return prec > 1 ? "(" + s + ")" : s;
      }
      if (t->args.empty()) return t->name;
      {
        std::string s = t->name + "(";
        for (std::size_t i = 0; i < t->args.size(); ++i) {
          if (i) s += ", ";
          s += type_str_prec(t->args[i], 0);
        }
        return s + ")";
      }
    case TypeKind::Lollipop:
    case TypeKind::ClassArrow:
    case TypeKind::UnitArrow: {
      const char* op = t->kind == TypeKind::Lollipop ? " -o " : t->kind == TypeKind::ClassArrow ? " => " : " <-> ";
      std::string s = type_str_prec(t->dom(), 1) + op + type_str_prec(t->cod(), 0);
      return prec > 0 ? "(" + s + ")" : s;
    }
  }
  return "?";
}

} // namespace

std::string type_str(const TypePtr& t) { return type_str_prec(t, 0); }

// ================================================================ terms

namespace {

std::vector<std::string> merge_fv(std::vector<std::string> a, const std::vector<std::string>& b) {
  std::vector<std::string> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<std::string> minus_fv(const std::vector<std::string>& a, const std::vector<std::string>& bound) {
  std::vector<std::string> out;
  for (const auto& x : a)
    if (std::find(bound.begin(), bound.end(), x) == bound.end()) out.push_back(x);
  return out;
}

void compute_fv(Term& t) {
  std::vector<std::string> fv;
  switch (t.tag) {
    case Tag::Var: fv = {t.name}; break;
    case Tag::Ket0:
    case Tag::Ket1: break;
    case Tag::Lambda: fv = minus_fv(t.kids[0]->fv, {t.name}); break;
    case Tag::LetRec: fv = minus_fv(t.kids[0]->fv, {t.name, t.name2}); break;
    case Tag::Match:
      fv = t.kids[0]->fv;
      for (const auto& b : t.branches) fv = merge_fv(fv, minus_fv(b.body->fv, b.vars));
      break;
    case Tag::Sum:
      for (const auto& it : t.items) fv = merge_fv(fv, it.term->fv);
      break;
    default:
      for (const auto& k : t.kids) fv = merge_fv(fv, k->fv);
      break;
  }
  t.fv = std::move(fv);
}

TermPtr finish(Term t) {
  compute_fv(t);
  return std::make_shared<const Term>(std::move(t));
}

} // namespace

TermPtr mk_var(const std::string& name) {
  Term t;
  t.tag = Tag::Var;
  t.name = name;
  return finish(std::move(t));
}

TermPtr mk_ket(int bit) {
  static const TermPtr k0 = [] { Term t; t.tag = Tag::Ket0; return finish(std::move(t)); }();
  static const TermPtr k1 = [] { Term t; t.tag = Tag::Ket1; return finish(std::move(t)); }();
  return bit == 0 ? k0 : k1;
}

TermPtr mk_qcase(TermPtr s, TermPtr t0, TermPtr t1, bool orthogonal_annot) {
  Term t;
  t.tag = Tag::QCase;
  t.kids = {std::move(s), std::move(t0), std::move(t1)};
  t.orthogonal_annot = orthogonal_annot;
  return finish(std::move(t));
}

TermPtr mk_cons(const std::string& ctor, std::vector<TermPtr> args) {
  Term t;
  t.tag = Tag::Cons;
  t.name = ctor;
  t.kids = std::move(args);
  return finish(std::move(t));
}

TermPtr mk_match(TermPtr s, std::vector<Branch> branches) {
  Term t;
  t.tag = Tag::Match;
  t.kids = {std::move(s)};
  t.branches = std::move(branches);
  return finish(std::move(t));
}

TermPtr mk_lambda(const std::string& x, TermPtr body, TypePtr ann) {
  Term t;
  t.tag = Tag::Lambda;
  t.name = x;
  t.kids = {std::move(body)};
  t.ann = std::move(ann);
  return finish(std::move(t));
}

TermPtr mk_letrec(const std::string& f, const std::string& x, TermPtr body, TypePtr ann) {
  Term t;
  t.tag = Tag::LetRec;
  t.name = f;
  t.name2 = x;
  t.kids = {std::move(body)};
  t.ann = std::move(ann);
  return finish(std::move(t));
}

TermPtr mk_unit(TermPtr body) {
  Term t;
  t.tag = Tag::Unit;
  t.kids = {std::move(body)};
  return finish(std::move(t));
}

TermPtr mk_app(TermPtr f, TermPtr a) {
  Term t;
  t.tag = Tag::App;
  t.kids = {std::move(f), std::move(a)};
  return finish(std::move(t));
}

TermPtr mk_apps(TermPtr f, const std::vector<TermPtr>& args) {
  for (const auto& a : args) f = mk_app(std::move(f), a);
  return f;
}

TermPtr mk_sum(std::vector<SumItem> items, bool orthogonal_annot) {
  if (items.empty()) throw std::invalid_argument("empty sum");
  Term t;
  t.tag = Tag::Sum;
  t.items = std::move(items);
  t.orthogonal_annot = orthogonal_annot;
  return finish(std::move(t));
}

TermPtr mk_shape(TermPtr body) {
  Term t;
  t.tag = Tag::Shape;
  t.kids = {std::move(body)};
  return finish(std::move(t));
}

TermPtr mk_nat(unsigned n) {
  TermPtr t = mk_cons("0");
  for (unsigned i = 0; i < n; ++i) t = mk_cons("S", {t});
  return t;
}

TermPtr mk_list(const std::vector<TermPtr>& elems) {
  TermPtr t = mk_cons("[]");
  for (auto it = elems.rbegin(); it != elems.rend(); ++it) t = mk_cons("::", {*it, t});
  return t;
}

TermPtr mk_pair(TermPtr a, TermPtr b) { return mk_cons(",", {std::move(a), std::move(b)}); }

TermPtr with_annotation(const TermPtr& t, TypePtr ann) {
  Term c = *t;
  c.ann = std::move(ann);
  return std::make_shared<const Term>(std::move(c));
}

TermPtr with_hint(const TermPtr& t, const std::string& hint) {
  Term c = *t;
  c.hint = hint;
  return std::make_shared<const Term>(std::move(c));
}

TermPtr with_loc(const TermPtr& t, SourceLoc loc) {
  Term c = *t;
  c.loc = loc;
  return std::make_shared<const Term>(std::move(c));
}

TermPtr with_orthogonal(const TermPtr& t) {
  Term c = *t;
  c.orthogonal_annot = true;
  return std::make_shared<const Term>(std::move(c));
}

const std::vector<std::string>& free_vars(const TermPtr& t) { return t->fv; }

bool occurs_free(const std::string& x, const TermPtr& t) {
  return std::binary_search(t->fv.begin(), t->fv.end(), x);
}

bool is_closed(const TermPtr& t) { return t->fv.empty(); }

std::string fresh_name(const std::string& base) {
  static std::atomic<unsigned long> counter{0};
  std::string stem = base;
  auto q = stem.find('\'');
  if (q != std::string::npos && q > 0) {
    bool digits = q + 1 < stem.size();
    for (std::size_t i = q + 1; i < stem.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(stem[i]))) digits = false;
    if (digits) stem = stem.substr(0, q);
  }
  return stem + "'" + std::to_string(++counter);
}

// ---------------------------------------------------------------- substitution

namespace {

bool relevant(const TermPtr& t, const Subst& s) {
  for (const auto& x : t->fv)
    if (s.count(x)) return true;
  return false;
}

Subst restrict_to(const Subst& s, const TermPtr& t, const std::vector<std::string>& bound) {
  Subst out;
  for (const auto& x : t->fv) {
    if (std::find(bound.begin(), bound.end(), x) != bound.end()) continue;
    auto it = s.find(x);
    if (it != s.end()) out.emplace(it->first, it->second);
  }
  return out;
}

bool captured_by(const std::string& binder, const Subst& s) {
  for (const auto& [k, v] : s)
    if (occurs_free(binder, v)) return true;
  return false;
}

TermPtr rebuild(const Term& orig, Term t) {
  t.ann = orig.ann;
  t.orthogonal_annot = orig.orthogonal_annot;
  t.hint = orig.hint;
  t.loc = orig.loc;
  return finish(std::move(t));
}

TermPtr subst_rec(const TermPtr& t, const Subst& s);

// Renames binders in `names` that would capture, returning the updated body.
TermPtr bind_avoiding(std::vector<std::string>& names, TermPtr body, const Subst& inner) {
  Subst ren;
  for (auto& n : names) {
    if (captured_by(n, inner)) {
      std::string f = fresh_name(n);
      ren[n] = mk_var(f);
      n = f;
    }
  }
  if (!ren.empty()) body = subst_rec(body, ren);
  return subst_rec(body, inner);
}

TermPtr subst_rec(const TermPtr& t, const Subst& s) {
  if (s.empty() || !relevant(t, s)) return t;
  const Term& o = *t;
  switch (o.tag) {
    case Tag::Var: return s.at(o.name);
    case Tag::Ket0:
    case Tag::Ket1: return t;
    case Tag::Lambda: {
      Subst inner = restrict_to(s, o.kids[0], {o.name});
      if (inner.empty()) return t;
      std::vector<std::string> names = {o.name};
      TermPtr body = bind_avoiding(names, o.kids[0], inner);
      Term n;
      n.tag = Tag::Lambda;
      n.name = names[0];
      n.kids = {body};
      return rebuild(o, std::move(n));
    }
    case Tag::LetRec: {
      Subst inner = restrict_to(s, o.kids[0], {o.name, o.name2});
      if (inner.empty()) return t;
      std::vector<std::string> names = {o.name, o.name2};
      TermPtr body = bind_avoiding(names, o.kids[0], inner);
      Term n;
      n.tag = Tag::LetRec;
      n.name = names[0];
      n.name2 = names[1];
      n.kids = {body};
      return rebuild(o, std::move(n));
    }
    case Tag::Match: {
      Term n;
      n.tag = Tag::Match;
      n.kids = {subst_rec(o.kids[0], s)};
      for (const auto& b : o.branches) {
        Subst inner = restrict_to(s, b.body, b.vars);
        Branch nb = b;
        if (!inner.empty()) nb.body = bind_avoiding(nb.vars, b.body, inner);
        n.branches.push_back(std::move(nb));
      }
      return rebuild(o, std::move(n));
    }
    case Tag::Sum: {
      Term n;
      n.tag = Tag::Sum;
      for (const auto& it : o.items) n.items.push_back({it.amp, subst_rec(it.term, s)});
      return rebuild(o, std::move(n));
    }
    default: {
      Term n;
      n.tag = o.tag;
      n.name = o.name;
      for (const auto& k : o.kids) n.kids.push_back(subst_rec(k, s));
      return rebuild(o, std::move(n));
    }
  }
}

} // namespace

TermPtr substitute(const TermPtr& t, const Subst& sigma) { return subst_rec(t, sigma); }

// ---------------------------------------------------------------- alpha order

namespace {

struct AlphaEnv {
  std::vector<std::string> names;
  long lookup(const std::string& x) const {
    for (std::size_t i = names.size(); i-- > 0;)
      if (names[i] == x) return static_cast<long>(i);
    return -1;
  }
};

int cmp_int(long a, long b) { return a < b ? -1 : a > b ? 1 : 0; }

int cmp_str(const std::string& a, const std::string& b) {
  int c = a.compare(b);
  return c < 0 ? -1 : c > 0 ? 1 : 0;
}

int alpha_cmp(const TermPtr& a, const TermPtr& b, AlphaEnv& ea, AlphaEnv& eb) {
  if (a == b && ea.names.empty() && eb.names.empty()) return 0;
  if (a->tag != b->tag) return cmp_int(static_cast<long>(a->tag), static_cast<long>(b->tag));
  switch (a->tag) {
    case Tag::Var: {
      long la = ea.lookup(a->name), lb = eb.lookup(b->name);
      if (la >= 0 && lb >= 0) return cmp_int(la, lb);
      if (la >= 0) return -1;
      if (lb >= 0) return 1;
      return cmp_str(a->name, b->name);
    }
    case Tag::Ket0:
    case Tag::Ket1: return 0;
    case Tag::Cons: {
      int c = cmp_str(a->name, b->name);
      if (c) return c;
      c = cmp_int(static_cast<long>(a->kids.size()), static_cast<long>(b->kids.size()));
      if (c) return c;
      for (std::size_t i = 0; i < a->kids.size(); ++i)
        if ((c = alpha_cmp(a->kids[i], b->kids[i], ea, eb))) return c;
      return 0;
    }
    case Tag::Lambda: {
      ea.names.push_back(a->name);
      eb.names.push_back(b->name);
      int c = alpha_cmp(a->kids[0], b->kids[0], ea, eb);
      ea.names.pop_back();
      eb.names.pop_back();
      return c;
    }
    case Tag::LetRec: {
      ea.names.push_back(a->name);
      ea.names.push_back(a->name2);
      eb.names.push_back(b->name);
      eb.names.push_back(b->name2);
      int c = alpha_cmp(a->kids[0], b->kids[0], ea, eb);
      ea.names.resize(ea.names.size() - 2);
      eb.names.resize(eb.names.size() - 2);
      return c;
    }
    case Tag::Match: {
      int c = alpha_cmp(a->kids[0], b->kids[0], ea, eb);
      if (c) return c;
      c = cmp_int(static_cast<long>(a->branches.size()), static_cast<long>(b->branches.size()));
      if (c) return c;
      for (std::size_t i = 0; i < a->branches.size(); ++i) {
        const auto& ba = a->branches[i];
        const auto& bb = b->branches[i];
        if ((c = cmp_str(ba.ctor, bb.ctor))) return c;
        if ((c = cmp_int(static_cast<long>(ba.vars.size()), static_cast<long>(bb.vars.size())))) return c;
        for (const auto& v : ba.vars) ea.names.push_back(v);
        for (const auto& v : bb.vars) eb.names.push_back(v);
        c = alpha_cmp(ba.body, bb.body, ea, eb);
        ea.names.resize(ea.names.size() - ba.vars.size());
        eb.names.resize(eb.names.size() - bb.vars.size());
        if (c) return c;
      }
      return 0;
    }
    case Tag::Sum: {
      int c = cmp_int(static_cast<long>(a->items.size()), static_cast<long>(b->items.size()));
      if (c) return c;
      for (std::size_t i = 0; i < a->items.size(); ++i) {
        if ((c = a->items[i].amp.compare(b->items[i].amp))) return c;
        if ((c = alpha_cmp(a->items[i].term, b->items[i].term, ea, eb))) return c;
      }
      return 0;
    }
    default: {
      for (std::size_t i = 0; i < a->kids.size(); ++i) {
        int c = alpha_cmp(a->kids[i], b->kids[i], ea, eb);
        if (c) return c;
      }
      return 0;
    }
  }
}

} // namespace

int alpha_compare(const TermPtr& a, const TermPtr& b) {
  AlphaEnv ea, eb;
  return alpha_cmp(a, b, ea, eb);
}

bool alpha_equal(const TermPtr& a, const TermPtr& b) { return alpha_compare(a, b) == 0; }

// ---------------------------------------------------------------- binder hygiene

namespace {

struct Uniquifier {
  std::set<std::string> used;

  std::string claim(const std::string& n) {
    if (used.insert(n).second) return n;
    std::string f = fresh_name(n);
    used.insert(f);
    return f;
  }

  TermPtr go(const TermPtr& t) {
    const Term& o = *t;
    switch (o.tag) {
      case Tag::Var:
      case Tag::Ket0:
      case Tag::Ket1: return t;
      case Tag::Lambda: {
        std::string x = claim(o.name);
        TermPtr body = o.kids[0];
        if (x != o.name) body = substitute(body, {{o.name, mk_var(x)}});
        Term n;
        n.tag = Tag::Lambda;
        n.name = x;
        n.kids = {go(body)};
        return rebuild(o, std::move(n));
      }
      case Tag::LetRec: {
        std::string f = claim(o.name);
        std::string x = claim(o.name2);
        TermPtr body = o.kids[0];
        Subst s;
        if (f != o.name) s[o.name] = mk_var(f);
        if (x != o.name2) s[o.name2] = mk_var(x);
        if (!s.empty()) body = substitute(body, s);
        Term n;
        n.tag = Tag::LetRec;
        n.name = f;
        n.name2 = x;
        n.kids = {go(body)};
        return rebuild(o, std::move(n));
      }
      case Tag::Match: {
        Term n;
        n.tag = Tag::Match;
        n.kids = {go(o.kids[0])};
        for (const auto& b : o.branches) {
          Branch nb;
          nb.ctor = b.ctor;
          Subst s;
          for (const auto& v : b.vars) {
            std::string c = claim(v);
            if (c != v) s[v] = mk_var(c);
            nb.vars.push_back(c);
          }
          nb.body = go(s.empty() ? b.body : substitute(b.body, s));
          n.branches.push_back(std::move(nb));
        }
        return rebuild(o, std::move(n));
      }
      case Tag::Sum: {
        Term n;
        n.tag = Tag::Sum;
        for (const auto& it : o.items) n.items.push_back({it.amp, go(it.term)});
        return rebuild(o, std::move(n));
      }
      default: {
        Term n;
        n.tag = o.tag;
        n.name = o.name;
        for (const auto& k : o.kids) n.kids.push_back(go(k));
        return rebuild(o, std::move(n));
      }
    }
  }
};

} // namespace

TermPtr uniquify_binders(const TermPtr& t) {
  Uniquifier u;
  for (const auto& x : t->fv) u.used.insert(x);
  return u.go(t);
}

// ---------------------------------------------------------------- predicates

bool is_pure(const TermPtr& t) {
  switch (t->tag) {
    case Tag::Sum: return false;
    case Tag::QCase:
    case Tag::Match: return is_pure(t->kids[0]);
    case Tag::Cons:
      for (const auto& k : t->kids)
        if (!is_pure(k)) return false;
      return true;
    default: return true;
  }
}

bool is_value(const TermPtr& t) {
  switch (t->tag) {
    case Tag::Var:
    case Tag::Ket0:
    case Tag::Ket1:
    case Tag::Lambda:
    case Tag::LetRec:
    case Tag::Unit: return true;
    case Tag::Cons:
      for (const auto& k : t->kids)
        if (!is_value(k)) return false;
      return true;
    case Tag::Sum:
      for (const auto& it : t->items)
        if (!is_value(it.term)) return false;
      return true;
    default: return false;
  }
}

std::size_t term_size(const TermPtr& t) {
  std::size_t n = 1;
  for (const auto& k : t->kids) n += term_size(k);
  for (const auto& b : t->branches) n += term_size(b.body);
  for (const auto& it : t->items) n += term_size(it.term);
  return n;
}

// ================================================================ registry

namespace {

TypePtr subst_params(const TypePtr& t, const std::map<std::string, TypePtr>& env) {
  if (t->kind == TypeKind::Param) {
    auto it = env.find(t->name);
    if (it == env.end()) throw RegistryError("unbound type parameter '" + t->name);
    return it->second;
  }
  if (t->args.empty()) return t;
  std::vector<TypePtr> args;
  for (const auto& a : t->args) args.push_back(subst_params(a, env));
  return make_type(t->kind, t->name, std::move(args));
}

bool match_params(const TypePtr& tmpl, const TypePtr& actual, std::map<std::string, TypePtr>& env) {
  if (tmpl->kind == TypeKind::Param) {
    auto it = env.find(tmpl->name);
    if (it == env.end()) {
      env[tmpl->name] = actual;
      return true;
    }
    return type_equal(it->second, actual);
  }
  if (tmpl->kind != actual->kind || tmpl->name != actual->name || tmpl->args.size() != actual->args.size())
    return false;
  for (std::size_t i = 0; i < tmpl->args.size(); ++i)
    if (!match_params(tmpl->args[i], actual->args[i], env)) return false;
  return true;
}

} // namespace

Registry::Registry() {
  auto a = param_type("a");
  auto b = param_type("b");
  add_family({"unit", {}, {}, true, false}, {{"()", "unit", {}, false}});
  add_family({"bit", {}, {}, false, false}, {{"0b", "bit", {}, false}, {"1b", "bit", {}, false}});
  add_family({"nat", {}, {}, false, false}, {{"0", "nat", {}, false}, {"S", "nat", {nat_type()}, false}});
  add_family({"list", {"a"}, {}, true, false},
             {{"[]", "list", {}, false}, {"::", "list", {a, list_type(a)}, false}});
  add_family({"tensor", {"a", "b"}, {}, true, false}, {{",", "tensor", {a, b}, false}});
}

Registry::Registry(const Registry& other) {
  std::lock_guard<std::recursive_mutex> lk(other.mu_);
  ctors_ = other.ctors_;
  families_ = other.families_;
  order_ = other.order_;
  declared_ = other.declared_;
}

Registry& Registry::operator=(const Registry& other) {
  if (this == &other) return *this;
  std::scoped_lock lk(mu_, other.mu_);
  ctors_ = other.ctors_;
  families_ = other.families_;
  order_ = other.order_;
  declared_ = other.declared_;
  return *this;
}

void Registry::add_family(TypeFamily fam, std::vector<ConstructorSig> sigs) const {
  std::lock_guard<std::recursive_mutex> lk(mu_);
  for (auto& s : sigs) {
    fam.ctors.push_back(s.name);
    if (!s.shadow) order_.push_back(s.name);
    ctors_[s.name] = std::move(s);
  }
  families_[fam.name] = std::move(fam);
}

bool Registry::validate_type(const TypePtr& t, std::string* why) const {
  std::lock_guard<std::recursive_mutex> lk(mu_);
  switch (t->kind) {
    case TypeKind::Qbit: return true;
    case TypeKind::Param:
      if (why) *why = "type parameters are not allowed here";
      return false;
    case TypeKind::Data: {
      auto it = families_.find(t->name);
      if (it == families_.end()) {
        if (why) *why = "unknown type '" + t->name + "'";
        return false;
      }
      if (it->second.params.size() != t->args.size()) {
        if (why) *why = "wrong number of parameters for type '" + t->name + "'";
        return false;
      }
      for (const auto& a : t->args) {
        if (!is_basic(a)) {
          if (why) *why = "constructor type parameters must be basic types";
          return false;
        }
        if (!validate_type(a, why)) return false;
      }
      return true;
    }
    default:
      return validate_type(t->dom(), why) && validate_type(t->cod(), why);
  }
}

void Registry::declare_type(const std::string& name,
                            const std::vector<std::pair<std::string, std::vector<TypePtr>>>& ctors) {
  std::lock_guard<std::recursive_mutex> lk(mu_);
  if (families_.count(name) || name == "Qbit") throw RegistryError("type '" + name + "' already declared");
  if (ctors.empty()) throw RegistryError("type '" + name + "' has no constructors");
  std::set<std::string> seen;
  for (const auto& [c, args] : ctors) {
    if (ctors_.count(c) || !seen.insert(c).second)
      throw RegistryError("constructor '" + c + "' already declared");
  }
  TypeFamily fam{name, {}, {}, false, false};
  std::vector<ConstructorSig> sigs;
  for (const auto& [c, args] : ctors) sigs.push_back({c, name, args, false});
  add_family(fam, sigs);
  auto rollback = [&] {
    for (const auto& [c, args] : ctors) {
      ctors_.erase(c);
      order_.erase(std::remove(order_.begin(), order_.end(), c), order_.end());
    }
    families_.erase(name);
  };
  for (const auto& [c, args] : ctors) {
    bool seen_quantum = false;
    for (const auto& a : args) {
      std::string why;
      if (!is_basic(a) || !validate_type(a, &why)) {
        rollback();
        throw RegistryError("constructor '" + c + "': " + (why.empty() ? "arguments must be basic types" : why));
      }
      bool q = is_quantum(a);
      if (!q && seen_quantum) {
        rollback();
        throw RegistryError("constructor '" + c + "': classical arguments must precede quantum ones");
      }
      seen_quantum = seen_quantum || q;
    }
  }
  declared_.push_back(name);
}

const ConstructorSig* Registry::find(const std::string& ctor) const {
  std::lock_guard<std::recursive_mutex> lk(mu_);
  auto it = ctors_.find(ctor);
  return it == ctors_.end() ? nullptr : &it->second;
}

std::size_t Registry::arity(const std::string& ctor) const {
  const auto* s = find(ctor);
  if (!s) throw RegistryError("unknown constructor '" + ctor + "'");
  return s->arg_types.size();
}

const TypeFamily* Registry::family(const std::string& type_name) const {
  std::lock_guard<std::recursive_mutex> lk(mu_);
  auto it = families_.find(type_name);
  return it == families_.end() ? nullptr : &it->second;
}

std::vector<std::string> Registry::constructors_of(const std::string& type_name) const {
  const auto* f = family(type_name);
  if (!f) return {};
  return f->ctors;
}

std::vector<std::string> Registry::base_constructors() const {
  std::lock_guard<std::recursive_mutex> lk(mu_);
  return order_;
}

std::vector<std::string> Registry::declared_types() const {
  std::lock_guard<std::recursive_mutex> lk(mu_);
  return declared_;
}

bool Registry::is_parametric(const std::string& ctor) const {
  const auto* s = find(ctor);
  if (!s) return false;
  const auto* f = family(s->type_name);
  return f && !f->params.empty();
}

std::vector<TypePtr> Registry::instantiate(const std::string& ctor, const TypePtr& result) const {
  const auto* s = find(ctor);
  if (!s) throw RegistryError("unknown constructor '" + ctor + "'");
  if (!result || result->kind != TypeKind::Data || result->name != s->type_name)
    throw RegistryError("constructor '" + ctor + "' does not build values of type " + type_str(result));
  const auto* f = family(s->type_name);
  std::map<std::string, TypePtr> env;
  for (std::size_t i = 0; i < f->params.size(); ++i) env[f->params[i]] = result->args.at(i);
  std::vector<TypePtr> out;
  for (const auto& a : s->arg_types) out.push_back(subst_params(a, env));
  return out;
}

std::optional<TypePtr> Registry::result_from_args(const std::string& ctor,
                                                  const std::vector<TypePtr>& args) const {
  const auto* s = find(ctor);
  if (!s || s->arg_types.size() != args.size()) return std::nullopt;
  const auto* f = family(s->type_name);
  std::map<std::string, TypePtr> env;
  for (std::size_t i = 0; i < args.size(); ++i)
    if (!match_params(s->arg_types[i], args[i], env)) return std::nullopt;
  std::vector<TypePtr> ps;
  for (const auto& p : f->params) {
    auto it = env.find(p);
    if (it == env.end()) return std::nullopt;
    ps.push_back(it->second);
  }
  return data_type(s->type_name, std::move(ps));
}

bool Registry::quantum_rec(const TypePtr& t, std::set<std::string>& visiting) const {
  switch (t->kind) {
    case TypeKind::Qbit: return true;
    case TypeKind::Data: {
      const auto* f = family(t->name);
      if (!f) return false;
      if (f->structural) {
        for (const auto& a : t->args)
          if (quantum_rec(a, visiting)) return true;
        return false;
      }
      if (!visiting.insert(t->name).second) return false;
      bool q = false;
      for (const auto& c : f->ctors)
        for (const auto& a : find(c)->arg_types)
          if (quantum_rec(a, visiting)) q = true;
      visiting.erase(t->name);
      return q;
    }
    default: return false;
  }
}

bool Registry::is_quantum(const TypePtr& t) const {
  std::lock_guard<std::recursive_mutex> lk(mu_);
  std::set<std::string> visiting;
  return quantum_rec(t, visiting);
}

std::optional<std::size_t> Registry::depth_rec(const TypePtr& t, std::set<std::string>& visiting) const {
  switch (t->kind) {
    case TypeKind::Qbit: return 1;
    case TypeKind::Data: {
      const auto* f = family(t->name);
      if (!f) return std::nullopt;
      std::string key = type_str(t);
      if (!visiting.insert(key).second) return std::nullopt;
      std::size_t best = 0;
      for (const auto& c : f->ctors) {
        std::size_t sum = 0;
        for (const auto& a : instantiate(c, t)) {
          auto d = depth_rec(a, visiting);
          if (!d) {
            visiting.erase(key);
            return std::nullopt;
          }
          sum += *d;
        }
        best = std::max(best, sum);
      }
      visiting.erase(key);
      return best + 1;
    }
    default: return std::nullopt;
  }
}

std::optional<std::size_t> Registry::type_depth(const TypePtr& t) const {
  std::lock_guard<std::recursive_mutex> lk(mu_);
  std::set<std::string> visiting;
  return depth_rec(t, visiting);
}

std::string Registry::shadow_ctor(const std::string& ctor) const {
  const auto* s = find(ctor);
  if (!s) throw RegistryError("unknown constructor '" + ctor + "'");
  const auto* f = family(s->type_name);
  if (f->structural) return ctor;
  shape_type(data_type(s->type_name));
  return "~" + ctor;
}

TypePtr Registry::shape_type(const TypePtr& t) const {
  std::lock_guard<std::recursive_mutex> lk(mu_);
  if (t->kind == TypeKind::Qbit) return unit_type();
  if (t->kind != TypeKind::Data) throw RegistryError("shape of non-basic type " + type_str(t));
  const auto* f = family(t->name);
  if (!f) throw RegistryError("unknown type '" + t->name + "'");
  if (f->structural) {
    std::vector<TypePtr> args;
    for (const auto& a : t->args) args.push_back(shape_type(a));
    return data_type(t->name, std::move(args));
  }
  std::string sname = "~" + t->name;
  if (!families_.count(sname)) {
    TypeFamily fam{sname, {}, {}, false, true};
    std::vector<std::string> ctors = f->ctors;
    families_[sname] = fam;
    std::vector<ConstructorSig> sigs;
    for (const auto& c : ctors) {
      ConstructorSig sig{"~" + c, sname, {}, true};
      for (const auto& a : find(c)->arg_types) sig.arg_types.push_back(shape_type(a));
      sigs.push_back(std::move(sig));
    }
    add_family(fam, std::move(sigs));
  }
  return data_type(sname);
}

std::optional<std::vector<TermPtr>> Registry::basis(const TypePtr& t, std::size_t limit) const {
  if (t->kind == TypeKind::Qbit) return std::vector<TermPtr>{mk_ket(0), mk_ket(1)};
  if (t->kind != TypeKind::Data) return std::nullopt;
  if (!type_depth(t)) return std::nullopt;
  std::vector<TermPtr> out;
  for (const auto& c : constructors_of(t->name)) {
    std::vector<std::vector<TermPtr>> parts;
    for (const auto& a : instantiate(c, t)) {
      auto b = basis(a, limit);
      if (!b) return std::nullopt;
      parts.push_back(std::move(*b));
    }
    std::vector<std::vector<TermPtr>> combos = {{}};
    for (const auto& p : parts) {
      std::vector<std::vector<TermPtr>> next;
      for (const auto& pre : combos)
        for (const auto& v : p) {
          auto n = pre;
          n.push_back(v);
          next.push_back(std::move(n));
          if (next.size() > limit) return std::nullopt;
        }
      combos = std::move(next);
    }
    for (auto& args : combos) {
      out.push_back(mk_cons(c, std::move(args)));
      if (out.size() > limit) return std::nullopt;
    }
  }
  return out;
}

bool Context::compatible() const {
  for (const auto& [x, t] : gamma)
    if (delta.count(x)) return false;
  return true;
}

} // namespace hyrql
