#include "hyrql/canonical.hpp"

#include <algorithm>

namespace hyrql {

namespace {

void normalize(std::vector<SumItem>& items) {
  std::stable_sort(items.begin(), items.end(),
                   [](const SumItem& a, const SumItem& b) { return alpha_compare(a.term, b.term) < 0; });
  std::vector<SumItem> out;
  for (auto& it : items) {
    if (!out.empty() && alpha_equal(out.back().term, it.term)) {
      out.back().amp += it.amp;
    } else {
      out.push_back(std::move(it));
    }
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const SumItem& s) { return s.amp.is_zero(); }), out.end());
  items = std::move(out);
}

std::vector<SumItem> form(const TermPtr& t);

TermPtr keep_presentation(const TermPtr& orig, TermPtr t) {
  if (!orig->hint.empty()) t = with_hint(t, orig->hint);
  return with_loc(t, orig->loc);
}

std::vector<SumItem> form(const TermPtr& t) {
  switch (t->tag) {
    case Tag::Var:
    case Tag::Ket0:
    case Tag::Ket1:
    case Tag::Lambda:
    case Tag::LetRec:
    case Tag::Unit: return {{Amplitude(1), t}};
    case Tag::App: {
      TermPtr f = canonical_term(t->kids[0]);
      TermPtr a = canonical_term(t->kids[1]);
      if (f == t->kids[0] && a == t->kids[1]) return {{Amplitude(1), t}};
      return {{Amplitude(1), keep_presentation(t, mk_app(f, a))}};
    }
    case Tag::Shape: {
      TermPtr b = canonical_term(t->kids[0]);
      if (b == t->kids[0]) return {{Amplitude(1), t}};
      return {{Amplitude(1), mk_shape(b)}};
    }
    case Tag::QCase: {
      std::vector<SumItem> out;
      for (auto& it : form(t->kids[0])) {
        TermPtr q = it.term == t->kids[0] ? t : mk_qcase(it.term, t->kids[1], t->kids[2], t->orthogonal_annot);
        out.push_back({it.amp, q});
      }
      return out;
    }
    case Tag::Match: {
      std::vector<SumItem> out;
      for (auto& it : form(t->kids[0])) {
        TermPtr m = it.term == t->kids[0] ? t : mk_match(it.term, t->branches);
        out.push_back({it.amp, m});
      }
      return out;
    }
    case Tag::Cons: {
      // Cartesian product over the argument forms.
      std::vector<std::pair<Amplitude, std::vector<TermPtr>>> prod = {{Amplitude(1), {}}};
      for (const auto& k : t->kids) {
        std::vector<SumItem> fk = form(k);
        std::vector<std::pair<Amplitude, std::vector<TermPtr>>> next;
        next.reserve(prod.size() * fk.size());
        for (const auto& [a, xs] : prod) {
          for (const auto& it : fk) {
            auto ys = xs;
            ys.push_back(it.term);
            next.emplace_back(a * it.amp, std::move(ys));
          }
        }
        prod = std::move(next);
      }
      std::vector<SumItem> out;
      for (auto& [a, xs] : prod) {
        bool same = xs.size() == t->kids.size();
        for (std::size_t i = 0; same && i < xs.size(); ++i) same = xs[i] == t->kids[i];
        out.push_back({a, same ? t : mk_cons(t->name, std::move(xs))});
      }
      return out;
    }
    case Tag::Sum: {
      std::vector<SumItem> out;
      for (const auto& it : t->items) {
        for (auto& sub : form(it.term)) out.push_back({it.amp * sub.amp, sub.term});
      }
      normalize(out);
      return out;
    }
  }
  return {{Amplitude(1), t}};
}

bool same_branches(const TermPtr& a, const TermPtr& b) {
  TermPtr hole = mk_var("%hole");
  if (a->tag == Tag::QCase) return alpha_equal(a->kids[1], b->kids[1]) && alpha_equal(a->kids[2], b->kids[2]);
  return alpha_equal(mk_match(hole, a->branches), mk_match(hole, b->branches));
}

} // namespace

CanonicalForm canonicalize(const TermPtr& t) {
  CanonicalForm cf;
  cf.items = form(t);
  normalize(cf.items);
  return cf;
}

TermPtr to_term(const CanonicalForm& cf) {
  if (cf.is_zero()) return mk_sum({{Amplitude(0), mk_ket(0)}});
  if (cf.is_singleton()) return cf.items[0].term;
  return mk_sum(cf.items);
}

TermPtr canonical_term(const TermPtr& t) {
  if (is_pure(t)) {
    // Pure terms only change through their application and shape subterms.
    switch (t->tag) {
      case Tag::Var:
      case Tag::Ket0:
      case Tag::Ket1:
      case Tag::Lambda:
      case Tag::LetRec:
      case Tag::Unit: return t;
      default: break;
    }
  }
  return to_term(canonicalize(t));
}

Amplitude quantity(const TermPtr& p, const TermPtr& t) {
  switch (t->tag) {
    case Tag::Var:
    case Tag::Ket0:
    case Tag::Ket1:
    case Tag::Lambda:
    case Tag::LetRec:
    case Tag::Unit: return alpha_equal(p, t) ? Amplitude(1) : Amplitude(0);
    case Tag::QCase:
    case Tag::Match:
      if (p->tag != t->tag || !same_branches(p, t)) return Amplitude(0);
      return quantity(p->kids[0], t->kids[0]);
    case Tag::Cons: {
      if (p->tag != Tag::Cons || p->name != t->name || p->kids.size() != t->kids.size()) return Amplitude(0);
      Amplitude a(1);
      for (std::size_t i = 0; i < t->kids.size() && !a.is_zero(); ++i) a *= quantity(p->kids[i], t->kids[i]);
      return a;
    }
    case Tag::App:
      if (p->tag != Tag::App) return Amplitude(0);
      return equiv(p->kids[0], t->kids[0]) && equiv(p->kids[1], t->kids[1]) ? Amplitude(1) : Amplitude(0);
    case Tag::Shape:
      if (p->tag != Tag::Shape) return Amplitude(0);
      return equiv(p->kids[0], t->kids[0]) ? Amplitude(1) : Amplitude(0);
    case Tag::Sum: {
      Amplitude a(0);
      for (const auto& it : t->items) a += it.amp * quantity(p, it.term);
      return a;
    }
  }
  return Amplitude(0);
}

bool form_equal(const CanonicalForm& a, const CanonicalForm& b) {
  if (a.items.size() != b.items.size()) return false;
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    if (a.items[i].amp != b.items[i].amp) return false;
    if (!alpha_equal(a.items[i].term, b.items[i].term)) return false;
  }
  return true;
}

bool equiv(const TermPtr& s, const TermPtr& t) {
  if (s == t) return true;
  return form_equal(canonicalize(s), canonicalize(t));
}

} // namespace hyrql
