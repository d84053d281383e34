#include "hyrql/parser.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "lexer.hpp"

namespace hyrql {

using detail::Tok;
using detail::Token;
using detail::TokenStream;

namespace {

const std::set<std::string> kKeywords = {"qcase", "match", "letrec", "unit", "shape", "def", "type", "main"};

Amplitude ket_plus(bool minus) {
  Amplitude h = Amplitude::inv_sqrt2();
  return minus ? -h : h;
}

class Parser {
public:
  Parser(TokenStream ts, Registry& reg) : ts_(std::move(ts)), reg_(reg) {}

  std::map<std::string, TermPtr> defs;

  // ------------------------------------------------------------ amplitudes

  Amplitude amp_sum() {
    Amplitude a = amp_prod();
    while (ts_.is_sym("+") || ts_.is_sym("-")) {
      bool minus = ts_.next().text == "-";
      Amplitude b = amp_prod();
      a = minus ? a - b : a + b;
    }
    return a;
  }

  Amplitude amp_prod() {
    Amplitude a = amp_unary();
    for (;;) {
      if (ts_.is_sym("/")) {
        ts_.next();
        Amplitude b = amp_unary();
        if (b.is_zero()) ts_.fail("division by zero amplitude");
        a = a / b;
        continue;
      }
      if (ts_.is_sym("*")) {
        auto m = ts_.mark();
        ts_.next();
        try {
          Amplitude b = amp_unary();
          a = a * b;
          continue;
        } catch (const ParseError&) {
          ts_.reset(m);
        }
      }
      return a;
    }
  }

  Amplitude amp_unary() {
    if (ts_.accept_sym("-")) return -amp_unary();
    return amp_atom();
  }

  Amplitude amp_atom() {
    const Token& t = ts_.peek();
    if (t.kind == Tok::Int) {
      ts_.next();
      return Amplitude(mpq_class(t.text));
    }
    if (t.kind == Tok::Ident) {
      if (t.text == "i") {
        ts_.next();
        return Amplitude::i();
      }
      if (t.text == "sqrt2") {
        ts_.next();
        return Amplitude::sqrt2();
      }
      if (t.text.rfind("sqrt", 0) == 0 && t.text.size() > 4 &&
          std::all_of(t.text.begin() + 4, t.text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw ParseError(t.loc, "amplitude " + t.text + " lies outside Q(zeta8)");
    }
    if (t.kind == Tok::Sym && t.text == "(") {
      auto m = ts_.mark();
      ts_.next();
      try {
        Amplitude a = amp_sum();
        ts_.expect_sym(")");
        return a;
      } catch (const ParseError& e) {
        // Amplitudes outside the field are fatal; anything else may be a term.
        if (std::string(e.what()).find("outside Q(zeta8)") != std::string::npos) throw;
        ts_.reset(m);
      }
    }
    ts_.fail("expected amplitude");
  }

  // ------------------------------------------------------------ types

  TypePtr type() {
    TypePtr a = type_tensor();
    if (ts_.accept_sym("-o")) return lollipop(a, type());
    if (ts_.accept_sym("=>")) return class_arrow(a, type());
    if (ts_.accept_sym("<->")) return unit_arrow(a, type());
    return a;
  }

  TypePtr type_tensor() {
    TypePtr a = type_atom();
    while (ts_.accept_sym("*")) a = tensor_type(a, type_atom());
    return a;
  }

  TypePtr type_atom() {
    if (ts_.accept_sym("(")) {
      TypePtr t = type();
      ts_.expect_sym(")");
      return t;
    }
    if (ts_.accept_sym("[")) {
      TypePtr t = type();
      ts_.expect_sym("]");
      return list_type(t);
    }
    const Token& tok = ts_.peek();
    if (tok.kind != Tok::Ident) ts_.fail("expected type");
    ts_.next();
    if (tok.text == "Qbit") return qbit_type();
    if (!tok.text.empty() && tok.text[0] == '~') {
      std::string base = tok.text.substr(1);
      if (!reg_.family(base) && !reg_.family(tok.text)) throw ParseError(tok.loc, "unknown type '" + tok.text + "'");
      if (!reg_.family(tok.text)) reg_.shape_type(data_type(base));
      return data_type(tok.text);
    }
    const TypeFamily* f = reg_.family(tok.text);
    if (!f) throw ParseError(tok.loc, "unknown type '" + tok.text + "'");
    if (!f->params.empty()) throw ParseError(tok.loc, "type '" + tok.text + "' needs parameters");
    return data_type(tok.text);
  }

  TypePtr checked_type() {
    SourceLoc loc = ts_.peek().loc;
    TypePtr t = type();
    std::string why;
    if (!reg_.validate_type(t, &why)) throw ParseError(loc, why);
    if (t->kind == TypeKind::UnitArrow && !(reg_.is_quantum(t->dom()) && reg_.is_quantum(t->cod())))
      throw ParseError(loc, "unitary arrows relate quantum types");
    return t;
  }

  // ------------------------------------------------------------ terms

  TermPtr term() {
    SourceLoc loc = ts_.peek().loc;
    if (ts_.accept_sym("\\")) {
      std::vector<std::string> xs;
      do {
        xs.push_back(binder_name());
      } while (ts_.peek().kind == Tok::Ident);
      ts_.expect_sym(".");
      for (const auto& x : xs) scope_.push_back(x);
      TermPtr body = term();
      scope_.resize(scope_.size() - xs.size());
      for (auto it = xs.rbegin(); it != xs.rend(); ++it) body = mk_lambda(*it, body);
      return with_loc(body, loc);
    }
    if (ts_.is_ident("letrec")) {
      ts_.next();
      std::string f = binder_name();
      std::string x = binder_name();
      ts_.expect_sym("=");
      scope_.push_back(f);
      scope_.push_back(x);
      TermPtr body = term();
      scope_.resize(scope_.size() - 2);
      return with_loc(mk_letrec(f, x, body), loc);
    }
    return sum();
  }

  TermPtr sum() {
    SourceLoc loc = ts_.peek().loc;
    std::vector<SumItem> items;
    bool explicit_amp = false;
    bool minus = ts_.accept_sym("-");
    items.push_back(item(minus, explicit_amp));
    if (minus) explicit_amp = true;
    while (ts_.is_sym("+") || ts_.is_sym("-")) {
      bool neg = ts_.next().text == "-";
      bool dummy = false;
      items.push_back(item(neg, dummy));
    }
    if (items.size() == 1 && !explicit_amp) return items[0].term;
    return with_loc(mk_sum(std::move(items)), loc);
  }

  // `a*b*t` is ambiguous when t starts like an amplitude (`(2)*1 x`), so every
  // prefix ending in `*` is a candidate, longest first.
  SumItem item(bool negate, bool& explicit_amp) {
    auto m = ts_.mark();
    auto fatal = [](const ParseError& e) { return std::string(e.what()).find("outside Q(zeta8)") != std::string::npos; };
    std::vector<std::pair<Amplitude, std::size_t>> prefixes;
    try {
      Amplitude a = amp_unary();
      for (;;) {
        if (ts_.accept_sym("/")) {
          Amplitude b = amp_unary();
          if (b.is_zero()) ts_.fail("division by zero amplitude");
          a = a / b;
          continue;
        }
        if (!ts_.accept_sym("*")) break;
        prefixes.emplace_back(a, ts_.mark());
        auto before = ts_.mark();
        try {
          a = a * amp_unary();
        } catch (const ParseError& e) {
          if (fatal(e)) throw;
          ts_.reset(before);
          break;
        }
      }
    } catch (const ParseError& e) {
      if (fatal(e)) throw;
    }
    for (auto it = prefixes.rbegin(); it != prefixes.rend(); ++it) {
      ts_.reset(it->second);
      try {
        TermPtr t = cons_level();
        explicit_amp = true;
        return {negate ? -it->first : it->first, t};
      } catch (const ParseError& e) {
        if (fatal(e)) throw;
      }
    }
    ts_.reset(m);
    TermPtr t = cons_level();
    return {negate ? Amplitude(-1) : Amplitude(1), t};
  }

  TermPtr cons_level() {
    SourceLoc loc = ts_.peek().loc;
    TermPtr lhs = app();
    if (ts_.accept_sym("::")) {
      TermPtr rhs = cons_level();
      return with_loc(mk_cons("::", {lhs, rhs}), loc);
    }
    return lhs;
  }

  bool atom_start() const {
    const Token& t = ts_.peek();
    switch (t.kind) {
      case Tok::Int:
      case Tok::Ket: return true;
      case Tok::Ident: return !kKeywords.count(t.text) || t.text == "qcase" || t.text == "match";
      case Tok::Sym: return t.text == "(" || t.text == "[" || t.text == "@";
      default: return false;
    }
  }

  TermPtr app() {
    SourceLoc loc = ts_.peek().loc;
    TermPtr head;
    if (ts_.is_ident("unit")) {
      ts_.next();
      head = with_loc(mk_unit(atom()), loc);
    } else if (ts_.is_ident("shape")) {
      ts_.next();
      head = with_loc(mk_shape(atom()), loc);
    } else {
      head = atom();
    }
    while (atom_start()) head = with_loc(mk_app(head, atom()), loc);
    return head;
  }

  TermPtr atom() {
    const Token tok = ts_.peek();
    SourceLoc loc = tok.loc;
    switch (tok.kind) {
      case Tok::Int: {
        ts_.next();
        unsigned long n = std::stoul(tok.text);
        if (n > 100000) throw ParseError(loc, "numeral too large");
        return with_loc(mk_nat(static_cast<unsigned>(n)), loc);
      }
      case Tok::Ket: {
        ts_.next();
        if (tok.text == "|0>") return mk_ket(0);
        if (tok.text == "|1>") return mk_ket(1);
        bool minus = tok.text == "|->";
        return with_loc(mk_sum({{ket_plus(false), mk_ket(0)}, {ket_plus(minus), mk_ket(1)}}), loc);
      }
      case Tok::Sym: {
        if (tok.text == "(") return paren();
        if (tok.text == "[") {
          ts_.next();
          std::vector<TermPtr> elems;
          if (!ts_.accept_sym("]")) {
            do {
              elems.push_back(term());
            } while (ts_.accept_sym(","));
            ts_.expect_sym("]");
          }
          return with_loc(mk_list(elems), loc);
        }
        if (tok.text == "@") {
          ts_.next();
          if (!ts_.is_ident("orthogonal")) ts_.fail("expected 'orthogonal' after '@'");
          ts_.next();
          if (ts_.is_ident("qcase")) return with_orthogonal(atom());
          if (!ts_.is_sym("(")) ts_.fail("@orthogonal applies to a qcase or a parenthesized superposition");
          TermPtr t = paren();
          if (t->tag != Tag::Sum) throw ParseError(loc, "@orthogonal applies to a qcase or a superposition");
          return with_orthogonal(t);
        }
        ts_.fail("expected term");
      }
      case Tok::Ident: {
        if (tok.text == "qcase") return qcase();
        if (tok.text == "match") return match();
        if (kKeywords.count(tok.text)) ts_.fail("unexpected keyword");
        ts_.next();
        if (std::find(scope_.rbegin(), scope_.rend(), tok.text) != scope_.rend()) return with_loc(mk_var(tok.text), loc);
        if (auto it = defs.find(tok.text); it != defs.end()) return it->second;
        if (!tok.text.empty() && tok.text[0] == '~') ensure_shadow(tok);
        if (const ConstructorSig* sig = reg_.find(tok.text)) return ctor_app(*sig, loc);
        return with_loc(mk_var(tok.text), loc);
      }
      default: ts_.fail("expected term");
    }
  }

  void ensure_shadow(const Token& tok) {
    std::string base = tok.text.substr(1);
    if (reg_.find(tok.text)) return;
    if (base.empty()) return;
    if (base[0] == '~') ensure_shadow(Token{Tok::Ident, base, tok.loc});
    if (reg_.find(base)) reg_.shadow_ctor(base);
  }

  TermPtr ctor_app(const ConstructorSig& sig, SourceLoc loc) {
    std::size_t n = sig.arg_types.size();
    if (n == 0) return with_loc(mk_cons(sig.name), loc);
    if (n == 1) return with_loc(mk_cons(sig.name, {atom()}), loc);
    ts_.expect_sym("(");
    std::vector<TermPtr> args;
    do {
      args.push_back(term());
    } while (ts_.accept_sym(","));
    ts_.expect_sym(")");
    if (args.size() != n)
      throw ParseError(loc, "constructor '" + sig.name + "' expects " + std::to_string(n) + " arguments, got " +
                                std::to_string(args.size()));
    return with_loc(mk_cons(sig.name, std::move(args)), loc);
  }

  TermPtr paren() {
    SourceLoc loc = ts_.peek().loc;
    ts_.expect_sym("(");
    if (ts_.accept_sym(")")) return with_loc(mk_cons("()"), loc);
    TermPtr t = term();
    if (ts_.is_sym(",")) {
      std::vector<TermPtr> elems = {t};
      while (ts_.accept_sym(",")) elems.push_back(term());
      ts_.expect_sym(")");
      TermPtr acc = elems.back();
      for (std::size_t i = elems.size() - 1; i-- > 0;) acc = mk_pair(elems[i], acc);
      return with_loc(acc, loc);
    }
    if (ts_.accept_sym(":")) {
      SourceLoc tloc = ts_.peek().loc;
      TypePtr ty = checked_type();
      ts_.expect_sym(")");
      try {
        return ascribe(t, ty);
      } catch (const std::invalid_argument& e) {
        throw ParseError(tloc, e.what());
      }
    }
    ts_.expect_sym(")");
    return t;
  }

  TermPtr qcase() {
    SourceLoc loc = ts_.peek().loc;
    ts_.next();
    TermPtr s = term();
    ts_.expect_sym("{");
    TermPtr b[2];
    for (int k = 0; k < 2; ++k) {
      if (k == 1) ts_.expect_sym(",");
      const Token& lab = ts_.peek();
      int which = -1;
      if (lab.kind == Tok::Int && (lab.text == "0" || lab.text == "1")) which = lab.text == "0" ? 0 : 1;
      if (lab.kind == Tok::Ket && (lab.text == "|0>" || lab.text == "|1>")) which = lab.text == "|0>" ? 0 : 1;
      if (which < 0) ts_.fail("expected qcase branch label 0 or 1");
      if (b[which]) ts_.fail("duplicate qcase branch");
      ts_.next();
      ts_.expect_sym("->");
      b[which] = term();
    }
    ts_.accept_sym(",");
    ts_.expect_sym("}");
    return with_loc(mk_qcase(s, b[0], b[1]), loc);
  }

  struct Pattern {
    std::string ctor;
    std::vector<std::string> vars;
    SourceLoc loc;
  };

  Pattern pattern() {
    Pattern p;
    p.loc = ts_.peek().loc;
    if (ts_.accept_sym("(")) {
      if (ts_.accept_sym(")")) {
        p.ctor = "()";
        return p;
      }
      p.ctor = ",";
      p.vars.push_back(binder_name());
      ts_.expect_sym(",");
      p.vars.push_back(binder_name());
      ts_.expect_sym(")");
      return p;
    }
    if (ts_.accept_sym("[")) {
      ts_.expect_sym("]");
      p.ctor = "[]";
      return p;
    }
    const Token& t = ts_.peek();
    if (t.kind == Tok::Int) {
      if (t.text != "0") ts_.fail("numeric patterns other than 0 are not supported");
      ts_.next();
      p.ctor = "0";
      return p;
    }
    if (t.kind != Tok::Ident) ts_.fail("expected pattern");
    if (ts_.is_sym("::", 1)) {
      p.ctor = "::";
      p.vars.push_back(binder_name());
      ts_.next();
      p.vars.push_back(binder_name());
      return p;
    }
    Token name = ts_.next();
    if (!name.text.empty() && name.text[0] == '~') ensure_shadow(name);
    const ConstructorSig* sig = reg_.find(name.text);
    if (!sig) throw ParseError(name.loc, "unknown constructor '" + name.text + "'");
    p.ctor = sig->name;
    std::size_t n = sig->arg_types.size();
    if (n == 1 && !ts_.is_sym("(")) {
      p.vars.push_back(binder_name());
    } else if (n >= 1) {
      ts_.expect_sym("(");
      do {
        p.vars.push_back(binder_name());
      } while (ts_.accept_sym(","));
      ts_.expect_sym(")");
    }
    if (p.vars.size() != n)
      throw ParseError(name.loc, "constructor '" + name.text + "' expects " + std::to_string(n) + " arguments");
    return p;
  }

  TermPtr match() {
    SourceLoc loc = ts_.peek().loc;
    ts_.next();
    TermPtr s = term();
    ts_.expect_sym("{");
    std::vector<Branch> got;
    std::vector<SourceLoc> locs;
    do {
      if (ts_.is_sym("}")) break;
      Pattern p = pattern();
      std::set<std::string> seen;
      for (const auto& v : p.vars)
        if (!seen.insert(v).second) throw ParseError(p.loc, "variable '" + v + "' bound twice in pattern");
      ts_.expect_sym("->");
      for (const auto& v : p.vars) scope_.push_back(v);
      TermPtr body = term();
      scope_.resize(scope_.size() - p.vars.size());
      got.push_back({p.ctor, p.vars, body});
      locs.push_back(p.loc);
    } while (ts_.accept_sym(","));
    ts_.expect_sym("}");
    if (got.empty()) throw ParseError(loc, "match needs at least one branch");
    const ConstructorSig* first = reg_.find(got[0].ctor);
    std::vector<std::string> ctors = reg_.constructors_of(first->type_name);
    std::vector<Branch> ordered;
    for (const auto& c : ctors) {
      auto it = std::find_if(got.begin(), got.end(), [&](const Branch& b) { return b.ctor == c; });
      if (it == got.end()) throw ParseError(loc, "match is missing a branch for constructor '" + c + "'");
      ordered.push_back(*it);
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (std::find(ctors.begin(), ctors.end(), got[i].ctor) == ctors.end())
        throw ParseError(locs[i], "constructor '" + got[i].ctor + "' does not belong to type '" + first->type_name + "'");
      for (std::size_t j = 0; j < i; ++j)
        if (got[j].ctor == got[i].ctor) throw ParseError(locs[i], "duplicate branch for '" + got[i].ctor + "'");
    }
    return with_loc(mk_match(s, std::move(ordered)), loc);
  }

  std::string binder_name() {
    const Token& t = ts_.peek();
    if (t.kind != Tok::Ident) ts_.fail("expected variable name");
    if (kKeywords.count(t.text)) ts_.fail("keyword used as variable");
    if (reg_.is_constructor(t.text)) ts_.fail("constructor used as variable");
    return ts_.next().text;
  }

  // Pushes an ascribed arrow type into an abstraction, following nested abstractions.
  TermPtr ascribe(const TermPtr& t, const TypePtr& ty) {
    switch (t->tag) {
      case Tag::Lambda:
      case Tag::LetRec: {
        if (!is_arrow(ty)) throw std::invalid_argument("abstraction ascribed non-function type " + type_str(ty));
        if (ty->kind == TypeKind::UnitArrow)
          throw std::invalid_argument("a unitary type needs a 'unit' term, not an abstraction");
        TermPtr body = t->body();
        if (body->tag == Tag::Lambda || body->tag == Tag::LetRec || body->tag == Tag::Unit) {
          if (is_arrow(ty->cod())) body = ascribe(body, ty->cod());
        }
        TermPtr rebuilt = t->tag == Tag::Lambda ? mk_lambda(t->name, body, ty) : mk_letrec(t->name, t->name2, body, ty);
        rebuilt = with_loc(rebuilt, t->loc);
        if (!t->hint.empty()) rebuilt = with_hint(rebuilt, t->hint);
        return rebuilt;
      }
      case Tag::Unit: {
        if (ty->kind != TypeKind::UnitArrow) throw std::invalid_argument("unit term ascribed non-unitary type " + type_str(ty));
        TermPtr inner = t->body();
        if (inner->tag == Tag::Lambda || inner->tag == Tag::LetRec || inner->tag == Tag::Unit)
          inner = ascribe(inner, lollipop(ty->dom(), ty->cod()));
        TermPtr rebuilt = with_loc(mk_unit(inner), t->loc);
        if (!t->hint.empty()) rebuilt = with_hint(rebuilt, t->hint);
        return rebuilt;
      }
      default: throw std::invalid_argument("type ascriptions are only supported on abstractions and unit terms");
    }
  }

  // ------------------------------------------------------------ file level

  void type_decl(SourceFile& out) {
    SourceLoc loc = ts_.peek().loc;
    ts_.next();
    std::string name = ts_.expect_ident();
    if (name == "Qbit" || kKeywords.count(name)) throw ParseError(loc, "invalid type name '" + name + "'");
    ts_.expect_sym("=");
    TypeDecl d;
    d.name = name;
    // Allow recursive references while reading constructor signatures.
    do {
      const Token& ct = ts_.peek();
      if (ct.kind != Tok::Ident) ts_.fail("expected constructor name");
      std::string cname = ts_.next().text;
      std::vector<TypePtr> args;
      if (ts_.accept_sym("(")) {
        do {
          args.push_back(decl_arg_type(name));
        } while (ts_.accept_sym(","));
        ts_.expect_sym(")");
      }
      d.ctors.push_back({cname, args});
    } while (ts_.accept_sym("|"));
    ts_.expect_sym(";");
    try {
      reg_.declare_type(d.name, d.ctors);
    } catch (const RegistryError& e) {
      throw ParseError(loc, e.what());
    }
    out.types.push_back(d);
  }

  TypePtr decl_arg_type(const std::string& self) {
    if (ts_.is_ident(self.c_str())) {
      ts_.next();
      return data_type(self);
    }
    return type();
  }

  Definition definition(bool is_main) {
    Definition d;
    d.loc = ts_.peek().loc;
    ts_.next();
    if (is_main) {
      d.name = "main";
    } else {
      const Token& t = ts_.peek();
      if (t.kind != Tok::Ident) ts_.fail("expected definition name");
      d.name = t.text;
      if (kKeywords.count(d.name)) ts_.fail("keyword used as definition name");
      if (reg_.is_constructor(d.name)) ts_.fail("constructor used as definition name");
      if (defs.count(d.name)) throw ParseError(t.loc, "duplicate definition '" + d.name + "'");
      ts_.next();
    }
    if (ts_.accept_sym(":")) d.type = checked_type();
    ts_.expect_sym("=");
    SourceLoc tloc = ts_.peek().loc;
    TermPtr t = term();
    ts_.expect_sym(";");
    if (d.type && (t->tag == Tag::Lambda || t->tag == Tag::LetRec || t->tag == Tag::Unit)) {
      try {
        t = ascribe(t, d.type);
      } catch (const std::invalid_argument& e) {
        throw ParseError(tloc, e.what());
      }
    }
    d.term = with_hint(t, d.name);
    if (!is_main) defs[d.name] = d.term;
    return d;
  }

  SourceFile file() {
    SourceFile out;
    while (!ts_.at_end()) {
      if (ts_.is_ident("type")) {
        type_decl(out);
      } else if (ts_.is_ident("def")) {
        out.defs.push_back(definition(false));
      } else if (ts_.is_ident("main")) {
        if (out.main) ts_.fail("duplicate main");
        out.main = definition(true);
      } else {
        ts_.fail("expected 'type', 'def' or 'main'");
      }
    }
    return out;
  }

  TokenStream& stream() { return ts_; }

private:
  TokenStream ts_;
  Registry& reg_;
  std::vector<std::string> scope_;
};

// ---------------------------------------------------------------- printing

int prec_of(const TermPtr& t) {
  switch (t->tag) {
    case Tag::Lambda:
    case Tag::LetRec: return t->ann ? 4 : 0;
    case Tag::Sum: return t->orthogonal_annot ? 4 : 1;
    case Tag::Cons: {
      if (t->name == "::") return 2;
      if (t->kids.size() == 1) {
        TermPtr k = t;
        while (k->tag == Tag::Cons && k->name == "S") k = k->kids[0];
        if (k->tag == Tag::Cons && k->name == "0") return 4;
        return 3;
      }
      return 4;
    }
    case Tag::App:
    case Tag::Unit:
    case Tag::Shape: return 3;
    default: return 4;
  }
}

void print(std::ostream& os, const TermPtr& t, int ctx);

void print_raw(std::ostream& os, const TermPtr& t) {
  switch (t->tag) {
    case Tag::Var: os << t->name; return;
    case Tag::Ket0: os << "|0>"; return;
    case Tag::Ket1: os << "|1>"; return;
    case Tag::QCase:
      if (t->orthogonal_annot) os << "@orthogonal ";
      os << "qcase ";
      print(os, t->kids[0], 0);
      os << " { 0 -> ";
      print(os, t->kids[1], 0);
      os << ", 1 -> ";
      print(os, t->kids[2], 0);
      os << " }";
      return;
    case Tag::Match: {
      os << "match ";
      print(os, t->kids[0], 0);
      os << " { ";
      bool first = true;
      for (const auto& b : t->branches) {
        if (!first) os << ", ";
        first = false;
        if (b.ctor == "::") {
          os << b.vars[0] << " :: " << b.vars[1];
        } else if (b.ctor == ",") {
          os << "(" << b.vars[0] << ", " << b.vars[1] << ")";
        } else if (b.vars.empty()) {
          os << b.ctor;
        } else if (b.vars.size() == 1) {
          os << b.ctor << " " << b.vars[0];
        } else {
          os << b.ctor << "(";
          for (std::size_t i = 0; i < b.vars.size(); ++i) os << (i ? ", " : "") << b.vars[i];
          os << ")";
        }
        os << " -> ";
        print(os, b.body, 0);
      }
      os << " }";
      return;
    }
    case Tag::Cons: {
      const auto& c = t->name;
      if (c == "::") {
        print(os, t->kids[0], 3);
        os << " :: ";
        print(os, t->kids[1], 2);
        return;
      }
      if (c == ",") {
        os << "(";
        print(os, t->kids[0], 0);
        os << ", ";
        print(os, t->kids[1], 0);
        os << ")";
        return;
      }
      if (c == "S") {
        unsigned n = 0;
        TermPtr k = t;
        while (k->tag == Tag::Cons && k->name == "S") {
          k = k->kids[0];
          ++n;
        }
        if (k->tag == Tag::Cons && k->name == "0") {
          os << n;
          return;
        }
      }
      if (t->kids.empty()) {
        os << c;
      } else if (t->kids.size() == 1) {
        os << c << " ";
        print(os, t->kids[0], 4);
      } else {
        os << c << "(";
        for (std::size_t i = 0; i < t->kids.size(); ++i) {
          if (i) os << ", ";
          print(os, t->kids[i], 0);
        }
        os << ")";
      }
      return;
    }
    case Tag::Lambda:
      if (t->ann) os << "(";
      os << "\\" << t->name << ". ";
      print(os, t->kids[0], 0);
      if (t->ann) os << " : " << type_str(t->ann) << ")";
      return;
    case Tag::LetRec:
      if (t->ann) os << "(";
      os << "letrec " << t->name << " " << t->name2 << " = ";
      print(os, t->kids[0], 0);
      if (t->ann) os << " : " << type_str(t->ann) << ")";
      return;
    case Tag::Unit:
      os << "unit ";
      print(os, t->kids[0], 4);
      return;
    case Tag::Shape:
      os << "shape ";
      print(os, t->kids[0], 4);
      return;
    case Tag::App:
      print(os, t->kids[0], 3);
      os << " ";
      print(os, t->kids[1], 4);
      return;
    case Tag::Sum: {
      if (t->orthogonal_annot) os << "@orthogonal (";
      bool first = true;
      for (const auto& it : t->items) {
        if (!first) os << " + ";
        first = false;
        os << "(" << it.amp.str() << ")*";
        print(os, it.term, 2);
      }
      if (t->orthogonal_annot) os << ")";
      return;
    }
  }
}

void print(std::ostream& os, const TermPtr& t, int ctx) {
  if (prec_of(t) < ctx) {
    os << "(";
    print_raw(os, t);
    os << ")";
  } else {
    print_raw(os, t);
  }
}

// Renames every binder to a positional name that cannot clash with source identifiers.
TermPtr canonical_names(const TermPtr& t, unsigned& counter) {
  auto fresh = [&] { return "%" + std::to_string(counter++); };
  switch (t->tag) {
    case Tag::Var:
    case Tag::Ket0:
    case Tag::Ket1: return t;
    case Tag::Lambda: {
      std::string x = fresh();
      TermPtr body = canonical_names(substitute(t->kids[0], {{t->name, mk_var(x)}}), counter);
      return mk_lambda(x, body, t->ann);
    }
    case Tag::LetRec: {
      std::string f = fresh(), x = fresh();
      TermPtr body = substitute(t->kids[0], {{t->name, mk_var(f)}, {t->name2, mk_var(x)}});
      return mk_letrec(f, x, canonical_names(body, counter), t->ann);
    }
    case Tag::Match: {
      std::vector<Branch> bs;
      TermPtr s = canonical_names(t->kids[0], counter);
      for (const auto& b : t->branches) {
        Subst sub;
        Branch nb{b.ctor, {}, nullptr};
        for (const auto& v : b.vars) {
          std::string n = fresh();
          sub[v] = mk_var(n);
          nb.vars.push_back(n);
        }
        nb.body = canonical_names(substitute(b.body, sub), counter);
        bs.push_back(std::move(nb));
      }
      return mk_match(s, std::move(bs));
    }
    case Tag::Sum: {
      std::vector<SumItem> items;
      for (const auto& it : t->items) items.push_back({it.amp, canonical_names(it.term, counter)});
      return mk_sum(std::move(items), t->orthogonal_annot);
    }
    case Tag::QCase:
      return mk_qcase(canonical_names(t->kids[0], counter), canonical_names(t->kids[1], counter),
                      canonical_names(t->kids[2], counter), t->orthogonal_annot);
    case Tag::Cons: {
      std::vector<TermPtr> args;
      for (const auto& k : t->kids) args.push_back(canonical_names(k, counter));
      return mk_cons(t->name, std::move(args));
    }
    case Tag::Unit: return mk_unit(canonical_names(t->kids[0], counter));
    case Tag::Shape: return mk_shape(canonical_names(t->kids[0], counter));
    case Tag::App: return mk_app(canonical_names(t->kids[0], counter), canonical_names(t->kids[1], counter));
  }
  return t;
}

} // namespace

const Definition* SourceFile::find(const std::string& name) const {
  if (name == "main" && main) return &*main;
  for (const auto& d : defs)
    if (d.name == name) return &d;
  return nullptr;
}

const Definition* SourceFile::entry() const {
  if (main) return &*main;
  if (defs.empty()) return nullptr;
  return &defs.back();
}

SourceFile parse(const std::string& text) {
  SourceFile out;
  Parser p(TokenStream(detail::tokenize(text)), out.registry);
  SourceFile parsed = p.file();
  out.types = std::move(parsed.types);
  out.defs = std::move(parsed.defs);
  out.main = std::move(parsed.main);
  return out;
}

TermPtr parse_term(const std::string& text, const Registry& reg, const std::map<std::string, TermPtr>& defs) {
  // Only lazily created shadow families are ever added to the registry here.
  Registry& r = const_cast<Registry&>(reg);
  Parser p(TokenStream(detail::tokenize(text)), r);
  p.defs = defs;
  TermPtr t = p.term();
  if (!p.stream().at_end()) p.stream().fail("unexpected trailing input");
  return t;
}

TypePtr parse_type(const std::string& text, const Registry& reg) {
  Registry& r = const_cast<Registry&>(reg);
  Parser p(TokenStream(detail::tokenize(text)), r);
  TypePtr t = p.checked_type();
  if (!p.stream().at_end()) p.stream().fail("unexpected trailing input");
  return t;
}

Amplitude parse_amplitude(const std::string& text) {
  Registry r;
  Parser p(TokenStream(detail::tokenize(text)), r);
  Amplitude a = p.amp_sum();
  if (!p.stream().at_end()) p.stream().fail("unexpected trailing input");
  return a;
}

std::string pretty(const TermPtr& t) {
  std::ostringstream os;
  print(os, t, 0);
  return os.str();
}

std::string alpha_key(const TermPtr& t) {
  unsigned counter = 0;
  return pretty(canonical_names(t, counter));
}

} // namespace hyrql
