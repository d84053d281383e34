#include "hyrql/analysis.hpp"

#include <algorithm>
#include <random>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hyrql/canonical.hpp"
#include "hyrql/parser.hpp"
#include "hyrql/translate.hpp"

namespace hyrql::analysis {

using trs::SKind;
using trs::STermPtr;

// ================================================================ first-order view

FTerm first_order(const STermPtr& t) {
  switch (t->kind) {
    case SKind::Var: return {true, t->name, {}};
    case SKind::Fn:
    case SKind::Con: return {false, t->name, {}};
    case SKind::Superpose: {
      FTerm f{false, kPlus, {}};
      for (const auto& it : t->items) f.args.push_back(first_order(it.term));
      return f;
    }
    case SKind::Apply: {
      FTerm f{false, t->head->name, {}};
      if (t->head->kind == SKind::Var) {
        f.name = kAt;
        f.args.push_back({true, t->head->name, {}});
      }
      for (const auto& a : t->args) f.args.push_back(first_order(a));
      return f;
    }
  }
  return {};
}

std::string fterm_str(const FTerm& t) {
  if (t.var || t.args.empty()) return t.name;
  std::string s = t.name + "(";
  for (std::size_t i = 0; i < t.args.size(); ++i) s += (i ? ", " : "") + fterm_str(t.args[i]);
  return s + ")";
}

// ================================================================ precedence

Precedence Precedence::from_order(const std::vector<std::string>& order) {
  Precedence p;
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = i + 1; j < order.size(); ++j) p.add(order[i], order[j]);
  return p;
}

Precedence Precedence::parse(const std::string& text) {
  Precedence p;
  std::string chain;
  std::istringstream in(text);
  auto trim = [](std::string s) {
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    return s;
  };
  while (std::getline(in, chain, ',')) {
    chain = trim(chain);
    if (chain.empty()) continue;
    std::vector<std::string> names;
    std::size_t start = 0;
    for (;;) {
      std::size_t gt = chain.find('>', start);
      std::string n = trim(chain.substr(start, gt == std::string::npos ? std::string::npos : gt - start));
      if (n.empty() || n.find_first_of(" \t") != std::string::npos)
        throw AnalysisError("bad precedence '" + chain + "': expected f>g>...");
      names.push_back(n);
      if (gt == std::string::npos) break;
      start = gt + 1;
    }
    for (std::size_t i = 0; i + 1 < names.size(); ++i) p.add(names[i], names[i + 1]);
  }
  return p;
}

void Precedence::add(const std::string& f, const std::string& g) {
  if (f == g || greater(g, f)) throw AnalysisError("precedence is cyclic at " + f + " > " + g);
  std::set<std::string> below = {g};
  if (auto it = above_.find(g); it != above_.end()) below.insert(it->second.begin(), it->second.end());
  above_[f].insert(below.begin(), below.end());
  for (auto& [h, set] : above_)
    if (set.count(f)) set.insert(below.begin(), below.end());
}

bool Precedence::greater(const std::string& f, const std::string& g) const {
  auto it = above_.find(f);
  return it != above_.end() && it->second.count(g);
}

std::string Precedence::str() const {
  std::string s;
  for (const auto& [f, below] : above_)
    for (const auto& g : below) s += (s.empty() ? "" : ", ") + f + " > " + g;
  return s;
}

// ================================================================ LPO

namespace {

bool contains_var(const FTerm& t, const std::string& x) {
  if (t.var) return t.name == x;
  return std::any_of(t.args.begin(), t.args.end(), [&](const FTerm& a) { return contains_var(a, x); });
}

struct Lpo {
  const Precedence& p;
  const std::set<std::string>& defined;

  bool sym_gt(const std::string& f, const std::string& g) const {
    if (f == g || !defined.count(f)) return false;
    return !defined.count(g) || p.greater(f, g);
  }

  bool all_below(const FTerm& s, const FTerm& t) const {
    return std::all_of(t.args.begin(), t.args.end(), [&](const FTerm& tj) { return gt(s, tj); });
  }

  // Returns the case that applies, or empty.
  std::string why(const FTerm& s, const FTerm& t) const {
    if (t.var) return !s.var && contains_var(s, t.name) ? "variable " + t.name + " occurs in the left side" : "";
    if (s.var) return "";
    for (std::size_t i = 0; i < s.args.size(); ++i)
      if (s.args[i] == t || gt(s.args[i], t)) return "argument " + std::to_string(i + 1) + " dominates";
    if (sym_gt(s.name, t.name) && all_below(s, t)) return "precedence " + s.name + " > " + t.name;
    if (s.name == t.name && s.args.size() == t.args.size()) {
      std::size_t i = 0;
      while (i < s.args.size() && s.args[i] == t.args[i]) ++i;
      if (i < s.args.size() && gt(s.args[i], t.args[i]) && all_below(s, t))
        return "lexicographic decrease at argument " + std::to_string(i + 1);
    }
    return "";
  }

  bool gt(const FTerm& s, const FTerm& t) const { return !why(s, t).empty(); }
};

std::set<std::string> defined_symbols(const std::vector<trs::Rule>& rules) {
  std::set<std::string> out;
  for (const auto& r : rules) out.insert(first_order(r.lhs).name);
  return out;
}

bool orient_all(const std::vector<trs::Rule>& rules, const Precedence& p, const std::set<std::string>& defined,
                LpoResult& res) {
  Lpo lpo{p, defined};
  res.justifications.clear();
  for (const auto& r : rules) {
    std::string w = lpo.why(first_order(r.lhs), first_order(r.rhs));
    if (w.empty()) {
      res.failed_rule = trs::rule_str(r);
      return false;
    }
    res.justifications.push_back(trs::rule_str(r) + ": " + w);
  }
  return true;
}

} // namespace

bool lpo_greater(const FTerm& s, const FTerm& t, const Precedence& p, const std::set<std::string>& defined) {
  return Lpo{p, defined}.gt(s, t);
}

LpoResult lpo_terminates(const trs::Sttrs& R, const std::optional<Precedence>& prec) {
  std::vector<trs::Rule> rules = R.used_rules();
  std::set<std::string> defined = defined_symbols(rules);
  LpoResult res;
  if (prec) {
    res.precedence = *prec;
    res.proved = orient_all(rules, *prec, defined, res);
    if (!res.proved) res.message = "rule " + res.failed_rule + " is not decreasing under " + prec->str();
    return res;
  }
  std::vector<std::string> syms(defined.begin(), defined.end());
  if (syms.size() > 8) {
    res.message = "precedence search is limited to 8 defined symbols; supply a precedence";
    return res;
  }
  std::string first_failure;
  do {
    Precedence p = Precedence::from_order(syms);
    LpoResult attempt;
    if (orient_all(rules, p, defined, attempt)) {
      attempt.proved = true;
      attempt.precedence = p;
      return attempt;
    }
    if (first_failure.empty()) first_failure = attempt.failed_rule;
  } while (std::next_permutation(syms.begin(), syms.end()));
  res.failed_rule = first_failure;
  res.message = "no precedence orients every rule; first failure under the initial order: " + first_failure;
  return res;
}

bool lpo_replay(const trs::Sttrs& R, const LpoResult& proof) {
  if (!proof.proved) return false;
  std::vector<trs::Rule> rules = R.used_rules();
  std::set<std::string> defined = defined_symbols(rules);
  Lpo lpo{proof.precedence, defined};
  return std::all_of(rules.begin(), rules.end(),
                     [&](const trs::Rule& r) { return lpo.gt(first_order(r.lhs), first_order(r.rhs)); });
}

// ================================================================ polynomials

namespace {

Polynomial constant(const mpq_class& c) {
  Polynomial p;
  if (c != 0) p[{}] = c;
  return p;
}

Polynomial variable(const std::string& x) { return {{{{x, 1u}}, mpq_class(1)}}; }

void add_into(Polynomial& acc, const Polynomial& p, const mpq_class& scale = 1) {
  for (const auto& [m, c] : p) {
    mpq_class& slot = acc[m];
    slot += scale * c;
    if (slot == 0) acc.erase(m);
  }
}

Polynomial mul(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (const auto& [ma, ca] : a)
    for (const auto& [mb, cb] : b) {
      Monomial m = ma;
      for (const auto& [x, e] : mb) m[x] += e;
      mpq_class& slot = out[m];
      slot += ca * cb;
      if (slot == 0) out.erase(m);
    }
  return out;
}

Polynomial power(const Polynomial& p, unsigned e) {
  Polynomial out = constant(1);
  for (unsigned i = 0; i < e; ++i) out = mul(out, p);
  return out;
}

Polynomial apply_assignment(const Assignment& a, const std::vector<Polynomial>& args) {
  Polynomial out = constant(a.constant);
  for (std::size_t i = 0; i < a.coefficients.size() && i < args.size(); ++i) add_into(out, args[i], a.coefficients[i]);
  for (const auto& m : a.monomials) {
    Polynomial term = constant(m.coeff);
    for (std::size_t i = 0; i < m.powers.size(); ++i)
      if (m.powers[i]) term = mul(term, power(i < args.size() ? args[i] : Polynomial{}, m.powers[i]));
    add_into(out, term);
  }
  return out;
}

std::size_t assignment_arity(const Assignment& a) {
  std::size_t n = a.coefficients.size();
  for (const auto& m : a.monomials) n = std::max(n, m.powers.size());
  return n;
}

} // namespace

std::string poly_str(const Polynomial& p) {
  if (p.empty()) return "0";
  std::string s;
  // Highest degree first.
  std::vector<std::pair<Monomial, mpq_class>> terms(p.begin(), p.end());
  auto degree = [](const Monomial& m) {
    unsigned d = 0;
    for (const auto& [x, e] : m) d += e;
    return d;
  };
  std::stable_sort(terms.begin(), terms.end(), [&](const auto& a, const auto& b) { return degree(a.first) > degree(b.first); });
  for (const auto& [m, c] : terms) {
    mpq_class mag = abs(c);
    if (s.empty()) s = c < 0 ? "-" : "";
    else s += c < 0 ? " - " : " + ";
    std::string mono;
    for (const auto& [x, e] : m) mono += (mono.empty() ? "" : "*") + x + (e > 1 ? "^" + std::to_string(e) : "");
    if (mono.empty()) s += mag.get_str();
    else if (mag == 1) s += mono;
    else s += mag.get_str() + "*" + mono;
  }
  return s;
}

mpq_class poly_eval(const Polynomial& p, const std::map<std::string, mpq_class>& point) {
  mpq_class total = 0;
  for (const auto& [m, c] : p) {
    mpq_class v = c;
    for (const auto& [x, e] : m) {
      auto it = point.find(x);
      mpq_class xv = it == point.end() ? mpq_class(0) : it->second;
      for (unsigned i = 0; i < e; ++i) v *= xv;
    }
    total += v;
  }
  return total;
}

// ================================================================ quasi-interpretations

std::string qi_status_name(QiStatus s) {
  switch (s) {
    case QiStatus::Verified: return "verified";
    case QiStatus::NotRefuted: return "not-refuted";
    case QiStatus::CounterRule: return "counter-rule";
    case QiStatus::Malformed: return "malformed";
  }
  return "?";
}

namespace {

mpq_class rational(const nlohmann::json& j, const std::string& where) {
  static const std::regex form(R"(\s*-?\d+(\s*/\s*\d+)?\s*)");
  mpq_class q;
  if (j.is_number_integer()) {
    q = mpq_class(j.dump());
  } else if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (!std::regex_match(s, form)) throw QiMalformed(where + ": '" + s + "' is not a rational a/b");
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; }), s.end());
    q = mpq_class(s);
    if (q.get_den() == 0) throw QiMalformed(where + ": zero denominator");
    q.canonicalize();
  } else {
    throw QiMalformed(where + ": expected an integer or a string \"a/b\"");
  }
  if (q < 0) throw QiMalformed(where + " is negative");
  return q;
}

} // namespace

QuasiInterp parse_interp(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw QiMalformed(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw QiMalformed("expected an object mapping symbols to assignments");
  QuasiInterp q;
  for (const auto& [sym, body] : doc.items()) {
    if (!body.is_object()) throw QiMalformed(sym + ": expected an object");
    Assignment a;
    for (const auto& [key, val] : body.items()) {
      if (key == "constant") {
        a.constant = rational(val, sym + ".constant");
      } else if (key == "coefficients") {
        if (!val.is_array()) throw QiMalformed(sym + ".coefficients: expected an array");
        for (std::size_t i = 0; i < val.size(); ++i)
          a.coefficients.push_back(rational(val[i], sym + ".coefficients[" + std::to_string(i) + "]"));
      } else if (key == "monomials") {
        if (!val.is_array()) throw QiMalformed(sym + ".monomials: expected an array");
        for (std::size_t i = 0; i < val.size(); ++i) {
          std::string where = sym + ".monomials[" + std::to_string(i) + "]";
          const auto& m = val[i];
          if (!m.is_object() || !m.contains("coeff") || !m.contains("powers") || !m["powers"].is_array())
            throw QiMalformed(where + ": expected {coeff, powers}");
          MonomialTerm mt{rational(m["coeff"], where + ".coeff"), {}};
          for (const auto& e : m["powers"]) {
            if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<long long>() >= 0))
              throw QiMalformed(where + ".powers: expected nonnegative integers");
            mt.powers.push_back(e.get<unsigned>());
          }
          a.monomials.push_back(std::move(mt));
        }
      } else {
        throw QiMalformed(sym + ": unknown field '" + key + "'");
      }
    }
    q.symbols[sym] = std::move(a);
  }
  return q;
}

Polynomial interpret_poly(const FTerm& t, const QuasiInterp& q, const trs::Sttrs& R) {
  if (t.var) return variable(t.name);
  std::vector<Polynomial> args;
  for (const auto& a : t.args) args.push_back(interpret_poly(a, q, R));
  if (t.name == kPlus) {
    Polynomial out;
    for (const auto& a : args) add_into(out, a);
    return out;
  }
  if (t.name == kAt) {
    // Left fold of the binary assignment; x*y + x + y unless `@` is given.
    auto it = q.symbols.find(kAt);
    Polynomial acc = args.at(0);
    for (std::size_t i = 1; i < args.size(); ++i) {
      if (it != q.symbols.end()) {
        if (assignment_arity(it->second) > 2) throw QiMalformed("assignment of '@' must be binary");
        acc = apply_assignment(it->second, {acc, args[i]});
      } else {
        Polynomial next = mul(acc, args[i]);
        add_into(next, acc);
        add_into(next, args[i]);
        acc = std::move(next);
      }
    }
    return acc;
  }
  auto it = q.symbols.find(t.name);
  if (it == q.symbols.end()) throw QiMalformed("no assignment for symbol '" + t.name + "'");
  if (assignment_arity(it->second) > 0 && args.size() > assignment_arity(it->second))
    throw QiMalformed("'" + t.name + "' is applied to " + std::to_string(args.size()) + " arguments but its assignment has " +
                      std::to_string(assignment_arity(it->second)));
  (void)R;
  return apply_assignment(it->second, args);
}

namespace {

void collect_symbols(const FTerm& t, std::map<std::string, std::size_t>& out) {
  if (t.var) return;
  if (t.name != kAt && t.name != kPlus) {
    auto& n = out[t.name];
    n = std::max(n, t.args.size());
  }
  for (const auto& a : t.args) collect_symbols(a, out);
}

void collect_vars(const FTerm& t, std::set<std::string>& out) {
  if (t.var) out.insert(t.name);
  for (const auto& a : t.args) collect_vars(a, out);
}

} // namespace

QiResult qi_verify(const trs::Sttrs& R, const QuasiInterp& q, const QiOptions& opts) {
  QiResult res;
  std::vector<trs::Rule> rules = R.used_rules();
  try {
    std::map<std::string, std::size_t> syms;
    for (const auto& r : rules) {
      collect_symbols(first_order(r.lhs), syms);
      collect_symbols(first_order(r.rhs), syms);
    }
    for (const auto& [s, n] : syms) {
      if (!R.is_constructor(s)) continue;
      auto it = q.symbols.find(s);
      if (it == q.symbols.end()) throw QiMalformed("no assignment for constructor '" + s + "'");
      const Assignment& a = it->second;
      bool additive = a.monomials.empty() && a.coefficients.size() == n &&
                      std::all_of(a.coefficients.begin(), a.coefficients.end(), [](const mpq_class& c) { return c == 1; });
      if (!additive) throw QiMalformed("constructor '" + s + "' must be interpreted as the sum of its arguments plus a constant");
    }
    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<unsigned> value(0, opts.max_value);
    bool all_coefficientwise = true;
    for (const auto& r : rules) {
      FTerm l = first_order(r.lhs), rr = first_order(r.rhs);
      Polynomial pl = interpret_poly(l, q, R), pr = interpret_poly(rr, q, R);
      Polynomial diff = pl;
      add_into(diff, pr, -1);
      QiRuleReport rep{trs::rule_str(r), poly_str(pl), poly_str(pr), true, std::nullopt};
      for (const auto& [m, c] : diff)
        if (c < 0) rep.coefficientwise = false;
      std::set<std::string> vs;
      collect_vars(l, vs);
      collect_vars(rr, vs);
      for (std::size_t k = 0; k < opts.samples && !rep.witness; ++k) {
        std::map<std::string, mpq_class> point;
        for (const auto& v : vs) point[v] = value(rng);
        if (poly_eval(diff, point) < 0) rep.witness = point;
      }
      if (rep.coefficientwise && rep.witness) throw std::logic_error("nonnegative polynomial refuted at a point");
      all_coefficientwise = all_coefficientwise && rep.coefficientwise;
      if (rep.witness && res.failed_rule.empty()) {
        res.failed_rule = rep.rule;
        res.witness = *rep.witness;
      }
      res.rules.push_back(std::move(rep));
    }
    if (!res.failed_rule.empty()) {
      res.status = QiStatus::CounterRule;
      std::string w;
      for (const auto& [x, v] : res.witness) w += (w.empty() ? "" : ", ") + x + " = " + v.get_str();
      res.message = "rule " + res.failed_rule + " increases at " + (w.empty() ? "the origin" : w);
    } else if (all_coefficientwise) {
      res.status = QiStatus::Verified;
      res.message = "every rule satisfies ||l|| >= ||r|| coefficient-wise";
    } else {
      res.status = QiStatus::NotRefuted;
      res.message = "some rule is not decreasing coefficient-wise, but no sampled point refutes it";
    }
  } catch (const QiMalformed& e) {
    res = QiResult{};
    res.status = QiStatus::Malformed;
    res.message = e.what();
  }
  return res;
}

// ================================================================ step counts

CompareReport compare_runtime(const TermPtr& source, const std::vector<TermPtr>& args, const Registry& reg,
                              std::size_t fuel) {
  CompareReport rep;
  TermPtr adm = to_admissible(source);
  rep.size = term_size(adm);
  Translator tr(reg);
  tr.translate_admissible(adm);
  std::vector<TermPtr> adm_args;
  for (const auto& a : args) {
    TermPtr aa = to_admissible(a);
    try {
      tr.interpret(aa);
    } catch (const TranslateError&) {
      tr.translate_admissible(aa);
    }
    adm_args.push_back(aa);
  }
  TermPtr applied = mk_apps(adm, adm_args);
  STermPtr M = tr.interpret(applied);
  trs::RewriteResult rr = trs::rewrite_star(tr.system(), M, fuel);
  rep.k_sttrs = rr.steps;
  rep.sttrs_status = rr.status;
  rep.sttrs_value = trs::print(rr.term);

  ReduceResult hy = reduce(reg, applied, fuel);
  rep.k_hyrql = hy.steps;
  rep.hyrql_status = hy.status;
  rep.hyrql_value = pretty(hy.term);
  ReduceResult src = reduce(reg, mk_apps(source, args), fuel);
  rep.k_source = src.steps;

  rep.bound_ok = rep.k_hyrql <= rep.k_sttrs * rep.size;
  if (rr.status != trs::RewriteStatus::Value) {
    rep.message = "rewriting did not reach a value: " + rr.diagnostic;
  } else if (hy.status != ReduceStatus::Value) {
    rep.message = "evaluation did not reach a value (" + status_name(hy.status) + ")";
  } else if (src.status != ReduceStatus::Value || !equiv(src.term, hy.term)) {
    rep.message = "the admissible form and the source disagree";
  } else {
    try {
      STermPtr expected = trs::normalize(tr.interpret(hy.term));
      rep.values_agree = trs::s_equal(expected, trs::normalize(rr.term));
      if (!rep.values_agree) rep.message = "values differ: " + trs::print(expected) + " vs " + rep.sttrs_value;
    } catch (const TranslateError& e) {
      rep.message = e.what();
    }
  }
  if (rep.message.empty() && !rep.bound_ok)
    rep.message = std::to_string(rep.k_hyrql) + " source steps exceed " + std::to_string(rep.k_sttrs) + " * " +
                  std::to_string(rep.size);
  return rep;
}

} // namespace hyrql::analysis
