#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hyrql/analysis.hpp"
#include "hyrql/canonical.hpp"
#include "hyrql/eval.hpp"
#include "hyrql/parser.hpp"
#include "hyrql/sttrs.hpp"
#include "hyrql/translate.hpp"
#include "hyrql/typecheck.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace hyrql;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::size_t fuel = 10000;
  std::size_t budget = 1000;
  bool json = false;
  bool trace = false;
  std::string file;
  std::string entry;
  std::string out;
  std::string symbols;
  std::string method;
  std::string prec;
  std::string interp;
  std::vector<std::string> args;
  std::string dir;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

const Definition& pick(const SourceFile& src, const std::string& entry) {
  const Definition* d = entry.empty() ? src.entry() : src.find(entry);
  if (!d) throw UsageError(entry.empty() ? "file has no definitions" : "no definition named '" + entry + "'");
  return *d;
}

std::map<std::string, TermPtr> def_map(const SourceFile& src) {
  std::map<std::string, TermPtr> m;
  for (const auto& d : src.defs) m[d.name] = d.term;
  return m;
}

// Splits "v1 v2 ..." at top-level whitespace.
std::vector<std::string> split_args(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& s : raw) {
    int depth = 0;
    std::string cur;
    for (char c : s) {
      if (c == '(' || c == '[' || c == '{') ++depth;
      if (c == ')' || c == ']' || c == '}') --depth;
      if (depth == 0 && std::isspace(static_cast<unsigned char>(c))) {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

json derivation_json(const Derivation& d) {
  json j = {{"rule", d.rule}, {"term", d.term}, {"type", d.type}};
  if (!d.children.empty()) {
    j["children"] = json::array();
    for (const auto& c : d.children) j["children"].push_back(derivation_json(c));
  }
  return j;
}

void print_derivation(std::ostream& os, const Derivation& d, int depth) {
  os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << "(" << d.rule << ") " << d.term << " : " << d.type
     << "\n";
  for (const auto& c : d.children) print_derivation(os, c, depth + 1);
}

CheckResult typecheck(const SourceFile& src, const Definition& d, std::size_t budget) {
  Budget b;
  b.fuel = budget;
  TypeChecker tc(src.registry, b);
  return d.type ? tc.check(d.term, d.type) : tc.synthesize(d.term);
}

json check_json(const std::string& name, const CheckResult& r, bool trace) {
  json j = {{"definition", name}, {"status", check_status_name(r.status)}};
  if (r.type) j["type"] = type_str(r.type);
  if (!r.ok()) {
    j["rule"] = r.rule;
    j["message"] = r.message;
    j["line"] = r.loc.line;
    j["column"] = r.loc.col;
  }
  j["queries"] = json::array();
  for (const auto& q : r.queries)
    j["queries"].push_back({{"predicate", q.predicate},
                            {"lhs", q.lhs},
                            {"rhs", q.rhs},
                            {"verdict", verdict_name(q.verdict)},
                            {"assumed", q.assumed},
                            {"detail", q.detail}});
  if (trace && r.ok()) j["derivation"] = derivation_json(r.derivation);
  return j;
}

// ---------------------------------------------------------------- subcommands

int cmd_parse(const Options& o) {
  SourceFile src = parse(read_file(o.file));
  if (o.json) {
    json j = {{"types", json::array()}, {"definitions", json::array()}};
    for (const auto& t : src.types) {
      json ctors = json::array();
      for (const auto& [c, args] : t.ctors) {
        json a = json::array();
        for (const auto& x : args) a.push_back(type_str(x));
        ctors.push_back({{"name", c}, {"args", a}});
      }
      j["types"].push_back({{"name", t.name}, {"constructors", ctors}});
    }
    for (const auto& d : src.defs)
      j["definitions"].push_back({{"name", d.name}, {"type", d.type ? type_str(d.type) : ""}, {"term", pretty(d.term)}});
    if (src.main) j["main"] = pretty(src.main->term);
    std::cout << j.dump(2) << "\n";
    return kOk;
  }
  for (const auto& t : src.types) {
    std::cout << "type " << t.name << " =";
    for (std::size_t i = 0; i < t.ctors.size(); ++i) {
      std::cout << (i ? " | " : " ") << t.ctors[i].first;
      if (!t.ctors[i].second.empty()) {
        std::cout << "(";
        for (std::size_t k = 0; k < t.ctors[i].second.size(); ++k)
          std::cout << (k ? ", " : "") << type_str(t.ctors[i].second[k]);
        std::cout << ")";
      }
    }
    std::cout << ";\n";
  }
  for (const auto& d : src.defs)
    std::cout << "def " << d.name << (d.type ? " : " + type_str(d.type) : "") << " = " << pretty(d.term) << ";\n";
  if (src.main) std::cout << "main = " << pretty(src.main->term) << ";\n";
  return kOk;
}

int cmd_check(const Options& o) {
  SourceFile src = parse(read_file(o.file));
  const Definition& d = pick(src, o.entry);
  CheckResult r = typecheck(src, d, o.budget);
  if (o.json) {
    std::cout << check_json(d.name, r, o.trace).dump(2) << "\n";
    return r.ok() ? kOk : kFailure;
  }
  if (r.ok()) {
    std::cout << d.name << " : " << type_str(r.type) << "\n";
  } else {
    std::cout << d.name << ": " << check_status_name(r.status) << " at rule (" << r.rule << ") " << r.loc.line << ":"
              << r.loc.col << ": " << r.message << "\n";
  }
  for (const auto& q : r.queries)
    std::cout << "  " << q.predicate << "(" << q.lhs << (q.rhs.empty() ? "" : ", " + q.rhs)
              << ") = " << verdict_name(q.verdict) << (q.assumed ? " (assumed)" : "")
              << (q.detail.empty() ? "" : ": " + q.detail) << "\n";
  if (o.trace && r.ok()) print_derivation(std::cout, r.derivation, 0);
  return r.ok() ? kOk : kFailure;
}

int cmd_run(const Options& o) {
  SourceFile src = parse(read_file(o.file));
  const Definition& d = pick(src, o.entry);
  ReduceOptions opts;
  opts.fuel = o.fuel;
  opts.trace = o.trace;
  ReduceResult r = reduce(src.registry, d.term, opts);
  if (o.json) {
    json j = {{"definition", d.name}, {"status", status_name(r.status)}, {"steps", r.steps}, {"value", pretty(r.term)}};
    if (o.trace) {
      j["trace"] = json::array();
      for (const auto& e : r.trace) j["trace"].push_back({{"step", e.step}, {"rule", rule_name(e.rule)}, {"term", e.term}});
    }
    std::cout << j.dump(2) << "\n";
  } else {
    for (const auto& e : r.trace) std::cout << e.step << " (" << rule_name(e.rule) << ") " << e.term << "\n";
    std::cout << pretty(r.term) << "\n"
              << status_name(r.status) << " after " << r.steps << " step" << (r.steps == 1 ? "" : "s") << "\n";
    if (r.status == ReduceStatus::FuelExhausted) std::cout << "fuel limit " << o.fuel << " reached\n";
  }
  return r.status == ReduceStatus::Value ? kOk : kFailure;
}

int cmd_translate(const Options& o) {
  SourceFile src = parse(read_file(o.file));
  const Definition& d = pick(src, o.entry);
  Translation t = translate_entry(d.term, src.registry);
  trs::WellFormedResult wf = trs::well_formed(t.system);
  std::string text = trs::to_trs(t.system);
  json syms = json::array();
  for (const auto& e : t.symbols.entries()) syms.push_back({{"symbol", e.symbol}, {"term", pretty(e.term)}});
  if (!o.symbols.empty()) write_file(o.symbols, syms.dump(2) + "\n");
  if (!o.out.empty()) write_file(o.out, text);
  if (o.json) {
    json j = {{"definition", d.name},
              {"well_formed", wf.ok},
              {"rules", t.system.program_rules().size()},
              {"root", trs::print(t.root)},
              {"symbols", syms}};
    if (!wf.ok) j["violation"] = wf.violation;
    if (o.out.empty()) j["trs"] = text;
    std::cout << j.dump(2) << "\n";
  } else {
    if (o.out.empty()) std::cout << text;
    else std::cout << "wrote " << t.system.program_rules().size() << " rules to " << o.out << "\n";
    if (!wf.ok) std::cerr << "not well formed: " << wf.violation << "\n";
  }
  return wf.ok ? kOk : kFailure;
}

trs::Sttrs load_system(const Options& o) {
  std::string text = read_file(o.file);
  if (fs::path(o.file).extension() == ".trs") return trs::parse_trs(text);
  SourceFile src = parse(text);
  return translate_entry(pick(src, o.entry).term, src.registry).system;
}

int cmd_analyze(const Options& o) {
  trs::Sttrs R = load_system(o);
  trs::WellFormedResult wf = trs::well_formed(R);
  if (!wf.ok) {
    if (o.json) std::cout << json{{"well_formed", false}, {"violation", wf.violation}}.dump(2) << "\n";
    else std::cout << "not well formed: " << wf.violation << "\n";
    return kFailure;
  }
  if (o.method == "lpo") {
    std::optional<analysis::Precedence> prec;
    if (!o.prec.empty()) {
      try {
        prec = analysis::Precedence::parse(o.prec);
      } catch (const analysis::AnalysisError& e) {
        throw UsageError(e.what());
      }
    }
    analysis::LpoResult r = analysis::lpo_terminates(R, prec);
    bool replayed = analysis::lpo_replay(R, r);
    if (o.json) {
      json j = {{"method", "lpo"}, {"result", r.proved ? "proof" : "fail"}, {"precedence", r.precedence.str()}};
      j["justifications"] = r.justifications;
      if (r.proved) j["replayed"] = replayed;
      else j["failed_rule"] = r.failed_rule, j["message"] = r.message;
      std::cout << j.dump(2) << "\n";
    } else if (r.proved) {
      std::string p = r.precedence.str();
      std::cout << "Proof: terminating by LPO with precedence "
                << (p.empty() ? "(defined symbols above constructors)" : p) << "\n";
      for (const auto& s : r.justifications) std::cout << "  " << s << "\n";
    } else {
      std::cout << "Fail: " << r.message << "\n";
    }
    return r.proved && replayed ? kOk : kFailure;
  }
  if (o.method == "qi") {
    if (o.interp.empty()) throw UsageError("--method qi needs --interp FILE");
    analysis::QiResult r;
    try {
      r = analysis::qi_verify(R, analysis::parse_interp(read_file(o.interp)));
    } catch (const analysis::QiMalformed& e) {
      r.status = analysis::QiStatus::Malformed;
      r.message = e.what();
    }
    if (o.json) {
      json j = {{"method", "qi"}, {"result", analysis::qi_status_name(r.status)}, {"message", r.message}};
      j["rules"] = json::array();
      for (const auto& rr : r.rules)
        j["rules"].push_back({{"rule", rr.rule}, {"lhs", rr.lhs}, {"rhs", rr.rhs}, {"coefficientwise", rr.coefficientwise}});
      if (!r.failed_rule.empty()) {
        j["failed_rule"] = r.failed_rule;
        json w = json::object();
        for (const auto& [x, v] : r.witness) w[x] = v.get_str();
        j["witness"] = w;
      }
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << analysis::qi_status_name(r.status) << ": " << r.message << "\n";
      for (const auto& rr : r.rules) std::cout << "  " << rr.rule << "    " << rr.lhs << " >= " << rr.rhs << "\n";
    }
    return r.status == analysis::QiStatus::Verified ? kOk : kFailure;
  }
  throw UsageError("--method must be lpo or qi");
}

json report_json(const analysis::CompareReport& r) {
  return {{"k_sttrs", r.k_sttrs},
          {"k_hyrql", r.k_hyrql},
          {"k_source", r.k_source},
          {"size", r.size},
          {"sttrs_status", trs::rewrite_status_name(r.sttrs_status)},
          {"hyrql_status", status_name(r.hyrql_status)},
          {"values_agree", r.values_agree},
          {"bound_ok", r.bound_ok},
          {"sttrs_value", r.sttrs_value},
          {"hyrql_value", r.hyrql_value},
          {"message", r.message}};
}

int cmd_compare(const Options& o) {
  SourceFile src = parse(read_file(o.file));
  std::vector<std::string> raw = split_args(o.args);
  const Definition* d;
  if (!o.entry.empty()) d = &pick(src, o.entry);
  else if (!raw.empty() && !src.defs.empty()) d = &src.defs.back();
  else d = &pick(src, "");
  std::vector<TermPtr> args;
  auto defs = def_map(src);
  for (const auto& a : raw) args.push_back(parse_term(a, src.registry, defs));
  analysis::CompareReport r = analysis::compare_runtime(d->term, args, src.registry, o.fuel);
  if (o.json) {
    json j = report_json(r);
    j["definition"] = d->name;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << d->name << ": k_sttrs = " << r.k_sttrs << ", k_hyrql = " << r.k_hyrql << ", |s| = " << r.size
              << ", bound " << (r.bound_ok ? "holds" : "violated") << ", values "
              << (r.values_agree ? "agree" : "differ") << "\n"
              << "  hyrql: " << r.hyrql_value << "\n  sttrs: " << r.sttrs_value << "\n";
    if (!r.message.empty()) std::cout << "  " << r.message << "\n";
  }
  return r.ok() ? kOk : kFailure;
}

// Each corpus file may carry `-- expect: ill-typed` for programs that must be rejected.
int cmd_corpus(const Options& o) {
  fs::path dir = o.dir.empty() ? fs::path(HYRQL_CORPUS_DIR) : fs::path(o.dir);
  if (!fs::is_directory(dir)) throw UsageError("no corpus directory at " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".hyrql") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  json rows = json::array();
  bool all = true;
  for (const auto& f : files) {
    json row = {{"file", f.filename().string()}};
    bool pass = true;
    try {
      std::string text = read_file(f.string());
      bool expect_reject = text.find("-- expect: ill-typed") != std::string::npos;
      SourceFile src = parse(text);
      const Definition& entry = pick(src, "");
      CheckResult cr = typecheck(src, entry, o.budget);
      row["typing"] = check_status_name(cr.status);
      if (expect_reject) {
        pass = !cr.ok();
        row["typing"] = std::string(cr.ok() ? "accepted" : "rejected") + " (expected rejection)";
        row["run"] = row["translate"] = row["compare"] = "-";
      } else {
        pass = cr.ok();
        ReduceResult rr = reduce(src.registry, entry.term, o.fuel);
        row["run"] = status_name(rr.status) + " in " + std::to_string(rr.steps);
        row["value"] = pretty(rr.term);
        pass = pass && rr.status == ReduceStatus::Value;
        Translation t = translate_entry(entry.term, src.registry);
        trs::WellFormedResult wf = trs::well_formed(t.system);
        row["translate"] = std::to_string(t.system.program_rules().size()) + " rules" + (wf.ok ? "" : ", ill-formed");
        pass = pass && wf.ok;
        analysis::CompareReport cmp = analysis::compare_runtime(entry.term, {}, src.registry, o.fuel);
        row["compare"] = std::to_string(cmp.k_hyrql) + " <= " + std::to_string(cmp.k_sttrs) + "*" +
                         std::to_string(cmp.size) + (cmp.ok() ? "" : " FAIL");
        pass = pass && cmp.ok();
      }
    } catch (const std::exception& e) {
      row["error"] = e.what();
      pass = false;
    }
    row["pass"] = pass;
    all = all && pass;
    rows.push_back(row);
  }
  if (o.json) {
    std::cout << json{{"programs", rows}, {"pass", all}}.dump(2) << "\n";
  } else {
    auto cell = [](const json& row, const char* k) { return row.contains(k) ? row[k].get<std::string>() : ""; };
    std::printf("%-18s %-32s %-18s %-14s %-20s %s\n", "program", "typing", "run", "translate", "compare", "result");
    for (const auto& row : rows) {
      std::printf("%-18s %-32s %-18s %-14s %-20s %s\n", cell(row, "file").c_str(), cell(row, "typing").c_str(),
                  cell(row, "run").c_str(), cell(row, "translate").c_str(), cell(row, "compare").c_str(),
                  row["pass"].get<bool>() ? "pass" : "FAIL");
      if (row.contains("error")) std::printf("  error: %s\n", cell(row, "error").c_str());
    }
  }
  return all ? kOk : kFailure;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyrql: hybrid quantum programs, their typing, evaluation and compilation to rewrite systems"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--fuel", o.fuel, "Evaluation or rewriting steps before giving up")->capture_default_str();
  app.add_option("--budget", o.budget, "Evaluation steps per orthogonality/unitarity query")->capture_default_str();
  app.add_flag("--json", o.json, "Machine-readable output");
  app.add_flag("--trace", o.trace, "Show reduction traces or typing derivations");

  auto file_opt = [&](CLI::App* sub) { sub->add_option("file", o.file, "Input file")->required(); };
  auto entry_opt = [&](CLI::App* sub) {
    sub->add_option("--entry", o.entry, "Definition to use (default: main, else the last definition)");
  };

  auto* parse_cmd = app.add_subcommand("parse", "Parse and pretty-print a program");
  file_opt(parse_cmd);
  auto* check_cmd = app.add_subcommand("check", "Type-check a definition");
  file_opt(check_cmd);
  entry_opt(check_cmd);
  auto* run_cmd = app.add_subcommand("run", "Evaluate a definition");
  file_opt(run_cmd);
  entry_opt(run_cmd);
  auto* tr_cmd = app.add_subcommand("translate", "Compile a definition to a rewrite system");
  file_opt(tr_cmd);
  entry_opt(tr_cmd);
  tr_cmd->add_option("-o,--output", o.out, "Write the .trs file here");
  tr_cmd->add_option("--symbols", o.symbols, "Write the term/symbol table as JSON here");
  auto* an_cmd = app.add_subcommand("analyze", "Termination or complexity analysis of a .trs or .hyrql file");
  file_opt(an_cmd);
  entry_opt(an_cmd);
  an_cmd->add_option("--method", o.method, "lpo or qi")->required()->check(CLI::IsMember({"lpo", "qi"}));
  an_cmd->add_option("--prec", o.prec, "Precedence such as f>g>h (lpo)");
  an_cmd->add_option("--interp", o.interp, "INTERP.json assignment (qi)");
  auto* cmp_cmd = app.add_subcommand("compare", "Compare source and rewrite step counts");
  file_opt(cmp_cmd);
  entry_opt(cmp_cmd);
  cmp_cmd->add_option("--args", o.args, "Argument values, separated by spaces");
  auto* corpus_cmd = app.add_subcommand("corpus", "Run the bundled programs end to end");
  corpus_cmd->add_option("dir", o.dir, "Corpus directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*parse_cmd) return cmd_parse(o);
    if (*check_cmd) return cmd_check(o);
    if (*run_cmd) return cmd_run(o);
    if (*tr_cmd) return cmd_translate(o);
    if (*an_cmd) return cmd_analyze(o);
    if (*cmp_cmd) return cmd_compare(o);
    if (*corpus_cmd) return cmd_corpus(o);
  } catch (const UsageError& e) {
    std::cerr << "hyrql: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "hyrql: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
