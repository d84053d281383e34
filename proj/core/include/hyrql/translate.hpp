#ifndef HYRQL_TRANSLATE_HPP
#define HYRQL_TRANSLATE_HPP

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyrql/ast.hpp"
#include "hyrql/sttrs.hpp"

namespace hyrql {

struct TranslateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rewrites t so that pattern matching only inspects variables and every
// abstraction reachable from a value position is closed.
TermPtr to_admissible(const TermPtr& t);
bool is_admissible(const TermPtr& t, std::string* why = nullptr);

struct SymbolEntry {
  TermPtr term;
  std::string symbol;
};

class SymbolTable {
public:
  std::optional<std::string> find(const TermPtr& t) const;
  void add(const TermPtr& t, const std::string& symbol);
  void rekey(const TermPtr& from, const TermPtr& to);
  const std::vector<SymbolEntry>& entries() const { return entries_; }

private:
  std::vector<SymbolEntry> entries_;
  std::map<std::string, std::size_t> by_key_;
};

// A pending rule: lhs arguments (none yet for the bottom lhs), rhs, and the
// pattern substitution of the branch it belongs to.
struct PartialRule {
  std::optional<std::vector<trs::STermPtr>> lhs;
  trs::STermPtr rhs;
  std::map<std::string, trs::STermPtr> sigma;
};

// Holds the finished rules and the symbol table; several closed terms may be
// translated into the same system.
class Translator {
public:
  explicit Translator(const Registry& reg);

  std::vector<PartialRule> translate(const TermPtr& s);
  // Returns the interpretation of s; mints `main` for a trailing application.
  trs::STermPtr translate_admissible(const TermPtr& s);
  trs::STermPtr interpret(const TermPtr& t) const;

  const trs::Sttrs& system() const { return R_; }
  const SymbolTable& symbols() const { return S_; }

private:
  std::string mint(const std::string& hint);
  void add_rule(trs::Rule r);
  void install_library();

  trs::Sttrs R_;
  SymbolTable S_;
  std::set<std::string> taken_;  // minted symbols and rule variables
  std::set<std::string> vars_;
  bool library_ = false;
};

struct Translation {
  TermPtr admissible;
  trs::Sttrs system;
  SymbolTable symbols;
  trs::STermPtr root;
};

Translation translate_entry(const TermPtr& t, const Registry& reg);

} // namespace hyrql

#endif
