#ifndef HYRQL_PARSER_HPP
#define HYRQL_PARSER_HPP

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyrql/ast.hpp"

namespace hyrql {

struct ParseError : std::runtime_error {
  ParseError(SourceLoc l, const std::string& msg)
      : std::runtime_error(std::to_string(l.line) + ":" + std::to_string(l.col) + ": " + msg), loc(l) {}
  SourceLoc loc;
};

struct TypeDecl {
  std::string name;
  std::vector<std::pair<std::string, std::vector<TypePtr>>> ctors;
};

struct Definition {
  std::string name;
  TypePtr type;  // declared type, may be null
  TermPtr term;  // closed after inlining of earlier definitions
  SourceLoc loc;
};

struct SourceFile {
  Registry registry;
  std::vector<TypeDecl> types;
  std::vector<Definition> defs;
  std::optional<Definition> main;

  const Definition* find(const std::string& name) const;
  // `main` if present, otherwise the last definition.
  const Definition* entry() const;
};

SourceFile parse(const std::string& text);

// Parses a single term; identifiers naming entries of `defs` are inlined.
TermPtr parse_term(const std::string& text, const Registry& reg,
                   const std::map<std::string, TermPtr>& defs = {});
TypePtr parse_type(const std::string& text, const Registry& reg);
Amplitude parse_amplitude(const std::string& text);

std::string pretty(const TermPtr& t);

// Stable textual key for a term up to alpha-equivalence.
std::string alpha_key(const TermPtr& t);

} // namespace hyrql

#endif
