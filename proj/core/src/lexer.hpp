#ifndef HYRQL_LEXER_HPP
#define HYRQL_LEXER_HPP

#include <string>
#include <vector>

#include "hyrql/ast.hpp"
#include "hyrql/parser.hpp"

namespace hyrql::detail {

enum class Tok { Ident, Int, Ket, Sym, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourceLoc loc;
};

// Splits source text into tokens. `--` starts a comment running to end of line.
// Identifiers may contain primes and may start with `~` (shadow constructors);
// `0b`/`1b` and type variables such as `'a` lex as identifiers.
std::vector<Token> tokenize(const std::string& text);

class TokenStream {
public:
  explicit TokenStream(std::vector<Token> toks) : toks_(std::move(toks)) {}

  const Token& peek(std::size_t k = 0) const {
    std::size_t i = pos_ + k;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Tok::End; }
  bool is_sym(const char* s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Sym && peek(k).text == s;
  }
  bool is_ident(const char* s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Ident && peek(k).text == s;
  }
  bool accept_sym(const char* s) {
    if (!is_sym(s)) return false;
    next();
    return true;
  }
  void expect_sym(const char* s);
  std::string expect_ident();

  std::size_t mark() const { return pos_; }
  void reset(std::size_t m) { pos_ = m; }

  [[noreturn]] void fail(const std::string& msg) const;

private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

} // namespace hyrql::detail

#endif
