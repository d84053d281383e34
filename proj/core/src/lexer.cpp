#include "lexer.hpp"

#include <cctype>

namespace hyrql::detail {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

// Longest-match punctuation, longest first.
const char* const kSymbols[] = {"<->", "::", "->", "=>", "-o", "(", ")", "{", "}", "[", "]", ",", ";", ":",
                                ".",   "\\", "*",  "+",  "-",  "/", "=", "|", "@", ">"};

} // namespace

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < text.size(); ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '-' && i + 1 < text.size() && text[i + 1] == '-') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.loc = {line, col};
    if (c == '|' && i + 2 < text.size() && text[i + 2] == '>' &&
        (text[i + 1] == '0' || text[i + 1] == '1' || text[i + 1] == '+' || text[i + 1] == '-')) {
      t.kind = Tok::Ket;
      t.text = text.substr(i, 3);
      advance(3);
      out.push_back(t);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '~' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      std::size_t j = i + (c == '~' ? 1 : 0);
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      bool bit = j < text.size() && text[j] == 'b' && (j + 1 >= text.size() || !ident_char(text[j + 1]));
      if (bit) ++j;
      if (j < text.size() && ident_char(text[j]))
        throw ParseError(t.loc, "malformed number '" + text.substr(i, j + 1 - i) + "'");
      t.text = text.substr(i, j - i);
      t.kind = (bit || c == '~') ? Tok::Ident : Tok::Int;
      advance(j - i);
      out.push_back(t);
      continue;
    }
    if (c == '\'' && i + 1 < text.size() && ident_start(text[i + 1])) {
      std::size_t j = i + 1;
      while (j < text.size() && ident_char(text[j])) ++j;
      t.kind = Tok::Ident;
      t.text = text.substr(i, j - i);
      advance(j - i);
      out.push_back(t);
      continue;
    }
    if (ident_start(c) || (c == '~' && i + 1 < text.size() && (ident_start(text[i + 1]) || text[i + 1] == '~'))) {
      std::size_t j = i;
      while (j < text.size() && text[j] == '~') ++j;
      if (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        if (j < text.size() && text[j] == 'b') ++j;
      } else {
        while (j < text.size() && ident_char(text[j])) ++j;
      }
      t.kind = Tok::Ident;
      t.text = text.substr(i, j - i);
      advance(j - i);
      out.push_back(t);
      continue;
    }
    bool matched = false;
    for (const char* s : kSymbols) {
      std::string sym = s;
      if (text.compare(i, sym.size(), sym) != 0) continue;
      if (sym == "-o" && i + 2 < text.size() && ident_char(text[i + 2])) continue;
      t.kind = Tok::Sym;
      t.text = sym;
      advance(sym.size());
      out.push_back(t);
      matched = true;
      break;
    }
    if (!matched) throw ParseError(t.loc, std::string("unexpected character '") + c + "'");
  }
  Token end;
  end.kind = Tok::End;
  end.loc = {line, col};
  out.push_back(end);
  return out;
}

void TokenStream::expect_sym(const char* s) {
  if (!accept_sym(s)) fail(std::string("expected '") + s + "'");
}

std::string TokenStream::expect_ident() {
  if (peek().kind != Tok::Ident) fail("expected identifier");
  return next().text;
}

void TokenStream::fail(const std::string& msg) const {
  const Token& t = peek();
  std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
  throw ParseError(t.loc, msg + ", found " + found);
}

} // namespace hyrql::detail
