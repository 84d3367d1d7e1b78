#pragma once

#include <string>
#include <vector>

namespace cseval::lexer {

enum class TokenKind {
  name,
  keyword,
  number,
  string,
  op,
  newline,  // logical line end
  indent,
  dedent,
  end,
  unknown,  // byte the grammar has no token for; kept as a one-char token
};

struct Token {
  TokenKind kind;
  std::string text;
  int line = 0;
  int col = 0;
};

struct LexResult {
  std::vector<Token> tokens;          // includes layout tokens and trailing `end`
  std::vector<std::string> problems;  // unterminated strings, bad dedents, ...
  bool clean() const { return problems.empty(); }
};

// Total: any byte sequence lexes. Comments are dropped; string literals
// (including prefixed and triple-quoted forms) are single tokens; implicit
// line joining inside brackets and backslash continuations are handled.
LexResult lex_python(const std::string& source);

bool is_python_keyword(const std::string& word);
const std::vector<std::string>& python_keywords();

}  // namespace cseval::lexer
