#include "cseval/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace cseval::lexer {

namespace {

const std::array<const char*, 35> kKeywords = {
    "False",  "None",     "True",  "and",    "as",     "assert", "async",
    "await",  "break",    "class", "continue", "def",  "del",    "elif",
    "else",   "except",   "finally", "for",  "from",   "global", "if",
    "import", "in",       "is",    "lambda", "nonlocal", "not",  "or",
    "pass",   "raise",    "return", "try",   "while",  "with",   "yield"};

// Longest first within each leading character group.
const std::array<const char*, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "!=", ">=", "<=", "==", "->", ":=",
    "+=",  "-=",  "*=",  "/=",  "%=",  "&=", "|=", "^=", ">>", "<<", "**",
    "//",  "@=",  "(",   ")",   "[",   "]",  "{",  "}",  ",",  ":",  ".",
    ";",   "@",   "=",   "+",   "-",   "*",  "/",  "%",  "&",  "|",  "^",
    "~",   "<",   ">"};

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}
bool is_ident_cont(char c) {
  return is_ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

bool is_string_prefix(const std::string& word) {
  if (word.size() > 2) return false;
  std::string lower;
  for (char c : word) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  static const std::array<const char*, 9> prefixes = {"r",  "b",  "u",  "f", "rb",
                                                      "br", "fr", "rf", "bu"};
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](const char* p) { return lower == p; });
}

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  LexResult run() {
    indents_.push_back(0);
    at_line_start_ = true;
    while (pos_ < src_.size()) {
      if (at_line_start_ && paren_depth_ == 0) {
        if (!handle_line_start()) continue;
      }
      lex_one();
    }
    // close out a dangling logical line and open indents
    if (emitted_content_since_newline_) emit(TokenKind::newline, "");
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenKind::dedent, "");
    }
    emit(TokenKind::end, "");
    return std::move(result_);
  }

 private:
  // Returns false when the whole line was consumed (blank / comment line).
  bool handle_line_start() {
    size_t scan = pos_;
    int width = 0;
    while (scan < src_.size() && (src_[scan] == ' ' || src_[scan] == '\t')) {
      width += (src_[scan] == '\t') ? 8 - (width % 8) : 1;
      ++scan;
    }
    if (scan >= src_.size() || src_[scan] == '\n' || src_[scan] == '\r' ||
        src_[scan] == '#') {
      // blank or comment-only line: no layout tokens
      while (scan < src_.size() && src_[scan] != '\n') ++scan;
      if (scan < src_.size()) ++scan;  // the newline
      ++line_;
      pos_ = scan;
      col_ = 0;
      return false;
    }
    pos_ = scan;
    col_ = width;
    at_line_start_ = false;
    if (width > indents_.back()) {
      indents_.push_back(width);
      emit(TokenKind::indent, "");
    } else {
      while (indents_.size() > 1 && width < indents_.back()) {
        indents_.pop_back();
        emit(TokenKind::dedent, "");
      }
      if (width != indents_.back()) {
        result_.problems.push_back("line " + std::to_string(line_) +
                                   ": dedent does not match any outer level");
        // recover by opening a level at this width; the base stays level 0
        indents_.push_back(width);
      }
    }
    return true;
  }

  void lex_one() {
    char c = src_[pos_];
    if (c == '\n' || c == '\r') {
      consume_newline();
      return;
    }
    if (c == ' ' || c == '\t') {
      advance(1);
      return;
    }
    if (c == '#') {
      while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
      return;
    }
    if (c == '\\' && pos_ + 1 < src_.size() &&
        (src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r')) {
      advance(1);
      consume_raw_newline();
      return;
    }
    if (c == '\'' || c == '"') {
      lex_string(pos_);
      return;
    }
    if (is_ident_start(c)) {
      size_t start = pos_;
      while (pos_ < src_.size() && is_ident_cont(src_[pos_])) advance(1);
      std::string word = src_.substr(start, pos_ - start);
      if (pos_ < src_.size() && (src_[pos_] == '\'' || src_[pos_] == '"') &&
          is_string_prefix(word)) {
        pos_ = start;
        col_ -= static_cast<int>(word.size());
        lex_string(start);
        return;
      }
      emit(is_python_keyword(word) ? TokenKind::keyword : TokenKind::name, word);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      lex_number();
      return;
    }
    lex_operator();
  }

  void consume_newline() {
    consume_raw_newline();
    if (paren_depth_ > 0) return;  // implicit joining
    if (emitted_content_since_newline_) {
      Token t{TokenKind::newline, "", line_ - 1, col_};
      result_.tokens.push_back(t);
      emitted_content_since_newline_ = false;
    }
    at_line_start_ = true;
  }

  void consume_raw_newline() {
    if (pos_ < src_.size() && src_[pos_] == '\r') ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '\n') ++pos_;
    ++line_;
    col_ = 0;
  }

  void lex_string(size_t start) {
    // optional prefix letters
    while (pos_ < src_.size() && is_ident_start(src_[pos_])) advance(1);
    char quote = src_[pos_];
    bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
    advance(triple ? 3 : 1);
    bool closed = false;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\\' && pos_ + 1 < src_.size()) {
        if (src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r') {
          advance(1);
          consume_raw_newline();
        } else {
          advance(2);
        }
        continue;
      }
      if (!triple && (c == '\n' || c == '\r')) break;
      if (c == quote) {
        if (!triple) {
          advance(1);
          closed = true;
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
          advance(3);
          closed = true;
          break;
        }
        advance(1);
        continue;
      }
      if (c == '\n' || c == '\r') {
        consume_raw_newline();
        continue;
      }
      advance(1);
    }
    if (!closed)
      result_.problems.push_back("line " + std::to_string(line_) + ": unterminated string");
    emit_span(TokenKind::string, start);
  }

  void lex_number() {
    size_t start = pos_;
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
        (std::tolower(static_cast<unsigned char>(src_[pos_ + 1])) == 'x' ||
         std::tolower(static_cast<unsigned char>(src_[pos_ + 1])) == 'o' ||
         std::tolower(static_cast<unsigned char>(src_[pos_ + 1])) == 'b')) {
      advance(2);
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        advance(1);
      emit_span(TokenKind::number, start);
      return;
    }
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      advance(1);
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance(1);
      while (pos_ < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        advance(1);
    }
    if (pos_ < src_.size() &&
        std::tolower(static_cast<unsigned char>(src_[pos_])) == 'e') {
      size_t save = pos_;
      advance(1);
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance(1);
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          advance(1);
      } else {
        pos_ = save;  // not an exponent
      }
    }
    if (pos_ < src_.size() &&
        std::tolower(static_cast<unsigned char>(src_[pos_])) == 'j')
      advance(1);
    emit_span(TokenKind::number, start);
  }

  void lex_operator() {
    for (const char* op : kOperators) {
      size_t len = std::char_traits<char>::length(op);
      if (src_.compare(pos_, len, op) == 0) {
        track_parens(op[0]);
        size_t start = pos_;
        advance(len);
        emit_span(TokenKind::op, start);
        return;
      }
    }
    size_t start = pos_;
    advance(1);
    emit_span(TokenKind::unknown, start);
  }

  void track_parens(char c) {
    if (c == '(' || c == '[' || c == '{')
      ++paren_depth_;
    else if ((c == ')' || c == ']' || c == '}') && paren_depth_ > 0)
      --paren_depth_;
  }

  void advance(size_t n) {
    pos_ += n;
    col_ += static_cast<int>(n);
  }

  void emit(TokenKind kind, std::string text) {
    result_.tokens.push_back({kind, std::move(text), line_, col_});
    if (kind != TokenKind::newline && kind != TokenKind::indent && kind != TokenKind::dedent &&
        kind != TokenKind::end)
      emitted_content_since_newline_ = true;
  }

  void emit_span(TokenKind kind, size_t start) {
    result_.tokens.push_back(
        {kind, src_.substr(start, pos_ - start), line_, col_ - static_cast<int>(pos_ - start)});
    emitted_content_since_newline_ = true;
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 0;
  int paren_depth_ = 0;
  bool at_line_start_ = true;
  bool emitted_content_since_newline_ = false;
  std::vector<int> indents_;
  LexResult result_;
};

}  // namespace

LexResult lex_python(const std::string& source) {
  return Lexer(source).run();
}

bool is_python_keyword(const std::string& word) {
  return std::binary_search(kKeywords.begin(), kKeywords.end(), word,
                            [](const std::string& a, const std::string& b) { return a < b; });
}

const std::vector<std::string>& python_keywords() {
  static const std::vector<std::string> kws(kKeywords.begin(), kKeywords.end());
  return kws;
}

}  // namespace cseval::lexer
