#include "cseval/pyast.hpp"

#include <sstream>

#include "cseval/lexer.hpp"

namespace cseval::pyast {

namespace {

using lexer::Token;
using lexer::TokenKind;

Node make(std::string label) {
  Node n;
  n.label = std::move(label);
  return n;
}

Node make_id(std::string name) {
  Node n;
  n.label = "id";
  n.identifier = true;
  n.text = std::move(name);
  return n;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Node parse_module() {
    Node mod = make("module");
    skip_newlines();
    while (!at(TokenKind::end)) {
      mod.children.push_back(parse_statement());
      skip_newlines();
    }
    return mod;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    throw ParseError("line " + std::to_string(t.line) + ": " + msg +
                     (t.text.empty() ? "" : " near '" + t.text + "'"));
  }

  const Token& peek(size_t ahead = 0) const {
    size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(TokenKind k) const { return peek().kind == k; }
  bool at_op(const char* text) const {
    return peek().kind == TokenKind::op && peek().text == text;
  }
  bool at_kw(const char* text) const {
    return peek().kind == TokenKind::keyword && peek().text == text;
  }
  const Token& advance() {
    if (pos_ < toks_.size()) return toks_[pos_++];
    return toks_.back();
  }
  bool eat_op(const char* text) {
    if (!at_op(text)) return false;
    ++pos_;
    return true;
  }
  bool eat_kw(const char* text) {
    if (!at_kw(text)) return false;
    ++pos_;
    return true;
  }
  void expect_op(const char* text) {
    if (!eat_op(text)) fail(std::string("expected '") + text + "'");
  }
  void expect_kw(const char* text) {
    if (!eat_kw(text)) fail(std::string("expected '") + text + "'");
  }
  std::string expect_name() {
    if (!at(TokenKind::name)) fail("expected a name");
    return advance().text;
  }
  void expect_newline() {
    if (at(TokenKind::end)) return;
    if (!at(TokenKind::newline)) fail("expected end of line");
    ++pos_;
  }
  void skip_newlines() {
    while (at(TokenKind::newline)) ++pos_;
  }

  // ---- statements ----

  Node parse_statement() {
    if (at_kw("if")) return parse_if();
    if (at_kw("while")) return parse_while();
    if (at_kw("for")) return parse_for();
    if (at_kw("def")) return parse_def();
    if (at_kw("class")) return parse_class();
    if (at_kw("try")) return parse_try();
    if (at_kw("with")) return parse_with();
    return parse_simple_line();
  }

  Node parse_simple_line() {
    Node first = parse_small_statement();
    if (!at_op(";")) {
      expect_newline();
      return first;
    }
    Node group = make("stmts");
    group.children.push_back(std::move(first));
    while (eat_op(";")) {
      if (at(TokenKind::newline) || at(TokenKind::end)) break;
      group.children.push_back(parse_small_statement());
    }
    expect_newline();
    return group;
  }

  Node parse_small_statement() {
    if (eat_kw("pass")) return make("pass");
    if (eat_kw("break")) return make("break");
    if (eat_kw("continue")) return make("continue");
    if (eat_kw("return")) {
      Node n = make("return");
      if (!at(TokenKind::newline) && !at(TokenKind::end) && !at_op(";"))
        n.children.push_back(parse_expr_list());
      return n;
    }
    if (eat_kw("raise")) {
      Node n = make("raise");
      if (!at(TokenKind::newline) && !at(TokenKind::end) && !at_op(";")) {
        n.children.push_back(parse_expression());
        if (eat_kw("from")) n.children.push_back(parse_expression());
      }
      return n;
    }
    if (eat_kw("del")) {
      Node n = make("del");
      n.children.push_back(parse_expr_list());
      return n;
    }
    if (eat_kw("assert")) {
      Node n = make("assert");
      n.children.push_back(parse_expression());
      if (eat_op(",")) n.children.push_back(parse_expression());
      return n;
    }
    if (at_kw("global") || at_kw("nonlocal")) {
      Node n = make(advance().text);
      n.children.push_back(make_id(expect_name()));
      while (eat_op(",")) n.children.push_back(make_id(expect_name()));
      return n;
    }
    if (at_kw("import") || at_kw("from")) return parse_import();
    return parse_expr_statement();
  }

  Node parse_import() {
    Node n = make("import");
    if (eat_kw("from")) {
      std::string module;
      while (eat_op(".")) module += ".";
      module += expect_name();
      while (eat_op(".")) module += "." + expect_name();
      Node m = make("module:" + module);
      n.children.push_back(std::move(m));
      expect_kw("import");
      if (eat_op("*")) {
        n.children.push_back(make("star_import"));
        return n;
      }
      do {
        std::string name = expect_name();
        if (eat_kw("as")) name = expect_name();
        n.children.push_back(make_id(name));
      } while (eat_op(","));
      return n;
    }
    expect_kw("import");
    do {
      std::string path = expect_name();
      while (eat_op(".")) path += "." + expect_name();
      std::string bound = path.substr(0, path.find('.'));
      if (eat_kw("as")) bound = expect_name();
      Node m = make("module:" + path);
      n.children.push_back(std::move(m));
      n.children.push_back(make_id(bound));
    } while (eat_op(","));
    return n;
  }

  Node parse_expr_statement() {
    Node first = parse_expr_list();
    if (at(TokenKind::op) && peek().text.size() >= 2 &&
        peek().text.back() == '=' && peek().text != "==" && peek().text != "!=" &&
        peek().text != ">=" && peek().text != "<=" && peek().text != ":=") {
      std::string op = advance().text;
      Node n = make("augassign:" + op);
      n.children.push_back(std::move(first));
      n.children.push_back(parse_expr_list());
      return n;
    }
    if (at_op("=")) {
      Node n = make("assign");
      n.children.push_back(std::move(first));
      while (eat_op("=")) n.children.push_back(parse_expr_list());
      return n;
    }
    Node n = make("exprstmt");
    n.children.push_back(std::move(first));
    return n;
  }

  // expr (',' expr)* — a bare tuple when more than one element
  Node parse_expr_list() {
    Node first = parse_expression();
    if (!at_op(",")) return first;
    Node tup = make("tuple");
    tup.children.push_back(std::move(first));
    while (eat_op(",")) {
      if (at(TokenKind::newline) || at(TokenKind::end) || at_op("=") || at_op(")") ||
          at_op("]") || at_op("}") || at_op(":"))
        break;  // trailing comma
      tup.children.push_back(parse_expression());
    }
    return tup;
  }

  Node parse_block() {
    expect_op(":");
    if (!at(TokenKind::newline)) {
      // inline suite: if x: y = 1; z = 2
      Node blk = make("block");
      blk.children.push_back(parse_small_statement());
      while (eat_op(";")) {
        if (at(TokenKind::newline) || at(TokenKind::end)) break;
        blk.children.push_back(parse_small_statement());
      }
      expect_newline();
      return blk;
    }
    ++pos_;  // newline
    if (!at(TokenKind::indent)) fail("expected an indented block");
    ++pos_;
    Node blk = make("block");
    skip_newlines();
    while (!at(TokenKind::dedent) && !at(TokenKind::end)) {
      blk.children.push_back(parse_statement());
      skip_newlines();
    }
    if (at(TokenKind::dedent)) ++pos_;
    if (blk.children.empty()) fail("empty block");
    return blk;
  }

  Node parse_if() {
    expect_kw("if");
    Node n = make("if");
    n.children.push_back(parse_expression());
    n.children.push_back(parse_block());
    skip_newlines_at_toplevel_of_suite();
    if (at_kw("elif")) {
      toks_[pos_].text = "if";  // rewrite: elif chain nests as if in else
      Node else_blk = make("block");
      else_blk.children.push_back(parse_if());
      n.children.push_back(std::move(else_blk));
    } else if (eat_kw("else")) {
      n.children.push_back(parse_block());
    }
    return n;
  }

  // between a suite's dedent and a following elif/else/except there can be
  // blank lines only when at module level; layout tokens are already gone
  void skip_newlines_at_toplevel_of_suite() {}

  Node parse_while() {
    expect_kw("while");
    Node n = make("while");
    n.children.push_back(parse_expression());
    n.children.push_back(parse_block());
    if (eat_kw("else")) n.children.push_back(parse_block());
    return n;
  }

  Node parse_for() {
    expect_kw("for");
    Node n = make("for");
    n.children.push_back(parse_target_list());
    expect_kw("in");
    n.children.push_back(parse_expr_list());
    n.children.push_back(parse_block());
    if (eat_kw("else")) n.children.push_back(parse_block());
    return n;
  }

  Node parse_target_list() {
    Node first = parse_target_atom();
    if (!at_op(",")) return first;
    Node tup = make("tuple");
    tup.children.push_back(std::move(first));
    while (eat_op(",")) {
      if (at_kw("in") || at_op("=") || at(TokenKind::newline)) break;
      tup.children.push_back(parse_target_atom());
    }
    return tup;
  }

  Node parse_target_atom() {
    if (eat_op("(")) {
      Node t = parse_target_list();
      expect_op(")");
      return t;
    }
    if (eat_op("*")) {
      Node n = make("star");
      n.children.push_back(parse_target_atom());
      return n;
    }
    Node base = make_id(expect_name());
    return parse_trailers(std::move(base));
  }

  Node parse_def() {
    expect_kw("def");
    Node n = make("def");
    n.children.push_back(make_id(expect_name()));
    expect_op("(");
    Node params = make("params");
    while (!at_op(")")) {
      Node p = make("param");
      if (eat_op("*")) p.label = "param_star";
      else if (eat_op("**")) p.label = "param_dstar";
      p.children.push_back(make_id(expect_name()));
      if (eat_op(":")) parse_expression();  // annotation, dropped
      if (eat_op("=")) {
        Node d = make("default");
        d.children.push_back(parse_expression());
        p.children.push_back(std::move(d));
      }
      params.children.push_back(std::move(p));
      if (!eat_op(",")) break;
    }
    expect_op(")");
    if (eat_op("->")) parse_expression();  // return annotation, dropped
    n.children.push_back(std::move(params));
    n.children.push_back(parse_block());
    return n;
  }

  Node parse_class() {
    expect_kw("class");
    Node n = make("class");
    n.children.push_back(make_id(expect_name()));
    if (eat_op("(")) {
      Node bases = make("bases");
      while (!at_op(")")) {
        bases.children.push_back(parse_expression());
        if (!eat_op(",")) break;
      }
      expect_op(")");
      n.children.push_back(std::move(bases));
    }
    n.children.push_back(parse_block());
    return n;
  }

  Node parse_try() {
    expect_kw("try");
    Node n = make("try");
    n.children.push_back(parse_block());
    bool any_handler = false;
    while (at_kw("except")) {
      ++pos_;
      any_handler = true;
      Node h = make("handler");
      if (!at_op(":")) {
        h.children.push_back(parse_expression());
        if (eat_kw("as")) h.children.push_back(make_id(expect_name()));
      }
      h.children.push_back(parse_block());
      n.children.push_back(std::move(h));
    }
    if (eat_kw("else")) {
      Node e = make("try_else");
      e.children.push_back(parse_block());
      n.children.push_back(std::move(e));
    }
    if (eat_kw("finally")) {
      Node f = make("finally");
      f.children.push_back(parse_block());
      n.children.push_back(std::move(f));
    } else if (!any_handler) {
      fail("try without except or finally");
    }
    return n;
  }

  Node parse_with() {
    expect_kw("with");
    Node n = make("with");
    do {
      Node item = make("withitem");
      item.children.push_back(parse_expression());
      if (eat_kw("as")) item.children.push_back(parse_target_atom());
      n.children.push_back(std::move(item));
    } while (eat_op(","));
    n.children.push_back(parse_block());
    return n;
  }

  // ---- expressions ----

  Node parse_expression() { return parse_ternary(); }

  Node parse_ternary() {
    if (at_kw("lambda")) return parse_lambda();
    Node value = parse_named();
    if (!at_kw("if")) return value;
    ++pos_;
    Node n = make("ternary");
    n.children.push_back(std::move(value));
    n.children.push_back(parse_named());
    expect_kw("else");
    n.children.push_back(parse_ternary());
    return n;
  }

  Node parse_lambda() {
    expect_kw("lambda");
    Node n = make("lambda");
    Node params = make("params");
    while (!at_op(":")) {
      Node p = make("param");
      p.children.push_back(make_id(expect_name()));
      if (eat_op("=")) {
        Node d = make("default");
        d.children.push_back(parse_expression());
        p.children.push_back(std::move(d));
      }
      params.children.push_back(std::move(p));
      if (!eat_op(",")) break;
    }
    expect_op(":");
    n.children.push_back(std::move(params));
    n.children.push_back(parse_expression());
    return n;
  }

  Node parse_named() {
    Node left = parse_or();
    if (at_op(":=")) {
      ++pos_;
      Node n = make("named");
      n.children.push_back(std::move(left));
      n.children.push_back(parse_or());
      return n;
    }
    return left;
  }

  Node parse_or() {
    Node left = parse_and();
    while (eat_kw("or")) {
      Node n = make("or");
      n.children.push_back(std::move(left));
      n.children.push_back(parse_and());
      left = std::move(n);
    }
    return left;
  }

  Node parse_and() {
    Node left = parse_not();
    while (eat_kw("and")) {
      Node n = make("and");
      n.children.push_back(std::move(left));
      n.children.push_back(parse_not());
      left = std::move(n);
    }
    return left;
  }

  Node parse_not() {
    if (eat_kw("not")) {
      Node n = make("not");
      n.children.push_back(parse_not());
      return n;
    }
    return parse_comparison();
  }

  Node parse_comparison() {
    Node left = parse_bitor();
    if (!at_comparison_op()) return left;
    Node n = make("cmp");
    n.children.push_back(std::move(left));
    while (at_comparison_op()) {
      n.children.push_back(make("cmpop:" + take_comparison_op()));
      n.children.push_back(parse_bitor());
    }
    return n;
  }

  bool at_comparison_op() const {
    if (peek().kind == TokenKind::op) {
      const std::string& t = peek().text;
      return t == "<" || t == ">" || t == "<=" || t == ">=" || t == "==" || t == "!=";
    }
    return at_kw("in") || at_kw("is") ||
           (at_kw("not") && peek(1).kind == TokenKind::keyword && peek(1).text == "in");
  }

  std::string take_comparison_op() {
    if (peek().kind == TokenKind::op) return advance().text;
    if (at_kw("not")) {
      ++pos_;
      expect_kw("in");
      return "not in";
    }
    if (at_kw("is")) {
      ++pos_;
      if (eat_kw("not")) return "is not";
      return "is";
    }
    ++pos_;  // "in"
    return "in";
  }

  Node parse_bitor() { return parse_left_assoc({"|"}, [this] { return parse_bitxor(); }); }
  Node parse_bitxor() { return parse_left_assoc({"^"}, [this] { return parse_bitand(); }); }
  Node parse_bitand() { return parse_left_assoc({"&"}, [this] { return parse_shift(); }); }
  Node parse_shift() {
    return parse_left_assoc({"<<", ">>"}, [this] { return parse_arith(); });
  }
  Node parse_arith() {
    return parse_left_assoc({"+", "-"}, [this] { return parse_term(); });
  }
  Node parse_term() {
    return parse_left_assoc({"*", "/", "//", "%", "@"}, [this] { return parse_factor(); });
  }

  template <typename Sub>
  Node parse_left_assoc(std::initializer_list<const char*> ops, Sub sub) {
    Node left = sub();
    for (;;) {
      bool matched = false;
      for (const char* op : ops) {
        if (at_op(op)) {
          ++pos_;
          Node n = make(std::string("binop:") + op);
          n.children.push_back(std::move(left));
          n.children.push_back(sub());
          left = std::move(n);
          matched = true;
          break;
        }
      }
      if (!matched) return left;
    }
  }

  Node parse_factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      std::string op = advance().text;
      Node n = make("unary:" + op);
      n.children.push_back(parse_factor());
      return n;
    }
    return parse_power();
  }

  Node parse_power() {
    Node base = parse_postfix();
    if (at_op("**")) {
      ++pos_;
      Node n = make("binop:**");
      n.children.push_back(std::move(base));
      n.children.push_back(parse_factor());  // right-assoc
      return n;
    }
    return base;
  }

  Node parse_postfix() { return parse_trailers(parse_atom()); }

  Node parse_trailers(Node base) {
    for (;;) {
      if (at_op("(")) {
        ++pos_;
        Node call = make("call");
        call.children.push_back(std::move(base));
        while (!at_op(")")) {
          call.children.push_back(parse_call_arg());
          if (!eat_op(",")) break;
        }
        expect_op(")");
        base = std::move(call);
      } else if (at_op("[")) {
        ++pos_;
        Node sub = make("subscript");
        sub.children.push_back(std::move(base));
        sub.children.push_back(parse_subscript_inner());
        expect_op("]");
        base = std::move(sub);
      } else if (at_op(".")) {
        ++pos_;
        Node attr = make("attr:" + expect_name());
        attr.children.push_back(std::move(base));
        base = std::move(attr);
      } else {
        return base;
      }
    }
  }

  Node parse_call_arg() {
    if (eat_op("*")) {
      Node n = make("star");
      n.children.push_back(parse_expression());
      return n;
    }
    if (eat_op("**")) {
      Node n = make("dstar");
      n.children.push_back(parse_expression());
      return n;
    }
    if (at(TokenKind::name) && peek(1).kind == TokenKind::op && peek(1).text == "=") {
      std::string kw = advance().text;
      ++pos_;
      Node n = make("kwarg:" + kw);
      n.children.push_back(parse_expression());
      return n;
    }
    Node e = parse_expression();
    if (at_kw("for")) return parse_comprehension_clauses("genexp", std::move(e));
    return e;
  }

  Node parse_subscript_inner() {
    Node slice = make("slice");
    bool is_slice = false;
    if (!at_op(":")) {
      Node first = parse_expression();
      if (!at_op(":")) {
        if (eat_op(",")) {
          Node tup = make("tuple");
          tup.children.push_back(std::move(first));
          while (!at_op("]")) {
            tup.children.push_back(parse_expression());
            if (!eat_op(",")) break;
          }
          return tup;
        }
        return first;
      }
      slice.children.push_back(std::move(first));
    } else {
      slice.children.push_back(make("empty"));
    }
    expect_op(":");
    is_slice = true;
    if (!at_op("]") && !at_op(":"))
      slice.children.push_back(parse_expression());
    else
      slice.children.push_back(make("empty"));
    if (eat_op(":")) {
      if (!at_op("]"))
        slice.children.push_back(parse_expression());
      else
        slice.children.push_back(make("empty"));
    }
    (void)is_slice;
    return slice;
  }

  Node parse_comprehension_clauses(const std::string& label, Node elt) {
    Node n = make(label);
    n.children.push_back(std::move(elt));
    while (at_kw("for")) {
      ++pos_;
      Node clause = make("compfor");
      clause.children.push_back(parse_target_list());
      expect_kw("in");
      clause.children.push_back(parse_or());
      while (at_kw("if")) {
        ++pos_;
        Node cond = make("compif");
        cond.children.push_back(parse_or());
        clause.children.push_back(std::move(cond));
      }
      n.children.push_back(std::move(clause));
    }
    return n;
  }

  Node parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::name:
        ++pos_;
        return make_id(t.text);
      case TokenKind::number:
        ++pos_;
        return make("num:" + t.text);
      case TokenKind::string: {
        Node n = make("str:" + t.text);
        ++pos_;
        while (at(TokenKind::string)) {  // implicit concatenation
          Node cat = make("strcat");
          cat.children.push_back(std::move(n));
          cat.children.push_back(make("str:" + advance().text));
          n = std::move(cat);
        }
        return n;
      }
      case TokenKind::keyword:
        if (t.text == "True" || t.text == "False" || t.text == "None") {
          ++pos_;
          return make("const:" + t.text);
        }
        if (t.text == "lambda") return parse_lambda();
        fail("unexpected keyword");
      case TokenKind::op:
        break;
      default:
        fail("unexpected token");
    }
    if (eat_op("(")) {
      if (eat_op(")")) return make("tuple");
      Node first = parse_expression();
      if (at_kw("for")) {
        Node gen = parse_comprehension_clauses("genexp", std::move(first));
        expect_op(")");
        return gen;
      }
      if (at_op(",")) {
        Node tup = make("tuple");
        tup.children.push_back(std::move(first));
        while (eat_op(",")) {
          if (at_op(")")) break;
          tup.children.push_back(parse_expression());
        }
        expect_op(")");
        return tup;
      }
      expect_op(")");
      return first;  // grouping parens are transparent
    }
    if (eat_op("[")) {
      if (eat_op("]")) return make("list");
      Node first = parse_expression();
      if (at_kw("for")) {
        Node comp = parse_comprehension_clauses("listcomp", std::move(first));
        expect_op("]");
        return comp;
      }
      Node lst = make("list");
      lst.children.push_back(std::move(first));
      while (eat_op(",")) {
        if (at_op("]")) break;
        lst.children.push_back(parse_expression());
      }
      expect_op("]");
      return lst;
    }
    if (eat_op("{")) {
      if (eat_op("}")) return make("dict");
      if (eat_op("**")) {
        Node d = make("dict");
        Node spread = make("dstar");
        spread.children.push_back(parse_expression());
        d.children.push_back(std::move(spread));
        while (eat_op(",")) {
          if (at_op("}")) break;
          d.children.push_back(parse_dict_item());
        }
        expect_op("}");
        return d;
      }
      Node first = parse_expression();
      if (eat_op(":")) {
        Node pair = make("pair");
        pair.children.push_back(std::move(first));
        pair.children.push_back(parse_expression());
        if (at_kw("for")) {
          Node comp = parse_comprehension_clauses("dictcomp", std::move(pair));
          expect_op("}");
          return comp;
        }
        Node d = make("dict");
        d.children.push_back(std::move(pair));
        while (eat_op(",")) {
          if (at_op("}")) break;
          d.children.push_back(parse_dict_item());
        }
        expect_op("}");
        return d;
      }
      if (at_kw("for")) {
        Node comp = parse_comprehension_clauses("setcomp", std::move(first));
        expect_op("}");
        return comp;
      }
      Node s = make("set");
      s.children.push_back(std::move(first));
      while (eat_op(",")) {
        if (at_op("}")) break;
        s.children.push_back(parse_expression());
      }
      expect_op("}");
      return s;
    }
    if (at_op("*")) {
      ++pos_;
      Node n = make("star");
      n.children.push_back(parse_expression());
      return n;
    }
    fail("unexpected token");
  }

  Node parse_dict_item() {
    if (eat_op("**")) {
      Node spread = make("dstar");
      spread.children.push_back(parse_expression());
      return spread;
    }
    Node pair = make("pair");
    pair.children.push_back(parse_expression());
    expect_op(":");
    pair.children.push_back(parse_expression());
    return pair;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

}  // namespace

Node parse_python(const std::string& source) {
  lexer::LexResult lexed = lexer::lex_python(source);
  if (!lexed.clean()) throw ParseError("lexical problem: " + lexed.problems.front());
  for (const auto& t : lexed.tokens)
    if (t.kind == lexer::TokenKind::unknown)
      throw ParseError("line " + std::to_string(t.line) + ": stray character '" + t.text + "'");
  return Parser(std::move(lexed.tokens)).parse_module();
}

size_t count_nodes(const Node& n) {
  size_t total = 1;
  for (const auto& c : n.children) total += count_nodes(c);
  return total;
}

size_t count_nonleaf_subtrees(const Node& n) {
  if (n.leaf()) return 0;
  size_t total = 1;
  for (const auto& c : n.children) total += count_nonleaf_subtrees(c);
  return total;
}

std::string serialize(const Node& n) {
  std::string out = n.label;
  if (!n.children.empty()) {
    out += '(';
    for (size_t i = 0; i < n.children.size(); ++i) {
      if (i) out += ',';
      out += serialize(n.children[i]);
    }
    out += ')';
  }
  return out;
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.label != b.label || a.children.size() != b.children.size()) return false;
  for (size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(a.children[i], b.children[i])) return false;
  return true;
}

}  // namespace cseval::pyast
