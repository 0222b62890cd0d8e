#pragma once

// Token stream and recursive-descent expression parser shared by the
// expression API and the system DSL.

#include <string>
#include <string_view>
#include <vector>

#include "impulse/expr.hpp"

namespace impulse::dsl {

enum class Tok { Number, Ident, Punct, Newline, End };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

std::vector<Token> tokenize(std::string_view source);

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool at_punct(char c) const { return peek().kind == Tok::Punct && peek().text[0] == c; }
  bool at_end() const { return peek().kind == Tok::End; }
  bool at_statement_end() const {
    return at_end() || peek().kind == Tok::Newline || at_punct(';');
  }
  void expect_punct(char c);
  std::string expect_ident();
  void skip_separators();
  [[noreturn]] void fail(const std::string& what) const;
  [[noreturn]] void fail_at(const Token& tok, const std::string& what) const;

  expr::Expr expression();
  /// Scalar expression, or a top-level "(e1, ..., ek)" vector literal.
  std::vector<expr::Expr> vector_or_scalar();
  /// Like expression() but the result must be free of variables.
  double constant_expression();
  std::vector<double> constant_vector();

 private:
  expr::Expr additive();
  expr::Expr multiplicative();
  expr::Expr unary();
  expr::Expr power();
  expr::Expr primary();
  void skip_newlines_in_parens();

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int paren_depth_ = 0;
};

}  // namespace impulse::dsl
