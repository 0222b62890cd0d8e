#include "dsl_parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include "impulse/errors.hpp"

namespace impulse::dsl {

using expr::Expr;
using expr::Op;
using expr::VarKind;

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    i += n;
    col += static_cast<int>(n);
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '\n') {
      out.push_back({Tok::Newline, "\n", 0.0, line, col});
      ++i;
      ++line;
      col = 1;
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src.size() &&
                                                        std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      double value = 0.0;
      const auto res = std::from_chars(src.data() + i, src.data() + j, value);
      if (res.ec != std::errc{} || res.ptr != src.data() + j) {
        throw ParseError("malformed number '" + std::string(src.substr(i, j - i)) + "'", line, col);
      }
      out.push_back({Tok::Number, std::string(src.substr(i, j - i)), value, line, col});
      advance(j - i);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), 0.0, line, col});
      advance(j - i);
      continue;
    }
    static constexpr std::string_view kPunct = "+-*/^(),;={}";
    if (kPunct.find(c) != std::string_view::npos) {
      out.push_back({Tok::Punct, std::string(1, c), 0.0, line, col});
      advance(1);
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }
  out.push_back({Tok::End, "", 0.0, line, col});
  return out;
}

void Parser::fail(const std::string& what) const { fail_at(peek(), what); }

void Parser::fail_at(const Token& tok, const std::string& what) const {
  throw ParseError(what, tok.line, tok.column);
}

void Parser::expect_punct(char c) {
  skip_newlines_in_parens();
  if (!at_punct(c)) {
    fail(std::string("expected '") + c + "'" +
         (peek().kind == Tok::End ? " before end of input" : " but found '" + peek().text + "'"));
  }
  next();
}

std::string Parser::expect_ident() {
  if (peek().kind != Tok::Ident) fail("expected identifier");
  return next().text;
}

void Parser::skip_separators() {
  while (peek().kind == Tok::Newline || at_punct(';')) next();
}

void Parser::skip_newlines_in_parens() {
  if (paren_depth_ > 0) {
    while (peek().kind == Tok::Newline) next();
  }
}

Expr Parser::expression() { return additive(); }

Expr Parser::additive() {
  Expr lhs = multiplicative();
  for (;;) {
    skip_newlines_in_parens();
    if (at_punct('+') || at_punct('-')) {
      const Op op = next().text[0] == '+' ? Op::Add : Op::Sub;
      lhs = Expr::binary(op, lhs, multiplicative());
    } else {
      return lhs;
    }
  }
}

Expr Parser::multiplicative() {
  Expr lhs = unary();
  for (;;) {
    skip_newlines_in_parens();
    if (at_punct('*') || at_punct('/')) {
      const Op op = next().text[0] == '*' ? Op::Mul : Op::Div;
      lhs = Expr::binary(op, lhs, unary());
    } else {
      return lhs;
    }
  }
}

Expr Parser::unary() {
  skip_newlines_in_parens();
  if (at_punct('-')) {
    next();
    return Expr::unary(Op::Neg, unary());
  }
  if (at_punct('+')) {
    next();
    return unary();
  }
  return power();
}

Expr Parser::power() {
  Expr base = primary();
  skip_newlines_in_parens();
  if (at_punct('^')) {
    next();
    return Expr::binary(Op::Pow, base, unary());
  }
  return base;
}

namespace {

bool parse_var(const std::string& name, VarKind& kind, int& index) {
  if (name == "t") {
    kind = VarKind::T;
    index = 0;
    return true;
  }
  if (name.size() < 2) return false;
  switch (name[0]) {
    case 'x': kind = VarKind::X; break;
    case 'u': kind = VarKind::U; break;
    case 'v': kind = VarKind::V; break;
    default: return false;
  }
  int value = 0;
  const auto* first = name.data() + 1;
  const auto* last = name.data() + name.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last || value < 1 || name[1] == '0') return false;
  index = value - 1;
  return true;
}

}  // namespace

Expr Parser::primary() {
  skip_newlines_in_parens();
  const Token tok = peek();
  if (tok.kind == Tok::Number) {
    next();
    return Expr::constant(tok.number);
  }
  if (tok.kind == Tok::Ident) {
    next();
    static const std::pair<const char*, Op> kFuncs[] = {
        {"exp", Op::Exp}, {"log", Op::Log}, {"sin", Op::Sin},
        {"cos", Op::Cos}, {"tanh", Op::Tanh}, {"abs", Op::Abs},
    };
    for (const auto& [name, op] : kFuncs) {
      if (tok.text == name) {
        expect_punct('(');
        ++paren_depth_;
        Expr arg = expression();
        expect_punct(')');
        --paren_depth_;
        return Expr::unary(op, arg);
      }
    }
    if (tok.text == "pi") return Expr::constant(std::numbers::pi);
    VarKind kind{};
    int index = 0;
    if (parse_var(tok.text, kind, index)) return Expr::variable(kind, index);
    fail_at(tok, "unknown identifier '" + tok.text + "'");
  }
  if (at_punct('(')) {
    next();
    ++paren_depth_;
    Expr inner = expression();
    skip_newlines_in_parens();
    if (at_punct(',')) fail("vector literal is only allowed as a whole right-hand side");
    expect_punct(')');
    --paren_depth_;
    return inner;
  }
  if (tok.kind == Tok::End) fail("unexpected end of input");
  fail_at(tok, "unexpected token '" + tok.text + "'");
}

std::vector<Expr> Parser::vector_or_scalar() {
  // A leading '(' may open either a vector literal or a parenthesized scalar.
  const std::size_t start = pos_;
  if (at_punct('(')) {
    next();
    ++paren_depth_;
    std::vector<Expr> items{expression()};
    skip_newlines_in_parens();
    if (at_punct(',')) {
      while (at_punct(',')) {
        next();
        items.push_back(expression());
        skip_newlines_in_parens();
      }
      expect_punct(')');
      --paren_depth_;
      return items;
    }
    --paren_depth_;
    pos_ = start;
  }
  return {expression()};
}

double Parser::constant_expression() {
  const Token tok = peek();
  const Expr e = expression();
  if (e.depends_on(VarKind::X) || e.depends_on(VarKind::U) || e.depends_on(VarKind::V) ||
      e.depends_on(VarKind::T)) {
    fail_at(tok, "expected a constant expression");
  }
  return e.evaluate({});
}

std::vector<double> Parser::constant_vector() {
  const Token tok = peek();
  std::vector<double> out;
  for (const Expr& e : vector_or_scalar()) {
    if (e.depends_on(VarKind::X) || e.depends_on(VarKind::U) || e.depends_on(VarKind::V) ||
        e.depends_on(VarKind::T)) {
      fail_at(tok, "expected a constant expression");
    }
    out.push_back(e.evaluate({}));
  }
  return out;
}

}  // namespace impulse::dsl
