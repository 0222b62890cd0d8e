#include "impulse/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dsl_parser.hpp"
#include "impulse/errors.hpp"

namespace impulse::expr {

struct Node {
  Op op = Op::Const;
  double value = 0.0;
  VarKind kind = VarKind::X;
  int index = 0;
  std::vector<Expr> args;
};

namespace {

const std::shared_ptr<const Node>& zero_node() {
  static const auto node = std::make_shared<const Node>();
  return node;
}

double apply_unary(Op op, double a) {
  switch (op) {
    case Op::Neg: return -a;
    case Op::Exp: return std::exp(a);
    case Op::Log: return std::log(a);
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Tanh: return std::tanh(a);
    case Op::Abs: return std::abs(a);
    default: return std::nan("");
  }
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: return std::pow(a, b);
    default: return std::nan("");
  }
}

double bound(const Bindings& b, VarKind kind, int index) {
  switch (kind) {
    case VarKind::X: return b.x[static_cast<std::size_t>(index)];
    case VarKind::U: return b.u[static_cast<std::size_t>(index)];
    case VarKind::V: return b.v[static_cast<std::size_t>(index)];
    case VarKind::T: return b.t;
  }
  return 0.0;
}

bool is_one(const Expr& e) { return e.is_constant() && e.value() == 1.0; }

Expr add(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return Expr::binary(Op::Add, a, b);
}
Expr sub(const Expr& a, const Expr& b) {
  if (b.is_zero()) return a;
  if (a.is_zero()) return Expr::unary(Op::Neg, b);
  return Expr::binary(Op::Sub, a, b);
}
Expr mul(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr::constant(0.0);
  if (is_one(a)) return b;
  if (is_one(b)) return a;
  return Expr::binary(Op::Mul, a, b);
}
Expr div(const Expr& a, const Expr& b) {
  if (a.is_zero()) return Expr::constant(0.0);
  if (is_one(b)) return a;
  return Expr::binary(Op::Div, a, b);
}
Expr neg(const Expr& a) {
  if (a.is_zero()) return a;
  return Expr::unary(Op::Neg, a);
}

const char* func_name(Op op) {
  switch (op) {
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tanh: return "tanh";
    case Op::Abs: return "abs";
    default: return "?";
  }
}

char op_char(Op op) {
  switch (op) {
    case Op::Add: return '+';
    case Op::Sub: return '-';
    case Op::Mul: return '*';
    case Op::Div: return '/';
    case Op::Pow: return '^';
    default: return '?';
  }
}

}  // namespace

Expr::Expr() : node_(zero_node()) {}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(VarKind kind, int index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->kind = kind;
  n->index = index;
  return Expr(std::move(n));
}

Expr Expr::unary(Op op, Expr arg) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = {std::move(arg)};
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = {std::move(lhs), std::move(rhs)};
  return Expr(std::move(n));
}

Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
VarKind Expr::var_kind() const { return node_->kind; }
int Expr::var_index() const { return node_->index; }
const std::vector<Expr>& Expr::args() const { return node_->args; }

int Expr::max_index(VarKind kind) const {
  if (op() == Op::Var) return var_kind() == kind ? var_index() : -1;
  int best = -1;
  for (const Expr& a : args()) best = std::max(best, a.max_index(kind));
  return best;
}

double Expr::evaluate(const Bindings& b) const {
  switch (op()) {
    case Op::Const: return value();
    case Op::Var: return bound(b, var_kind(), var_index());
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: return apply_binary(op(), args()[0].evaluate(b), args()[1].evaluate(b));
    default: return apply_unary(op(), args()[0].evaluate(b));
  }
}

Expr Expr::derivative(VarKind kind, int index) const {
  switch (op()) {
    case Op::Const: return constant(0.0);
    case Op::Var: return constant(var_kind() == kind && var_index() == index ? 1.0 : 0.0);
    default: break;
  }
  const Expr& a = args()[0];
  const Expr da = a.derivative(kind, index);
  switch (op()) {
    case Op::Neg: return neg(da);
    case Op::Exp: return mul(*this, da);
    case Op::Log: return div(da, a);
    case Op::Sin: return mul(unary(Op::Cos, a), da);
    case Op::Cos: return neg(mul(unary(Op::Sin, a), da));
    case Op::Tanh: {
      const Expr sech2 = sub(constant(1.0), binary(Op::Mul, *this, *this));
      return mul(sech2, da);
    }
    case Op::Abs: {
      // d|a| = sign(a) da, written as a/|a| (undefined at a = 0, like |a|').
      return mul(div(a, *this), da);
    }
    default: break;
  }
  const Expr& c = args()[1];
  const Expr dc = c.derivative(kind, index);
  switch (op()) {
    case Op::Add: return add(da, dc);
    case Op::Sub: return sub(da, dc);
    case Op::Mul: return add(mul(da, c), mul(a, dc));
    case Op::Div: return div(sub(mul(da, c), mul(a, dc)), binary(Op::Mul, c, c));
    case Op::Pow: {
      if (c.is_constant()) {
        if (dc.is_zero() && da.is_zero()) return constant(0.0);
        // c a^(c-1) da
        return mul(mul(c, binary(Op::Pow, a, constant(c.value() - 1.0))), da);
      }
      // a^c (dc log a + c da / a)
      return mul(*this, add(mul(dc, unary(Op::Log, a)), div(mul(c, da), a)));
    }
    default: return constant(0.0);
  }
}

std::string var_name(VarKind kind, int index) {
  switch (kind) {
    case VarKind::X: return "x" + std::to_string(index + 1);
    case VarKind::U: return "u" + std::to_string(index + 1);
    case VarKind::V: return "v" + std::to_string(index + 1);
    case VarKind::T: return "t";
  }
  return "?";
}

std::string Expr::str() const {
  switch (op()) {
    case Op::Const: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", value());
      std::string s = buf;
      return value() < 0 ? "(" + s + ")" : s;
    }
    case Op::Var: return var_name(var_kind(), var_index());
    case Op::Neg: return "(-" + args()[0].str() + ")";
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: return "(" + args()[0].str() + " " + op_char(op()) + " " + args()[1].str() + ")";
    default: return std::string(func_name(op())) + "(" + args()[0].str() + ")";
  }
}

Program::Program(const Expr& e) {
  emit(e);
  std::size_t depth = 0;
  for (const Instr& in : code_) {
    if (in.op == Op::Const || in.op == Op::Var) {
      ++depth;
    } else if (in.op == Op::Add || in.op == Op::Sub || in.op == Op::Mul || in.op == Op::Div ||
               in.op == Op::Pow) {
      --depth;
    }
    max_depth_ = std::max(max_depth_, depth);
  }
}

void Program::emit(const Expr& e) {
  for (const Expr& a : e.args()) emit(a);
  code_.push_back({e.op(), e.op() == Op::Const ? e.value() : 0.0,
                   e.op() == Op::Var ? e.var_kind() : VarKind::X,
                   e.op() == Op::Var ? e.var_index() : 0});
}

double Program::operator()(const Bindings& b) const {
  constexpr std::size_t kInline = 32;
  double inline_stack[kInline];
  std::vector<double> heap;
  double* stack = inline_stack;
  if (max_depth_ > kInline) {
    heap.resize(max_depth_);
    stack = heap.data();
  }
  std::size_t sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: stack[sp++] = in.value; break;
      case Op::Var: stack[sp++] = bound(b, in.kind, in.index); break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
      case Op::Pow:
        --sp;
        stack[sp - 1] = apply_binary(in.op, stack[sp - 1], stack[sp]);
        break;
      default: stack[sp - 1] = apply_unary(in.op, stack[sp - 1]); break;
    }
  }
  return sp == 0 ? 0.0 : stack[0];
}

Expr parse(std::string_view text) {
  dsl::Parser p(dsl::tokenize(text));
  p.skip_separators();
  Expr e = p.expression();
  p.skip_separators();
  if (!p.at_end()) p.fail("unexpected trailing input '" + p.peek().text + "'");
  return e;
}

std::vector<Expr> parse_vector(std::string_view text) {
  dsl::Parser p(dsl::tokenize(text));
  p.skip_separators();
  auto items = p.vector_or_scalar();
  p.skip_separators();
  if (!p.at_end()) p.fail("unexpected trailing input '" + p.peek().text + "'");
  return items;
}

}  // namespace impulse::expr
