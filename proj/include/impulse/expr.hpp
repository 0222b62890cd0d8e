#pragma once

// Scalar expressions over the state x, the impulsive control u, the ordinary
// control v and time t. Trees are immutable and shared; evaluation goes
// through a compiled postfix Program.

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace impulse::expr {

enum class VarKind { X, U, V, T };

enum class Op {
  Const,
  Var,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Exp,
  Log,
  Sin,
  Cos,
  Tanh,
  Abs,
};

struct Node;

/// Values bound to the variables of an expression. Indices are 0-based.
struct Bindings {
  std::span<const double> x;
  std::span<const double> u;
  std::span<const double> v;
  double t = 0.0;
};

class Expr {
 public:
  Expr();  // the constant 0

  static Expr constant(double value);
  static Expr variable(VarKind kind, int index);
  static Expr unary(Op op, Expr arg);
  static Expr binary(Op op, Expr lhs, Expr rhs);

  Op op() const;
  double value() const;  // Const only
  VarKind var_kind() const;  // Var only
  int var_index() const;  // Var only
  const std::vector<Expr>& args() const;

  bool is_constant() const { return op() == Op::Const; }
  bool is_zero() const { return is_constant() && value() == 0.0; }

  /// Largest 0-based index used for `kind`, or -1.
  int max_index(VarKind kind) const;
  bool depends_on(VarKind kind) const { return max_index(kind) >= 0; }

  /// Symbolic partial derivative. Only folds trivial 0/1 constants.
  Expr derivative(VarKind kind, int index) const;

  /// Tree-walking evaluation. Prefer Program in hot loops.
  double evaluate(const Bindings& b) const;

  /// Fully parenthesized text that parses back to the same tree values.
  std::string str() const;

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Postfix compilation of an Expr for repeated evaluation.
class Program {
 public:
  Program() = default;
  explicit Program(const Expr& e);

  double operator()(const Bindings& b) const;

 private:
  struct Instr {
    Op op;
    double value;
    VarKind kind;
    int index;
  };
  void emit(const Expr& e);

  std::vector<Instr> code_;
  std::size_t max_depth_ = 0;
};

/// Parses one scalar expression (no vector literal). Throws ParseError.
Expr parse(std::string_view text);

/// Parses either a scalar expression or a parenthesized comma separated vector.
std::vector<Expr> parse_vector(std::string_view text);

std::string var_name(VarKind kind, int index);

}  // namespace impulse::expr
