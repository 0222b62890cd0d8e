#pragma once

// Everywhere-defined controls on [a, b].
//
// The impulsive control u is a finite list of pieces [t_i, t_{i+1}) plus an
// explicit terminal value u(b) and an optional initial value u(a) that may
// differ from the first piece. Pieces are right-continuous: a breakpoint
// belongs to the piece on its right. The ordinary control v is piecewise
// constant with the same convention.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "impulse/expr.hpp"
#include "impulse/system.hpp"

namespace impulse {

struct ControlPiece {
  enum class Kind { Constant, Affine, Expression };

  Kind kind = Kind::Constant;
  double t0 = 0.0;
  double t1 = 0.0;
  VectorXd start;  // value at t0 (Constant, Affine)
  VectorXd end;    // limit at t1 (Affine)
  std::vector<expr::Expr> exprs;   // u_a(t) (Expression)
  std::vector<expr::Expr> dexprs;  // d u_a / dt

  static ControlPiece constant(double t0, double t1, VectorXd value);
  static ControlPiece affine(double t0, double t1, VectorXd start, VectorXd end);
  static ControlPiece expression(double t0, double t1, std::vector<expr::Expr> exprs);

  int dim() const;
  /// Value of the piece formula at t (also used for the limits at t0 and t1).
  VectorXd value(double t) const;
  /// Time derivative of the piece formula, analytic.
  VectorXd derivative(double t) const;
  /// Same formula restricted to [s0, s1].
  ControlPiece restricted(double s0, double s1) const;
  /// Total variation of the formula over the piece (expressions: sampled).
  double variation() const;
};

struct VPiece {
  double t0 = 0.0;
  double t1 = 0.0;
  VectorXd value;
};

class ControlSignal {
 public:
  ControlSignal() = default;
  /// Pieces must tile [a, b] in order. `terminal` defaults to the left limit at b.
  ControlSignal(double a, double b, std::vector<ControlPiece> u_pieces, std::optional<VectorXd> terminal = {},
                std::vector<VPiece> v_pieces = {}, std::optional<VectorXd> initial = {});

  double a() const { return a_; }
  double b() const { return b_; }
  int m() const { return m_; }
  int l() const { return l_; }
  const std::vector<ControlPiece>& u_pieces() const { return u_; }
  const std::vector<VPiece>& v_pieces() const { return v_; }
  const VectorXd& terminal() const { return terminal_; }
  const std::optional<VectorXd>& initial() const { return initial_; }
  int truncation_level() const { return truncation_level_; }
  void set_truncation_level(int k) { truncation_level_ = k; }

  /// u(t), pointwise.
  VectorXd u(double t) const;
  /// Left limit u(t-) for t in (a, b].
  VectorXd u_left(double t) const;
  /// Right limit u(t+) for t in [a, b).
  VectorXd u_right(double t) const;
  /// Index of the u-piece containing t (right-continuous; t = b maps to the last piece).
  std::size_t piece_index(double t) const;
  VectorXd v(double t) const;
  std::size_t v_index(double t) const;

  /// Sorted breakpoints of u and v, including a and b.
  std::vector<double> breakpoints() const;
  /// Times where u is discontinuous (u(t-) != u(t) or u(t) != u(t+)), including a and b.
  std::vector<double> jump_times(double tol = 0.0) const;
  bool is_ac(double tol = 0.0) const { return jump_times(tol).empty(); }

  /// Throws ValidationError when a value leaves U or V or dimensions disagree.
  void validate(const ControlAffineSystem& sys) const;

  /// Same u with v replaced.
  ControlSignal with_v(std::vector<VPiece> v_pieces) const;

 private:
  double a_ = 0.0, b_ = 1.0;
  int m_ = 0, l_ = 0;
  std::vector<ControlPiece> u_;
  std::vector<VPiece> v_;
  VectorXd terminal_;
  std::optional<VectorXd> initial_;
  int truncation_level_ = 0;
};

/// The alternating control u = (-1)^{k+1} on [1 - 1/k, 1 - 1/(k+1)), u(1) = 0, on [0, 1],
/// truncated after 2 k_max pieces (the tail takes the terminal value 0), with
/// v = 1 on [0, 1/2) and 0 afterwards.
ControlSignal alternating_control(int k_max);

/// u = lo on [a, t_jump), hi on [t_jump, b] (m = 1), v constant.
ControlSignal step_control(double a, double b, double t_jump, double lo, double hi, VectorXd v = {});

}  // namespace impulse
