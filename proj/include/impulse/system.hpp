#pragma once

// Control-affine impulsive systems
//
//   x' = f(x, u, v) + sum_a g_a(x, u) u_a',
//
// declared in a small text DSL, together with the numerical audit of the
// standing hypotheses (commuting impulse fields, sublinear growth).

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "impulse/expr.hpp"

namespace impulse {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Admissible set U for the impulsive control. Every accepted descriptor is convex.
class ImpulseDomain {
 public:
  enum class Kind { Full, Box, Polytope };

  static ImpulseDomain full(int m);
  static ImpulseDomain box(VectorXd lo, VectorXd hi);
  /// { u : A u <= b }.
  static ImpulseDomain polytope(MatrixXd a, VectorXd b);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool contains(const VectorXd& u, double tol = 1e-12) const;
  bool is_convex() const { return true; }
  /// Bounds for a box domain, or nullopt.
  std::optional<std::pair<VectorXd, VectorXd>> box_bounds() const;
  const MatrixXd& halfspace_normals() const { return a_; }
  const VectorXd& halfspace_offsets() const { return b_; }
  std::string str() const;

 private:
  Kind kind_ = Kind::Full;
  int dim_ = 0;
  VectorXd lo_, hi_;
  MatrixXd a_;
  VectorXd b_;
};

/// Compact set V for the ordinary control: a box or a finite set.
class OrdinarySet {
 public:
  enum class Kind { Box, Finite };

  static OrdinarySet box(VectorXd lo, VectorXd hi);
  static OrdinarySet finite(std::vector<VectorXd> points);
  /// The single point of R^0, used when l = 0.
  static OrdinarySet empty();

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool contains(const VectorXd& v, double tol = 1e-12) const;
  const VectorXd& lo() const { return lo_; }
  const VectorXd& hi() const { return hi_; }
  const std::vector<VectorXd>& points() const { return points_; }
  /// Finite sets: all points. Boxes: tensor grid with `per_axis` nodes per axis.
  std::vector<VectorXd> discretize(int per_axis) const;
  std::string str() const;

 private:
  Kind kind_ = Kind::Finite;
  int dim_ = 0;
  VectorXd lo_, hi_;
  std::vector<VectorXd> points_;
};

enum class JacobianSource { Analytic, FiniteDifference };

/// Central-difference step used throughout: 1e-6 (1 + |p_j|) per coordinate.
inline double fd_step(double coordinate) { return 1e-6 * (1.0 + std::abs(coordinate)); }

class ControlAffineSystem {
 public:
  ControlAffineSystem(int n, int m, int l, std::vector<expr::Expr> drift,
                      std::vector<std::vector<expr::Expr>> impulse, ImpulseDomain u_set,
                      OrdinarySet v_set);

  int n() const { return n_; }
  int m() const { return m_; }
  int l() const { return l_; }
  const ImpulseDomain& U() const { return u_set_; }
  const OrdinarySet& V() const { return v_set_; }

  JacobianSource jacobian_source() const { return jac_source_; }
  /// Same system, Jacobians by central differences instead of symbolic derivatives.
  ControlAffineSystem with_jacobians(JacobianSource source) const;

  void drift(const VectorXd& x, const VectorXd& u, const VectorXd& v, Eigen::Ref<VectorXd> out) const;
  VectorXd drift(const VectorXd& x, const VectorXd& u, const VectorXd& v) const;
  void impulse(int alpha, const VectorXd& x, const VectorXd& u, Eigen::Ref<VectorXd> out) const;
  VectorXd impulse(int alpha, const VectorXd& x, const VectorXd& u) const;

  /// n x (n+m) Jacobian of the drift with respect to (x, u).
  MatrixXd drift_jacobian(const VectorXd& x, const VectorXd& u, const VectorXd& v) const;
  /// n x (n+m) Jacobian of the impulse field g_alpha with respect to (x, u).
  MatrixXd impulse_jacobian(int alpha, const VectorXd& x, const VectorXd& u) const;
  /// Directional derivative D g~_alpha(x, u) . (dx, du).
  void impulse_jvp(int alpha, const VectorXd& x, const VectorXd& u, const VectorXd& dx,
                   const VectorXd& du, Eigen::Ref<VectorXd> out) const;

  /// Extended fields on R^{n+m}: f = (f~, 0), g_alpha = (g~_alpha, e_alpha).
  VectorXd extended_drift(const VectorXd& p, const VectorXd& v) const;
  VectorXd extended_impulse(int alpha, const VectorXd& p) const;
  /// (n+m) x (n+m) Jacobian of the extended impulse field; the last m rows are zero.
  MatrixXd extended_impulse_jacobian(int alpha, const VectorXd& p) const;

  const std::vector<expr::Expr>& drift_exprs() const { return f_; }
  const std::vector<expr::Expr>& impulse_exprs(int alpha) const { return g_[static_cast<std::size_t>(alpha)]; }

  /// DSL text that parses back to a system with identical evaluations.
  std::string to_dsl() const;

 private:
  void compile();

  int n_, m_, l_;
  std::vector<expr::Expr> f_;
  std::vector<std::vector<expr::Expr>> g_;
  ImpulseDomain u_set_;
  OrdinarySet v_set_;
  JacobianSource jac_source_ = JacobianSource::Analytic;

  std::vector<expr::Program> f_prog_;
  std::vector<std::vector<expr::Program>> g_prog_;
  // d f_i / d(x,u)_j and d g_{a,i} / d(x,u)_j, row-major over i then j.
  std::vector<expr::Program> df_prog_;
  std::vector<std::vector<expr::Program>> dg_prog_;
};

/// Parses the system DSL:
///
///   n=1; m=1; l=1
///   f = x1*v1
///   g1 = x1
///   U = box(-1, 1)
///   V = set{0, 1}
///
/// A bare `0` is the zero vector. V defaults to the box [0, 1]^l.
/// Throws ParseError (with line/column) on syntax errors, unknown identifiers
/// or dimension mismatches.
ControlAffineSystem parse_system(std::string_view source);
ControlAffineSystem load_system(const std::string& path);

/// [g_alpha, g_beta](p) = Dg_beta g_alpha - Dg_alpha g_beta on R^{n+m}. Indices 0-based.
VectorXd lie_bracket(const ControlAffineSystem& sys, int alpha, int beta, const VectorXd& p);

struct BracketViolation {
  int alpha = 0;
  int beta = 0;
  VectorXd point;
  double norm = 0.0;
};

struct HypothesisReport {
  double max_bracket_norm = 0.0;
  std::vector<VectorXd> bracket_sample_points;
  std::optional<BracketViolation> worst;  // largest tolerance-relative bracket
  double tol_bracket_scale = 1e-6;        // tolerance at p is scale * (1 + |p|^2)
  double growth_m = 0.0;                  // |f| <= M (1 + |(x,u)|), least squares
  double growth_n = 0.0;                  // |g| <= N (1 + |(x,u)|), least squares
  double growth_m_max_ratio = 0.0;
  double growth_n_max_ratio = 0.0;
  double lipschitz_estimate = 0.0;        // max operator norm of Jacobians over samples
  double impulse_lipschitz_estimate = 0.0;
  bool pass_commutativity = true;
  bool pass_growth = true;
  bool pass_v_compact = true;
  bool pass_u_impulse_domain = true;

  bool pass() const {
    return pass_commutativity && pass_growth && pass_v_compact && pass_u_impulse_domain;
  }
};

/// Samples `n_samples` Halton points in [lo, hi] subset of R^{n+m} and audits the hypotheses.
HypothesisReport check_hypotheses(const ControlAffineSystem& sys, const VectorXd& lo,
                                  const VectorXd& hi, int n_samples,
                                  double tol_bracket_scale = 1e-6);

}  // namespace impulse
