#pragma once

// Space-time controls (graph completions).
//
// A space-time control is a Lipschitz path s -> (u0(s), u(s)) on [0, 1] with
// u0 nondecreasing from a to b and u0' + |u'| <= b - a + K. The system
//
//   y0' = u0',   y' = u0' f~(y, u, v) + sum_a g~_a(y, u) u_a'
//
// runs along it. Segments with u0' = 0 are bridges: time is frozen and only
// the impulse fields act.

#include <Eigen/Dense>
#include <vector>

#include "impulse/control.hpp"
#include "impulse/flowbox.hpp"
#include "impulse/io.hpp"
#include "impulse/report.hpp"

namespace impulse {

class SpaceTimeControl {
 public:
  SpaceTimeControl() = default;
  /// Piecewise-affine path through the nodes; v[i] is held on segment i.
  SpaceTimeControl(std::vector<double> s, std::vector<double> u0, std::vector<VectorXd> u, std::vector<VectorXd> v,
                   double K);

  /// Arc-length form: segment i advances time by dt[i] >= 0 and u by du[i]; the s-lengths are
  /// (dt[i] + |du[i]|) / (sum dt + sum |du|). K defaults to the path variation.
  static SpaceTimeControl from_increments(double a, const VectorXd& u_start, const std::vector<double>& dt,
                                          const std::vector<VectorXd>& du, std::vector<VectorXd> v,
                                          double K = -1.0);

  int segments() const { return static_cast<int>(s_.size()) - 1; }
  int m() const { return static_cast<int>(u_.front().size()); }
  double a() const { return u0_.front(); }
  double b() const { return u0_.back(); }
  double K() const { return K_; }
  double budget() const { return b() - a() + K_; }
  const std::vector<double>& s() const { return s_; }
  const std::vector<double>& u0() const { return u0_; }
  const std::vector<VectorXd>& u() const { return u_; }
  const std::vector<VectorXd>& v() const { return v_; }

  double ds(int i) const { return s_[i + 1] - s_[i]; }
  double u0_slope(int i) const { return (u0_[i + 1] - u0_[i]) / ds(i); }
  VectorXd u_slope(int i) const { return (u_[i + 1] - u_[i]) / ds(i); }
  bool is_bridge(int i) const { return u0_[i + 1] == u0_[i]; }
  /// Member of U_K^+: u0' > 0 on every segment.
  bool in_plus() const;
  double min_u0_slope() const;
  /// Sum of |du| over segments.
  double variation() const;
  /// Largest u0' + |u'| over segments.
  double max_speed() const;

  /// Segment containing s (right-continuous; s = 1 maps to the last segment).
  int segment_index(double s) const;
  double u0_at(double s) const;
  VectorXd u_at(double s) const;

  /// Smallest (right = false) or largest (right = true) s with u0(s) = t.
  double s_of_time(double t, bool right) const;

  /// Throws ValidationError unless u0 is nondecreasing, v fits, and the slope bound holds.
  void validate(double rel_tol = 1e-12) const;
  /// Also checks u in U and v in V.
  void validate(const ControlAffineSystem& sys, double rel_tol = 1e-12) const;

  /// Same path with a different variation budget.
  SpaceTimeControl with_budget(double K) const;

  json to_json() const;
  static SpaceTimeControl from_json(const json& j);

 private:
  std::vector<double> s_;
  std::vector<double> u0_;
  std::vector<VectorXd> u_;
  std::vector<VectorXd> v_;
  double K_ = 0.0;
};

/// Var[u]: piece variations plus jump magnitudes (including jumps at a and b).
double total_variation(const ControlSignal& u);

/// Arc-length reparameterization of an AC control with constant or affine pieces; K = Var[u].
SpaceTimeControl reparameterize_ac(const ControlSignal& u);

/// Graph segments as in reparameterize_ac plus an affine bridge at every jump
/// (leading bridge if u(a) != u(a+), terminal bridge if u(b) != u(b-)); K = Var[u].
SpaceTimeControl rectilinear_completion(const ControlSignal& u);

struct SpaceTimeTrajectory {
  std::vector<double> s;
  std::vector<double> y0;
  std::vector<VectorXd> y;
  std::vector<VectorXd> u;

  /// Index of the sample at exactly s; throws if absent.
  std::size_t index_of(double s_value) const;
};

/// Carathéodory solution along the path, sampled at the nodes and at `samples`.
SpaceTimeTrajectory solve_spacetime(const ControlAffineSystem& sys, const VectorXd& x0, const SpaceTimeControl& stc,
                                    const std::vector<double>& samples = {}, const OdeOptions& opts = {});

/// y(1) only.
VectorXd spacetime_terminal(const ControlAffineSystem& sys, const VectorXd& x0, const SpaceTimeControl& stc,
                            const OdeOptions& opts = {});

/// Arc-length element of U_K^+ with u0' >= h on every segment and the same u-increments:
/// time increments max(lambda dt_i, h |du_i| / (L - h)) with lambda fixed by the horizon,
/// L = b - a + Var. Returns the input unchanged when its minimum slope is already >= h.
SpaceTimeControl raise_min_slope(const SpaceTimeControl& stc, double h);

/// Columns h, sup_dist, terminal_dist; metric loglog_slope fits sup_dist against h.
/// h values are multiples of (b - a).
ConvergenceReport density_study(const ControlAffineSystem& sys, const VectorXd& x0, const SpaceTimeControl& stc,
                                const std::vector<double>& h_factors, const OdeOptions& opts = {},
                                int samples = 2000);

/// max over graph times of |x_pd(t+) - y(s(t+))| for the rectilinear completion of u.
double equivalence_pd_vs_spacetime(const FlowBoxChart& chart, const VectorXd& x0, const ControlSignal& u,
                                   int grid_intervals = 100);

enum class BridgePath { Affine, TwoSpeed, Overshoot, Detour, DetourReversed };

/// Replaces every bridge by another path with the same endpoints (time frozen). Detour moves one
/// u-coordinate at a time (for m = 1 it first backs off by half the jump). K is raised to keep
/// the slope bound.
SpaceTimeControl with_bridge_paths(const SpaceTimeControl& stc, BridgePath kind);

}  // namespace impulse
