#pragma once

// Sampled trajectories with one-sided limits at discontinuities.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "impulse/control.hpp"

namespace impulse {

struct TrajectoryNode {
  double t = 0.0;
  VectorXd x;  // x(t), pointwise value
  VectorXd u;  // u(t)
  std::optional<VectorXd> x_left, u_left;    // limits from the left, where u jumps
  std::optional<VectorXd> x_right, u_right;  // limits from the right, where they differ from the value

  const VectorXd& x_from_left() const { return x_left ? *x_left : x; }
  const VectorXd& x_from_right() const { return x_right ? *x_right : x; }
};

struct Trajectory {
  int n = 0;
  int m = 0;
  std::vector<TrajectoryNode> nodes;

  std::vector<double> times() const;
  const TrajectoryNode& at(double t) const;  // exact node lookup; throws if absent
  const TrajectoryNode& back() const { return nodes.back(); }

  /// CSV with columns t, x1..xn, u1..um, side; one-sided rows carry side L or R.
  std::string to_csv() const;
};

/// Trapezoidal L1 norm of x_A - x_B over the shared grid, using one-sided limits at the
/// interval ends. Both trajectories must have identical node times.
double l1_distance(const Trajectory& a, const Trajectory& b);
/// Largest |x_A - x_B| over node values and stored one-sided limits.
double sup_distance(const Trajectory& a, const Trajectory& b);

/// ||u - w||_1 on [a, b]. Exact for constant and affine pieces when m = 1;
/// otherwise composite trapezoid with `refine` subintervals per piece overlap.
double l1_distance(const ControlSignal& u, const ControlSignal& w, int refine = 64);

/// Sorted union of time lists, duplicates removed.
std::vector<double> merge_grids(std::vector<double> a, const std::vector<double>& b);
/// n_intervals + 1 equispaced times on [a, b], merged with the control breakpoints.
std::vector<double> default_grid(const ControlSignal& u, int n_intervals);

}  // namespace impulse
