#pragma once

// Compactified Hamiltonian and a semi-Lagrangian grid solver for the value
// function W_K(t, x, u, k) of the problem with variation budget K, where k is
// the variation already spent.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "impulse/io.hpp"
#include "impulse/mayer.hpp"
#include "impulse/system.hpp"

namespace impulse {

struct CostateVector {
  double p_t = 0.0;
  VectorXd p_x;
  VectorXd p_u;
  double p_k = 0.0;
};

/// (p_t + p_x.f) w0 + sum_a (p_x.g_a + p_ua) w_a + p_k sum_a |w_a|.
double pre_hamiltonian(const ControlAffineSystem& sys, double t, const VectorXd& x, const VectorXd& u, double k,
                       const CostateVector& p, double w0, const VectorXd& w, const VectorXd& v);

struct HamiltonianValue {
  double value = 0.0;
  double w0 = 0.0;
  VectorXd w;
  VectorXd v;
};

/// Sup of the pre-Hamiltonian over w0 >= 0, w0 + sum |w_a| <= 1, v in V, by enumeration of the
/// extreme points {0, (1, 0), (0, +-e_a)}. Box V is sampled with `n_v` nodes per axis.
/// Ties keep the first candidate in the order: zero, drift, then a ascending with + before -.
HamiltonianValue hamiltonian(const ControlAffineSystem& sys, double t, const VectorXd& x, const VectorXd& u, double k,
                             const CostateVector& p, int n_v = 5);

struct GridSpec {
  VectorXd x_lo, x_hi;  // state box
  int x_points = 41;    // per x axis
  int u_points = 41;    // along the widest U axis; every u axis shares that spacing
  int t_steps = 50;
  int n_v = 5;          // box V samples per axis
  double tol_sweep = 1e-12;
  int max_sweeps = 50;
  int threads = 1;

  json to_json() const;
  static GridSpec from_json(const json& j, int n);
};

struct Axis {
  double lo = 0.0;
  double step = 0.0;
  int count = 1;

  double node(int i) const { return lo + step * i; }
  double hi() const { return node(count - 1); }
};

/// Values W(t_j, x, u, k) on a tensor grid; row-major over (t, x_1..x_n, u_1..u_m, k), k fastest.
///
/// Binary export (little-endian):
///   char[4] "IMPW"; uint32 version = 1; uint32 n; uint32 m;
///   per axis in the order t, x_1..x_n, u_1..u_m, k: uint64 count, float64 lo, float64 step;
///   uint64 value count; float64 values[count].
struct ValueGrid {
  int n = 0, m = 0;
  Axis t;
  std::vector<Axis> x, u;
  Axis k;
  double K = 0.0;
  std::vector<double> values;

  long clamped = 0;          // departure points clamped back into the x box
  int max_sweeps_used = 0;   // impulse relaxation passes per slice, worst case
  double max_sweep_increase = 0.0;  // should stay 0: relaxation never raises a value

  std::size_t slice_size() const;
  std::size_t index(int ti, const std::vector<int>& xi, const std::vector<int>& ui, int ki) const;
  double at(int ti, const std::vector<int>& xi, const std::vector<int>& ui, int ki) const;
  /// Multilinear interpolation on slice ti in (x, u, k); points outside are clamped.
  double interpolate(int ti, const VectorXd& xq, const VectorXd& uq, double kq) const;
  /// Slice ti, budget layer ki as CSV with columns x.., u.., W.
  std::string slice_csv(int ti, int ki) const;

  void write_binary(const std::string& path) const;
  static ValueGrid read_binary(const std::string& path);
};

/// Backward semi-Lagrangian sweep: drift step from slice t + dt (min over v), then impulse relaxation
/// W <- min(W, W(t, x + du s g_a, u + du s e_a, k + du)) to a fixed point. The terminal slice is psi
/// followed by the same relaxation. Impulses that would leave the u grid or exceed K are not offered.
ValueGrid solve_w(const MayerProblem& problem, double K, const GridSpec& spec);

struct CrossValidationLevel {
  int x_points = 0, u_points = 0, t_steps = 0;
  double w = 0.0;
  double diff = 0.0;
  long clamped = 0;
  double seconds = 0.0;
};

struct CrossValidationReport {
  double K = 0.0;
  double v_bv = 0.0;
  ValueReport search;
  std::vector<CrossValidationLevel> levels;
  double tol = 5e-2;
  bool shrinking = false;

  bool pass() const { return shrinking && !levels.empty() && levels.back().diff <= tol; }
  json to_json() const;
};

/// Compares W_K(a, x0, u0, 0) on `levels` grids (the last is `finest`, each coarser one halves the
/// point counts and time steps) with the U_K search value.
CrossValidationReport crossvalidate_w(const MayerProblem& problem, double K, const GridSpec& finest, long budget,
                                      std::uint64_t seed, int levels = 3, double tol = 5e-2);

}  // namespace impulse
