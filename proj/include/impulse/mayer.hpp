#pragma once

// Mayer problems: minimize psi(x(b), u(b)) over a control class, by
// derivative-free search over a finite-dimensional parameterization.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "impulse/control.hpp"
#include "impulse/flowbox.hpp"
#include "impulse/io.hpp"
#include "impulse/spacetime.hpp"

namespace impulse {

enum class ControlClass { AC, L1, AC_K, U_K, U_K_plus };

std::string class_name(ControlClass c);
ControlClass parse_class(const std::string& name);

struct MayerProblem {
  ControlAffineSystem sys;
  FlowBoxChart chart;
  expr::Expr psi;  // in x1..xn, u1..um
  expr::Program psi_program;
  VectorXd x0;
  VectorXd u0;
  double a = 0.0;
  double b = 1.0;

  MayerProblem(ControlAffineSystem sys, expr::Expr psi, VectorXd x0, VectorXd u0, double a = 0.0, double b = 1.0,
               ChartOptions chart = {});

  double cost(const VectorXd& x, const VectorXd& u) const;
};

/// Problem document:
///
///   {"system": "toy.sys" | "system_dsl": "...", "psi": "x1^2", "x0": [1], "u0": [1],
///    "a": 0, "b": 1, "ode_tol": 1e-9, "class": "L1", "K": 2, "budget": 10000, "seed": 1,
///    "pieces": 8, "segments": 16, "K_list": [0.5, 1, 2, 4]}
///
/// Relative system paths resolve against `base_dir`.
MayerProblem problem_from_json(const json& j, const std::string& base_dir = ".");

struct ParameterizationShape {
  int pieces = 8;     // L1, AC, AC_K
  int segments = 16;  // U_K, U_K_plus
  double min_share = 0.01;  // lower bound of the time shares in U_K_plus
};

/// Maps [0,1]^d onto admissible controls of a class. U must be a box.
class ControlParameterization {
 public:
  ControlParameterization(const MayerProblem& problem, ControlClass cls, double K = 0.0,
                          ParameterizationShape shape = {});

  ControlClass control_class() const { return cls_; }
  double K() const { return K_; }
  int dim() const { return dim_; }
  bool uses_spacetime() const { return cls_ == ControlClass::U_K || cls_ == ControlClass::U_K_plus; }

  ControlSignal decode_signal(const VectorXd& p) const;
  SpaceTimeControl decode_spacetime(const VectorXd& p) const;
  json decode_json(const VectorXd& p) const;

 private:
  VectorXd decode_u(const double* p) const;
  VectorXd decode_v(const double* p) const;

  double a_, b_;
  VectorXd u0_;
  ControlClass cls_;
  double K_;
  ParameterizationShape shape_;
  int m_, l_, dv_;
  VectorXd ulo_, uhi_, vlo_, vhi_;
  std::vector<VectorXd> v_points_;
  int dim_ = 0;
};

struct Outcome {
  bool ok = false;
  double value = INFINITY;
  VectorXd x;
  VectorXd u;
};

/// Terminal point and cost of one parameter vector.
Outcome evaluate(const MayerProblem& problem, const ControlParameterization& param, const VectorXd& p);

struct SearchOptions {
  double restart_fraction = 0.2;
  double initial_step = 0.25;
  double min_step = 1e-6;
  int threads = 1;
};

struct ValueReport {
  ControlClass cls = ControlClass::L1;
  double K = 0.0;
  double best_value = INFINITY;
  VectorXd best_params;
  json best_control;
  VectorXd terminal_x, terminal_u;
  long evals = 0;
  long failures = 0;
  long restarts = 0;
  std::uint64_t seed = 0;
  double final_step = 0.0;
  double recheck_value = INFINITY;
  std::vector<std::pair<long, double>> trace;  // (evaluation count, incumbent) at each improvement

  json to_json() const;
  std::string trace_csv() const;
};

/// Multi-start coordinate pattern search. Deterministic for a given seed, independent of threads.
ValueReport estimate_value(const MayerProblem& problem, const ControlParameterization& param, long budget,
                           std::uint64_t seed, const SearchOptions& opts = {});

struct ExtensionReport {
  ValueReport ac, l1;
  std::vector<ValueReport> bv;
  std::vector<double> K_list;
  double tol_value = 1e-3;
  bool ac_equals_l1 = false;
  bool bv_nonincreasing = false;
  bool bv_limit_matches = false;

  bool pass() const { return ac_equals_l1 && bv_nonincreasing && bv_limit_matches; }
  json to_json() const;
};

ExtensionReport proper_extension_check(const MayerProblem& problem, long budget, const std::vector<double>& K_list,
                                       std::uint64_t seed, double tol_value = 1e-3, const SearchOptions& opts = {},
                                       ParameterizationShape shape = {});

struct Cloud {
  int n = 0, m = 0;
  std::vector<VectorXd> points;  // (x(b), u(b))
  long failures = 0;
  double K = 0.0;
  std::uint64_t seed = 0;

  std::string to_csv() const;
};

Cloud sample_reachable(const MayerProblem& problem, ControlClass cls, double K, int n_samples, std::uint64_t seed,
                       int threads = 1, ParameterizationShape shape = {});

/// (sup_a min_b |a - b|, sup_b min_a |a - b|).
std::pair<double, double> hausdorff_distance(const std::vector<VectorXd>& A, const std::vector<VectorXd>& B);

struct NearestNeighborSpacing {
  double mean = 0.0;  // average distance from a point to its nearest other point
  double max = 0.0;   // largest such distance: the widest gap in the cloud
};

NearestNeighborSpacing nearest_neighbor_spacing(const std::vector<VectorXd>& cloud);

}  // namespace impulse
