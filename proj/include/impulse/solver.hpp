#pragma once

// Pointwise-defined solutions.
//
// In flow-box coordinates the impulsive system reduces to xi' = F~(xi, u, v),
// which sees u only as an argument. The p.d. solution is then
//
//   xi(a) = varphi(x0, u(a)),   x(t) = Pr phi^{-1}(xi(t), u(t)),
//
// evaluated at every t, so x jumps exactly where u does.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "impulse/control.hpp"
#include "impulse/flowbox.hpp"
#include "impulse/report.hpp"
#include "impulse/trajectory.hpp"

namespace impulse {

/// Carathéodory solution of xi' = F~(xi, u(t), v(t)). Nodes: grid merged with the control breakpoints.
/// The x field of each node holds xi.
Trajectory solve_reduced(const FlowBoxChart& chart, const VectorXd& xi0, const ControlSignal& u,
                         const std::vector<double>& grid);

/// Terminal value xi(b) only.
VectorXd solve_reduced_terminal(const FlowBoxChart& chart, const VectorXd& xi0, const ControlSignal& u);

/// p.d. solution on grid merged with the breakpoints; left limits stored at jump times, and a right
/// limit at t = a when u(a) differs from u(a+).
Trajectory pd_solution(const FlowBoxChart& chart, const VectorXd& x0, const ControlSignal& u,
                       const std::vector<double>& grid);

/// x(b) of the p.d. solution.
VectorXd pd_terminal(const FlowBoxChart& chart, const VectorXd& x0, const ControlSignal& u);

/// Direct integration of the embedded system (x, z)' = f + g_a u_a' with z(a) = u(a).
/// Requires u continuous on [a, b]; u' is taken from the piece formulas.
Trajectory solve_original_ac(const ControlAffineSystem& sys, const VectorXd& x0, const ControlSignal& u,
                             const std::vector<double>& grid, const OdeOptions& opts = {});

/// Ramp width (b - a) / (4^k #jumps) before clamping.
double ramp_width(const ControlSignal& u, int k);

/// AC approximant: every jump replaced by a linear ramp of width w_k, clamped to half the
/// adjacent piece and kept off t_star, so that u_k(a) = u(a) and u_k(t_star) = u(t_star).
ControlSignal ac_approximation(const ControlSignal& u, double t_star, int k);

struct LimitStudyOptions {
  int base_intervals = 200;
  int ramp_refine = 16;      // extra nodes inside each ramp
  double rel_noise = 0.05;   // allowed relative increase between consecutive k
  double noise_floor = -1;   // absolute floor; < 0 means 100 ode tolerances
};

/// Columns k, w_k, u_l1, x_l1, x_tstar_err. Metric loglog_slope fits x_l1 against u_l1.
ConvergenceReport pd_limit_study(const FlowBoxChart& chart, const VectorXd& x0, const ControlSignal& u,
                                 double t_star, const std::vector<int>& k_values,
                                 const LimitStudyOptions& opts = {});

struct LipschitzProbeResult {
  double max_ratio = 0.0;
  int evaluated = 0;
  int skipped = 0;
  int failed = 0;
};

/// Ratio (|x1(t)-x2(t)| + ||x1-x2||_1) / (|dx0| + |du(a)| + |du(t)| + ||du||_1) for one pair,
/// maximized over `probe_times`. Returns a negative value when every denominator vanishes.
double lipschitz_ratio(const FlowBoxChart& chart, const VectorXd& x1, const ControlSignal& u1,
                       const VectorXd& x2, const ControlSignal& u2, const std::vector<double>& probe_times,
                       int base_intervals = 100);

/// Random pairs with x0 in the ball B_r(0) and piecewise-constant u with `pieces` pieces in [lo, hi].
LipschitzProbeResult lipschitz_dependence_probe(const FlowBoxChart& chart, double r, const VectorXd& lo,
                                                const VectorXd& hi, int n_pairs, const std::vector<VPiece>& v,
                                                std::uint64_t seed, double a = 0.0, double b = 1.0,
                                                int pieces = 4, int threads = 1);

}  // namespace impulse
