// Acceptance criteria. `acceptance N ...` runs the listed criteria, no argument runs all.
// One PASS/FAIL line per criterion; the exit code is nonzero if any of them fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "impulse/control.hpp"
#include "impulse/flowbox.hpp"
#include "impulse/hjb.hpp"
#include "impulse/mayer.hpp"
#include "impulse/rng.hpp"
#include "impulse/sampling.hpp"
#include "impulse/solver.hpp"
#include "impulse/spacetime.hpp"

using namespace impulse;

namespace {

const char* kToy = "n=1; m=1; l=1; f = x1*v1; g1 = x1; U = box(-1, 1); V = set{0, 1}";
const char* kTranslation = "n=1; m=1; l=0; f = 0; g1 = 1";
const char* kOscillator =
    "n=2; m=1; l=1; f = (x2, -sin(x1) - 0.2*x2 + v1); g1 = (x2, -x1); U = box(-1, 1); V = box(-0.5, 0.5)";
const char* kCommuting = "n=2; m=2; l=0; f = (-x1, x2); g1 = (x1, 0); g2 = (0, x2); U = box((-1, -1), (1, 1))";

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ChartOptions tol(double t) {
  ChartOptions c;
  c.ode.abs_tol = c.ode.rel_tol = t;
  return c;
}

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

MayerProblem toy_problem() { return MayerProblem(parse_system(kToy), expr::parse("x1^2"), vec({1.0}), vec({1.0}), 0.0, 1.0, tol(1e-9)); }

// Random continuous piecewise-affine control with values in [lo, hi] and v from V.
ControlSignal random_ac(const ControlAffineSystem& sys, RandomStream& rs, int pieces) {
  const auto box = *sys.U().box_bounds();
  const int m = sys.m();
  auto draw_u = [&] {
    VectorXd u(m);
    for (int i = 0; i < m; ++i) u[i] = rs.uniform(box.first[i], box.second[i]);
    return u;
  };
  auto draw_v = [&] {
    if (sys.l() == 0) return VectorXd(0);
    if (sys.V().kind() == OrdinarySet::Kind::Finite) return sys.V().points()[rs.below(sys.V().points().size())];
    VectorXd v(sys.l());
    for (int i = 0; i < sys.l(); ++i) v[i] = rs.uniform(sys.V().lo()[i], sys.V().hi()[i]);
    return v;
  };
  std::vector<ControlPiece> up;
  std::vector<VPiece> vp;
  VectorXd prev = draw_u();
  for (int i = 0; i < pieces; ++i) {
    const double t0 = static_cast<double>(i) / pieces, t1 = i + 1 == pieces ? 1.0 : static_cast<double>(i + 1) / pieces;
    VectorXd next = draw_u();
    up.push_back(ControlPiece::affine(t0, t1, prev, next));
    if (sys.l() > 0) vp.push_back({t0, t1, draw_v()});
    prev = next;
  }
  return ControlSignal(0.0, 1.0, std::move(up), prev, std::move(vp));
}

// Random BV control: constant or affine pieces with jumps between them, at a and at b.
ControlSignal random_bv(const ControlAffineSystem& sys, RandomStream& rs, int pieces) {
  const auto box = *sys.U().box_bounds();
  const int m = sys.m();
  auto draw_u = [&] {
    VectorXd u(m);
    for (int i = 0; i < m; ++i) u[i] = rs.uniform(box.first[i], box.second[i]);
    return u;
  };
  std::vector<ControlPiece> up;
  std::vector<VPiece> vp;
  for (int i = 0; i < pieces; ++i) {
    const double t0 = static_cast<double>(i) / pieces, t1 = i + 1 == pieces ? 1.0 : static_cast<double>(i + 1) / pieces;
    if (rs.uniform() < 0.5) {
      up.push_back(ControlPiece::constant(t0, t1, draw_u()));
    } else {
      up.push_back(ControlPiece::affine(t0, t1, draw_u(), draw_u()));
    }
    if (sys.l() > 0) vp.push_back({t0, t1, sys.V().points()[rs.below(sys.V().points().size())]});
  }
  return ControlSignal(0.0, 1.0, std::move(up), draw_u(), std::move(vp), draw_u());
}

// Closed form of the toy trajectory for the alternating control at t = (i + 1/3) / 49, with x0 = 1.
// 1 / (1 - t) = 147 / (146 - 3 i) is never an integer, so no probe sits on a jump.
double toy_probe_exact(int i) {
  if (6 * i + 2 < 147) return std::exp((3.0 * i + 1.0) / 147.0);  // t < 1/2
  const int k = 147 / (146 - 3 * i);  // t in [1 - 1/k, 1 - 1/(k+1))
  return k % 2 == 0 ? std::exp(0.5 - 2.0) : std::exp(0.5);
}

Verdict criterion1() {
  Timer timer;
  const FlowBoxChart chart(parse_system(kToy), tol(1e-10));
  const ControlSignal u = alternating_control(40);
  std::vector<double> probes;
  for (int i = 0; i < 49; ++i) probes.push_back((i + 1.0 / 3.0) / 49.0);
  probes.push_back(1.0);
  const Trajectory tr = pd_solution(chart, vec({1.0}), u, probes);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double exact = i < 49 ? toy_probe_exact(i) : std::exp(-0.5);
    worst = std::max(worst, std::abs(tr.at(probes[static_cast<std::size_t>(i)]).x[0] - exact) / exact);
  }
  const double secs = timer.seconds();
  return {worst <= 1e-6 && secs < 5.0,
          fmt("max relative error %.3g at 50 probes (<= 1e-6), %.2f s (< 5 s)", worst, secs)};
}

Verdict criterion2() {
  Timer timer;
  double worst_push = 0.0, worst_round = 0.0;
  for (const char* dsl : {kToy, kTranslation, kOscillator}) {
    const ControlAffineSystem sys = parse_system(dsl);
    const FlowBoxChart chart(sys, tol(1e-10));
    const int n = sys.n(), m = sys.m();
    const auto pts = halton_points(200, VectorXd::Constant(n + m, -2.0), VectorXd::Constant(n + m, 2.0));
    for (const auto& p : pts) {
      const VectorXd x = p.head(n), z = p.tail(m);
      for (int a = 0; a < m; ++a) {
        const VectorXd g = sys.extended_impulse(a, p);
        VectorXd e = VectorXd::Zero(n + m);
        e[n + a] = 1.0;
        worst_push = std::max(worst_push, (chart.dphi_apply(x, z, g) - e).norm());
      }
      const auto [xi, zeta] = chart.phi(x, z);
      const auto [xb, zb] = chart.phi_inverse(xi, zeta);
      VectorXd back(n + m);
      back << xb, zb;
      worst_round = std::max(worst_round, (back - p).norm());
    }
  }
  const double secs = timer.seconds();
  return {worst_push <= 1e-5 && worst_round <= 1e-6 && secs < 30.0,
          fmt("|Dphi g - e| max %.3g (<= 1e-5), round trip max %.3g (<= 1e-6), 3 systems x 200 points, %.2f s (< 30 s)",
              worst_push, worst_round, secs)};
}

Verdict criterion3() {
  Timer timer;
  double worst = 0.0;
  const std::vector<std::pair<const char*, VectorXd>> cases{
      {kToy, vec({1.0})}, {kOscillator, vec({0.5, -0.3})}, {kCommuting, vec({1.0, -0.5})}};
  std::uint64_t idx = 0;
  for (const auto& [dsl, x0] : cases) {
    const ControlAffineSystem sys = parse_system(dsl);
    const FlowBoxChart chart(sys, tol(1e-10));
    for (int trial = 0; trial < 20; ++trial) {
      RandomStream rs = RandomStream(3, "criterion3").substream(idx++);
      const ControlSignal u = random_ac(sys, rs, 5);
      const auto grid = default_grid(u, 100);
      const Trajectory pd = pd_solution(chart, x0, u, grid);
      const Trajectory direct = solve_original_ac(sys, x0, u, grid, chart.options().ode);
      worst = std::max(worst, sup_distance(pd, direct));
    }
  }
  const double secs = timer.seconds();
  return {worst <= 1e-6 && secs < 60.0,
          fmt("sup |x_pd - x_direct| = %.3g over 60 AC controls (<= 1e-6), %.2f s (< 60 s)", worst, secs)};
}

Verdict criterion4() {
  const FlowBoxChart chart(parse_system(kToy), tol(1e-10));
  const std::vector<int> ks{1, 2, 3, 4, 5, 6, 7, 8};
  bool ok = true;
  std::string detail;
  const std::vector<std::pair<std::string, ControlSignal>> cases{
      {"step", step_control(0.0, 1.0, 0.5, 0.0, 1.0, vec({1.0}))}, {"toy", alternating_control(12)}};
  for (const auto& [name, u] : cases) {
    const ConvergenceReport rep = pd_limit_study(chart, vec({1.0}), u, 1.0, ks);
    const double l1 = rep.metrics.at("final_x_l1"), tstar = rep.metrics.at("final_x_tstar_err");
    const double slope = rep.metrics.at("loglog_slope");
    const bool mono = rep.checks.at("x_l1_nonincreasing") && rep.checks.at("x_tstar_nonincreasing");
    ok = ok && mono && l1 <= 1e-4 && tstar <= 1e-4 && slope >= 0.9;
    detail += fmt("%s: monotone %s, final L1 %.3g, final |x(t*)| err %.3g (<= 1e-4), slope %.3f (>= 0.9); ",
                  name.c_str(), mono ? "yes" : "no", l1, tstar, slope);
  }
  return {ok, detail};
}

Verdict criterion5() {
  const ControlAffineSystem toy = parse_system(kToy);
  const FlowBoxChart chart(toy, tol(1e-10));
  double worst_eq = 0.0, worst_bridge = 0.0;
  auto bridges = [&](const ControlAffineSystem& sys, const VectorXd& x0, const ControlSignal& u) {
    const SpaceTimeControl base = rectilinear_completion(u);
    const VectorXd ref = spacetime_terminal(sys, x0, base, chart.options().ode);
    for (auto kind : {BridgePath::TwoSpeed, BridgePath::Overshoot, BridgePath::Detour, BridgePath::DetourReversed}) {
      if (sys.m() == 1 && kind == BridgePath::DetourReversed) continue;
      const VectorXd y = spacetime_terminal(sys, x0, with_bridge_paths(base, kind), chart.options().ode);
      worst_bridge = std::max(worst_bridge, (y - ref).norm());
    }
  };
  for (std::uint64_t i = 0; i < 10; ++i) {
    RandomStream rs = RandomStream(5, "criterion5").substream(i);
    const ControlSignal u = random_bv(toy, rs, 5);
    worst_eq = std::max(worst_eq, equivalence_pd_vs_spacetime(chart, vec({1.0}), u));
    bridges(toy, vec({1.0}), u);
  }
  const ControlAffineSystem comm = parse_system(kCommuting);
  for (std::uint64_t i = 0; i < 3; ++i) {
    RandomStream rs = RandomStream(5, "criterion5/commuting").substream(i);
    bridges(comm, vec({1.0, -0.5}), random_bv(comm, rs, 4));
  }
  return {worst_eq <= 1e-6 && worst_bridge <= 1e-6,
          fmt("pd vs space-time max %.3g over 10 BV controls (<= 1e-6), bridge-path deviation max %.3g (<= 1e-6)",
              worst_eq, worst_bridge)};
}

Verdict criterion6() {
  const ControlAffineSystem toy = parse_system(kToy);
  const SpaceTimeControl stc = rectilinear_completion(step_control(0.0, 1.0, 0.5, 0.0, 1.0, vec({0.0})));
  std::vector<double> h;
  for (int e = 1; e <= 10; ++e) h.push_back(std::ldexp(1.0, -e));
  const ConvergenceReport rep = density_study(toy, vec({1.0}), stc, h, tol(1e-10).ode);
  const double final_sup = rep.metrics.at("final_sup_dist"), slope = rep.metrics.at("loglog_slope");
  const bool mono = rep.checks.at("sup_dist_nonincreasing");
  return {mono && final_sup <= 1e-4 && slope >= 0.9,
          fmt("unit step, h = 2^-1..2^-10: decreasing %s, final sup distance %.3g (<= 1e-4), slope %.3f (>= 0.9)",
              mono ? "yes" : "no", final_sup, slope)};
}

Verdict criterion7() {
  const MayerProblem pr = toy_problem();
  const double exact = std::exp(-4.0);
  const ValueReport ac = estimate_value(pr, ControlParameterization(pr, ControlClass::AC), 10000, 1);
  const ValueReport l1 = estimate_value(pr, ControlParameterization(pr, ControlClass::L1), 10000, 1);
  const bool ok = std::abs(ac.best_value - l1.best_value) <= 1e-3 && std::abs(ac.best_value - exact) <= 1e-3 &&
                  std::abs(l1.best_value - exact) <= 1e-3;
  return {ok, fmt("V_AC = %.9f, V_L1 = %.9f, |diff| %.3g (<= 1e-3), endpoint-grid value %.9f, budget 1e4", ac.best_value,
                  l1.best_value, std::abs(ac.best_value - l1.best_value), exact)};
}

Verdict criterion8() {
  const MayerProblem pr = toy_problem();
  const ValueReport l1 = estimate_value(pr, ControlParameterization(pr, ControlClass::L1), 10000, 1);
  std::vector<double> vals;
  for (double K : {0.5, 1.0, 2.0, 4.0}) {
    vals.push_back(estimate_value(pr, ControlParameterization(pr, ControlClass::U_K, K), 10000, 1).best_value);
  }
  bool mono = true;
  for (std::size_t i = 1; i < vals.size(); ++i) mono = mono && vals[i] <= vals[i - 1] + 1e-3;
  const bool limit = std::abs(vals.back() - l1.best_value) <= 1e-3;
  return {mono && limit, fmt("V_BV_K = %.6f, %.6f, %.6f, %.6f for K = 0.5, 1, 2, 4 (nonincreasing %s); |V_BV_4 - V_L1| = %.3g (<= 1e-3)",
                             vals[0], vals[1], vals[2], vals[3], mono ? "yes" : "no", std::abs(vals.back() - l1.best_value))};
}

Verdict criterion9() {
  // Spacing is the widest nearest-neighbor gap of the target cloud; the mean gap is printed too.
  const MayerProblem pr = toy_problem();
  struct Run {
    double d;
    NearestNeighborSpacing spacing;
  };
  auto run = [&](int n) {
    const Cloud l1 = sample_reachable(pr, ControlClass::L1, 0.0, n, 9);
    const Cloud ac = sample_reachable(pr, ControlClass::AC, 0.0, n, 9);
    return Run{hausdorff_distance(l1.points, ac.points).first, nearest_neighbor_spacing(ac.points)};
  };
  const Run half = run(5000);
  const Run full = run(10000);
  const bool ok = full.d <= 3.0 * full.spacing.max && full.d < half.d;
  return {ok, fmt("d(L1 -> AC) = %.4g at 1e4 samples, 3 x spacing = %.4g (mean gap %.3g); at 5e3 samples d = %.4g "
                  "(decrease %s)",
                  full.d, 3.0 * full.spacing.max, full.spacing.mean, half.d, full.d < half.d ? "yes" : "no")};
}

double lattice_max(const ControlAffineSystem& sys, const VectorXd& x, const VectorXd& u, const CostateVector& p) {
  // Lattice of the simplex w0 + |w1| + |w2| <= 1 with its vertices, times the V samples.
  const int N = 20;
  double best = -INFINITY;
  for (const auto& v : sys.V().discretize(5)) {
    const double A = p.p_t + p.p_x.dot(sys.drift(x, u, v));
    VectorXd B(sys.m());
    for (int a = 0; a < sys.m(); ++a) B[a] = p.p_x.dot(sys.impulse(a, x, u)) + p.p_u[a];
    for (int i0 = 0; i0 <= N; ++i0) {
      for (int i1 = -N; i1 <= N; ++i1) {
        for (int i2 = -N; i2 <= N; ++i2) {
          if (i0 + std::abs(i1) + std::abs(i2) > N) continue;
          const double w0 = static_cast<double>(i0) / N, w1 = static_cast<double>(i1) / N, w2 = static_cast<double>(i2) / N;
          best = std::max(best, A * w0 + B[0] * w1 + B[1] * w2 + p.p_k * (std::abs(w1) + std::abs(w2)));
        }
      }
    }
  }
  return best;
}

Verdict criterion10() {
  Timer timer;
  const ControlAffineSystem sys =
      parse_system("n=2; m=2; l=1; f = (x2 + v1, -x1*v1); g1 = (1, 0); g2 = (0, x1 + u2); U = box((-1, -1), (1, 1)); V = box(-1, 1)");
  RandomStream rs(10, "criterion10");
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd x = vec({rs.uniform(-2, 2), rs.uniform(-2, 2)});
    const VectorXd u = vec({rs.uniform(-1, 1), rs.uniform(-1, 1)});
    const CostateVector p{rs.uniform(-2, 2), vec({rs.uniform(-2, 2), rs.uniform(-2, 2)}),
                          vec({rs.uniform(-2, 2), rs.uniform(-2, 2)}), rs.uniform(-2, 2)};
    worst = std::max(worst, std::abs(hamiltonian(sys, 0.0, x, u, 0.0, p).value - lattice_max(sys, x, u, p)));
  }
  const double secs = timer.seconds();
  return {worst <= 1e-9 && secs < 10.0,
          fmt("max |H - brute force| = %.3g at 100 costates (<= 1e-9), %.2f s (< 10 s)", worst, secs)};
}

Verdict criterion11() {
  Timer timer;
  GridSpec g;
  g.x_lo = vec({0.0});
  g.x_hi = vec({3.0});
  g.x_points = 41;
  g.u_points = 41;
  g.t_steps = 50;
  const CrossValidationReport rep = crossvalidate_w(toy_problem(), 2.0, g, 10000, 1);
  const double secs = timer.seconds();
  std::string diffs;
  for (const auto& l : rep.levels) diffs += fmt("%.3g ", l.diff);
  return {rep.pass() && secs < 300.0,
          fmt("K = 2: |W - V_BV_K| by level %s(final <= 5e-2, shrinking %s), %.2f s (< 300 s)", diffs.c_str(),
              rep.shrinking ? "yes" : "no", secs)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"toy-example reproduction", criterion1},  {"flow-box suite", criterion2},
      {"p.d. vs direct integration", criterion3}, {"p.d.-limit study", criterion4},
      {"BV equivalence and bridge independence", criterion5},
      {"density of U_K^+", criterion6},          {"proper extension AC = L1", criterion7},
      {"K -> infinity limit", criterion8},       {"reachable-set closure", criterion9},
      {"Hamiltonian oracle", criterion10},       {"HJB cross-validation", criterion11}};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::stoi(argv[i]));
  if (which.empty()) {
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) which.push_back(i);
  }
  int failures = 0;
  for (int c : which) {
    if (c < 1 || c > static_cast<int>(criteria.size())) {
      std::printf("unknown criterion %d\n", c);
      return 2;
    }
    const auto& [name, fn] = criteria[static_cast<std::size_t>(c - 1)];
    Verdict o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c, name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
