#include "impulse/solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "impulse/errors.hpp"
#include "impulse/parallel.hpp"
#include "impulse/rng.hpp"

namespace impulse {

namespace {

// Calls step(t0, t1, piece, v) for consecutive nodes of `grid` and record(i) at every node.
// Within one step the u-piece and the v-value are those of the open interval.
template <class Step, class Record>
void sweep(const ControlSignal& u, const std::vector<double>& grid, Step&& step, Record&& record) {
  record(0);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double mid = 0.5 * (grid[i] + grid[i + 1]);
    step(grid[i], grid[i + 1], u.u_pieces()[u.piece_index(mid)], u.v(mid));
    record(i + 1);
  }
}

std::vector<double> full_grid(const ControlSignal& u, const std::vector<double>& grid) {
  std::vector<double> g = merge_grids(u.breakpoints(), grid);
  if (g.front() < u.a() || g.back() > u.b()) throw ValidationError("grid extends outside [a, b]");
  return g;
}

OdeRhs reduced_rhs(const FlowBoxChart& chart, const ControlPiece& piece, const VectorXd& v) {
  return [&chart, &piece, v](double t, const VectorXd& xi, VectorXd& dxi) {
    dxi = chart.pushforward_drift(xi, piece.value(t), v);
  };
}

}  // namespace

Trajectory solve_reduced(const FlowBoxChart& chart, const VectorXd& xi0, const ControlSignal& u,
                         const std::vector<double>& grid) {
  if (xi0.size() != chart.n() || !xi0.allFinite()) throw ValidationError("initial xi has wrong size or is not finite");
  const std::vector<double> g = full_grid(u, grid);
  Trajectory out{chart.n(), chart.m(), {}};
  out.nodes.resize(g.size());
  VectorXd xi = xi0;
  sweep(
      u, g,
      [&](double t0, double t1, const ControlPiece& piece, const VectorXd& v) {
        integrate(reduced_rhs(chart, piece, v), xi, t0, t1, chart.options().ode);
      },
      [&](std::size_t i) {
        out.nodes[i].t = g[i];
        out.nodes[i].x = xi;
        out.nodes[i].u = u.u(g[i]);
      });
  return out;
}

VectorXd solve_reduced_terminal(const FlowBoxChart& chart, const VectorXd& xi0, const ControlSignal& u) {
  VectorXd xi = xi0;
  sweep(
      u, u.breakpoints(),
      [&](double t0, double t1, const ControlPiece& piece, const VectorXd& v) {
        integrate(reduced_rhs(chart, piece, v), xi, t0, t1, chart.options().ode);
      },
      [](std::size_t) {});
  return xi;
}

Trajectory pd_solution(const FlowBoxChart& chart, const VectorXd& x0, const ControlSignal& u,
                       const std::vector<double>& grid) {
  u.validate(chart.system());
  if (x0.size() != chart.n() || !x0.allFinite()) throw ValidationError("initial state has wrong size or is not finite");
  const VectorXd xi0 = chart.phi_pr(x0, u.u(u.a()));
  Trajectory xi = solve_reduced(chart, xi0, u, grid);
  const std::vector<double> jumps = u.jump_times();
  Trajectory out{chart.n(), chart.m(), {}};
  out.nodes.reserve(xi.nodes.size());
  for (const auto& node : xi.nodes) {
    TrajectoryNode q;
    q.t = node.t;
    q.u = node.u;
    q.x = node.t == u.a() ? x0 : chart.phi_inverse_pr(node.x, node.u);
    if (std::binary_search(jumps.begin(), jumps.end(), node.t)) {
      if (node.t > u.a()) {
        q.u_left = u.u_left(node.t);
        q.x_left = chart.phi_inverse_pr(node.x, *q.u_left);
      }
      if (node.t < u.b()) {
        const VectorXd ur = u.u_right(node.t);
        if (ur != q.u) {
          q.u_right = ur;
          q.x_right = chart.phi_inverse_pr(node.x, ur);
        }
      }
    }
    out.nodes.push_back(std::move(q));
  }
  return out;
}

VectorXd pd_terminal(const FlowBoxChart& chart, const VectorXd& x0, const ControlSignal& u) {
  u.validate(chart.system());
  const VectorXd xi = solve_reduced_terminal(chart, chart.phi_pr(x0, u.u(u.a())), u);
  return chart.phi_inverse_pr(xi, u.terminal());
}

Trajectory solve_original_ac(const ControlAffineSystem& sys, const VectorXd& x0, const ControlSignal& u,
                             const std::vector<double>& grid, const OdeOptions& opts) {
  if (!u.is_ac(1e-12)) throw ValidationError("solve_original_ac needs a continuous control (use pd_solution)");
  if (x0.size() != sys.n()) throw ValidationError("initial state has wrong size");
  const int n = sys.n();
  const int m = sys.m();
  const std::vector<double> g = full_grid(u, grid);
  Trajectory out{n, m, {}};
  out.nodes.resize(g.size());
  VectorXd y(n + m);
  y << x0, u.u(u.a());
  VectorXd gbuf(n);
  sweep(
      u, g,
      [&](double t0, double t1, const ControlPiece& piece, const VectorXd& v) {
        integrate(
            [&](double t, const VectorXd& p, VectorXd& dp) {
              const VectorXd x = p.head(n);
              const VectorXd z = p.tail(m);
              const VectorXd du = piece.derivative(t);
              dp.resize(n + m);
              sys.drift(x, z, v, dp.head(n));
              for (int a = 0; a < m; ++a) {
                if (du[a] == 0.0) continue;
                sys.impulse(a, x, z, gbuf);
                dp.head(n) += du[a] * gbuf;
              }
              dp.tail(m) = du;
            },
            y, t0, t1, opts);
      },
      [&](std::size_t i) {
        out.nodes[i].t = g[i];
        out.nodes[i].x = y.head(n);
        out.nodes[i].u = u.u(g[i]);
      });
  return out;
}

double ramp_width(const ControlSignal& u, int k) {
  const auto jumps = u.jump_times();
  if (jumps.empty()) return 0.0;
  return (u.b() - u.a()) / (std::pow(4.0, k) * static_cast<double>(jumps.size()));
}

ControlSignal ac_approximation(const ControlSignal& u, double t_star, int k) {
  const double a = u.a(), b = u.b();
  if (t_star < a || t_star > b) throw ValidationError("t_star outside the horizon");
  if (u.m() < 1) throw ValidationError("control has no components");
  const std::vector<double> jumps = u.jump_times();
  if (jumps.empty()) return ControlSignal(a, b, u.u_pieces(), u.terminal(), u.v_pieces());
  const double w = ramp_width(u, k);

  std::vector<double> bps;
  for (const auto& p : u.u_pieces()) bps.push_back(p.t0);
  bps.push_back(b);

  struct Window {
    double s0, s1;
    VectorXd from, to;
  };
  std::vector<Window> windows;
  for (double tau : jumps) {
    const auto it = std::lower_bound(bps.begin(), bps.end(), tau);
    const bool backward = tau == b || (tau == t_star && tau > a);
    if (backward) {
      const double prev = *(it - 1);
      double width = std::min(w, 0.5 * (tau - prev));
      if (t_star > tau - width && t_star < tau) width = tau - t_star;
      const double s0 = tau - width;
      windows.push_back({s0, tau, u.u_pieces()[u.piece_index(s0)].value(s0), u.u(tau)});
    } else {
      const double next = *(it + 1);
      double width = std::min(w, 0.5 * (next - tau));
      if (t_star > tau && t_star < tau + width) width = t_star - tau;
      const double s1 = tau + width;
      const VectorXd from = tau == a ? u.u(a) : u.u_left(tau);
      windows.push_back({tau, s1, from, u.u_pieces()[u.piece_index(tau)].value(s1)});
    }
  }
  std::sort(windows.begin(), windows.end(), [](const Window& p, const Window& q) { return p.s0 < q.s0; });

  std::vector<double> cuts = bps;
  for (const auto& win : windows) {
    cuts.push_back(win.s0);
    cuts.push_back(win.s1);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<ControlPiece> pieces;
  std::size_t wi = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double s0 = cuts[i], s1 = cuts[i + 1];
    while (wi < windows.size() && windows[wi].s1 <= s0) ++wi;
    if (wi < windows.size() && windows[wi].s0 <= s0 && s1 <= windows[wi].s1) {
      const Window& win = windows[wi];
      const double span = win.s1 - win.s0;
      const VectorXd v0 = win.from + (s0 - win.s0) / span * (win.to - win.from);
      const VectorXd v1 = win.from + (s1 - win.s0) / span * (win.to - win.from);
      pieces.push_back(ControlPiece::affine(s0, s1, v0, v1));
    } else {
      const double mid = 0.5 * (s0 + s1);
      pieces.push_back(u.u_pieces()[u.piece_index(mid)].restricted(s0, s1));
    }
  }
  return ControlSignal(a, b, std::move(pieces), u.u(b), u.v_pieces());
}

ConvergenceReport pd_limit_study(const FlowBoxChart& chart, const VectorXd& x0, const ControlSignal& u,
                                 double t_star, const std::vector<int>& k_values, const LimitStudyOptions& opts) {
  ConvergenceReport rep;
  rep.study = "pdlimit";
  rep.columns = {"k", "w_k", "u_l1", "x_l1", "x_tstar_err"};
  const double floor = opts.noise_floor >= 0 ? opts.noise_floor : 100.0 * chart.options().ode.abs_tol;
  for (int k : k_values) {
    const ControlSignal uk = ac_approximation(u, t_star, k);
    std::vector<double> grid = default_grid(u, opts.base_intervals);
    grid = merge_grids(std::move(grid), uk.breakpoints());
    grid = merge_grids(std::move(grid), {t_star});
    // Resolve the ramps, where x_k moves between the one-sided limits of x_pd.
    std::vector<double> extra;
    for (const auto& p : uk.u_pieces()) {
      if (p.kind != ControlPiece::Kind::Affine) continue;
      for (int j = 1; j < opts.ramp_refine; ++j) extra.push_back(p.t0 + (p.t1 - p.t0) * j / opts.ramp_refine);
    }
    grid = merge_grids(std::move(grid), extra);
    const Trajectory xpd = pd_solution(chart, x0, u, grid);
    const Trajectory xk = solve_original_ac(chart.system(), x0, uk, xpd.times(), chart.options().ode);
    const double x_l1 = l1_distance(xk, xpd);
    const double x_ts = (xk.at(t_star).x - xpd.at(t_star).x).norm();
    rep.rows.push_back({static_cast<double>(k), ramp_width(u, k), l1_distance(uk, u), x_l1, x_ts});
  }
  const auto ul1 = rep.column("u_l1");
  const auto xl1 = rep.column("x_l1");
  const auto xts = rep.column("x_tstar_err");
  rep.metrics["loglog_slope"] = loglog_slope(ul1, xl1);
  rep.metrics["final_x_l1"] = xl1.empty() ? 0.0 : xl1.back();
  rep.metrics["final_x_tstar_err"] = xts.empty() ? 0.0 : xts.back();
  rep.metrics["noise_floor"] = floor;
  rep.checks["x_l1_nonincreasing"] = nonincreasing_with_noise(xl1, opts.rel_noise, floor);
  rep.checks["x_tstar_nonincreasing"] = nonincreasing_with_noise(xts, opts.rel_noise, floor);
  return rep;
}

double lipschitz_ratio(const FlowBoxChart& chart, const VectorXd& x1, const ControlSignal& u1, const VectorXd& x2,
                       const ControlSignal& u2, const std::vector<double>& probe_times, int base_intervals) {
  std::vector<double> grid = merge_grids(default_grid(u1, base_intervals), u2.breakpoints());
  grid = merge_grids(std::move(grid), probe_times);
  const Trajectory p = pd_solution(chart, x1, u1, grid);
  const Trajectory q = pd_solution(chart, x2, u2, grid);
  const double x_l1 = l1_distance(p, q);
  const double u_l1 = l1_distance(u1, u2);
  const double base = (x1 - x2).norm() + (u1.u(u1.a()) - u2.u(u2.a())).norm() + u_l1;
  double best = -1.0;
  for (double t : probe_times) {
    const double den = base + (u1.u(t) - u2.u(t)).norm();
    if (!(den > 1e-14)) continue;
    best = std::max(best, ((p.at(t).x - q.at(t).x).norm() + x_l1) / den);
  }
  return best;
}

LipschitzProbeResult lipschitz_dependence_probe(const FlowBoxChart& chart, double r, const VectorXd& lo,
                                                const VectorXd& hi, int n_pairs, const std::vector<VPiece>& v,
                                                std::uint64_t seed, double a, double b, int pieces, int threads) {
  if (n_pairs < 1) throw ValidationError("n_pairs must be positive");
  const int n = chart.n();
  const int m = chart.m();
  if (lo.size() != m || hi.size() != m) throw ValidationError("control box has wrong dimension");
  const RandomStream root(seed, "lipschitz_probe");
  std::vector<double> probe;
  for (int j = 0; j < 10; ++j) probe.push_back(a + (b - a) * j / 9.0);

  auto draw = [&](RandomStream& rs) {
    VectorXd x(n);
    do {
      for (int i = 0; i < n; ++i) x[i] = rs.uniform(-r, r);
    } while (x.norm() > r);
    std::vector<ControlPiece> ps;
    for (int p = 0; p < pieces; ++p) {
      VectorXd val(m);
      for (int i = 0; i < m; ++i) val[i] = rs.uniform(lo[i], hi[i]);
      ps.push_back(ControlPiece::constant(a + (b - a) * p / pieces, p + 1 == pieces ? b : a + (b - a) * (p + 1) / pieces,
                                          val));
    }
    VectorXd term(m);
    for (int i = 0; i < m; ++i) term[i] = rs.uniform(lo[i], hi[i]);
    return std::pair{x, ControlSignal(a, b, std::move(ps), term, v)};
  };

  std::vector<double> ratios(static_cast<std::size_t>(n_pairs), 0.0);
  std::vector<int> status(static_cast<std::size_t>(n_pairs), 0);
  parallel_for(static_cast<std::size_t>(n_pairs), threads, [&](std::size_t i) {
    RandomStream rs = root.substream(i);
    auto [x1, u1] = draw(rs);
    auto [x2, u2] = draw(rs);
    try {
      const double ratio = lipschitz_ratio(chart, x1, u1, x2, u2, probe);
      if (ratio < 0) {
        status[i] = 1;
      } else {
        ratios[i] = ratio;
      }
    } catch (const Error&) {
      status[i] = 2;
    }
  });
  LipschitzProbeResult res;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (status[i] == 1) {
      ++res.skipped;
    } else if (status[i] == 2) {
      ++res.failed;
    } else {
      ++res.evaluated;
      res.max_ratio = std::max(res.max_ratio, ratios[i]);
    }
  }
  return res;
}

}  // namespace impulse
