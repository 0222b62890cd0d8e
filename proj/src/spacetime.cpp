#include "impulse/spacetime.hpp"

#include <algorithm>
#include <cmath>

#include "impulse/errors.hpp"
#include "impulse/solver.hpp"
#include "impulse/trajectory.hpp"

namespace impulse {

SpaceTimeControl::SpaceTimeControl(std::vector<double> s, std::vector<double> u0, std::vector<VectorXd> u,
                                   std::vector<VectorXd> v, double K)
    : s_(std::move(s)), u0_(std::move(u0)), u_(std::move(u)), v_(std::move(v)), K_(K) {
  if (s_.size() < 2) throw ValidationError("space-time control needs at least one segment");
  if (u0_.size() != s_.size() || u_.size() != s_.size()) throw ValidationError("space-time node arrays differ in size");
  if (v_.size() != s_.size() - 1) throw ValidationError("space-time control needs one v per segment");
  if (s_.front() != 0.0 || s_.back() != 1.0) throw ValidationError("s-nodes must run from 0 to 1");
  for (std::size_t i = 0; i + 1 < s_.size(); ++i) {
    if (!(s_[i + 1] > s_[i])) throw ValidationError("s-nodes must increase strictly");
  }
  for (const auto& x : u_) {
    if (x.size() != u_.front().size()) throw ValidationError("u nodes differ in dimension");
  }
  if (!(K_ >= 0.0)) throw ValidationError("variation budget K must be nonnegative");
}

SpaceTimeControl SpaceTimeControl::from_increments(double a, const VectorXd& u_start, const std::vector<double>& dt,
                                                   const std::vector<VectorXd>& du, std::vector<VectorXd> v,
                                                   double K) {
  if (dt.size() != du.size() || dt.size() != v.size()) throw ValidationError("increment arrays differ in size");
  double total = 0.0, var = 0.0;
  for (std::size_t i = 0; i < dt.size(); ++i) {
    if (dt[i] < 0.0) throw ValidationError("time increments must be nonnegative");
    total += dt[i] + du[i].norm();
    var += du[i].norm();
  }
  if (!(total > 0.0)) throw ValidationError("space-time path has zero length");
  std::vector<double> s{0.0}, u0{a};
  std::vector<VectorXd> u{u_start}, vv;
  double acc = 0.0, t = a;
  for (std::size_t i = 0; i < dt.size(); ++i) {
    const double len = dt[i] + du[i].norm();
    if (len == 0.0) continue;
    acc += len;
    t += dt[i];
    if (s.size() > 1 && acc / total <= s.back()) {
      // below the resolution of s: fold into the previous node
      u0.back() = t;
      u.back() += du[i];
      continue;
    }
    s.push_back(acc / total);
    u0.push_back(t);
    u.push_back(u.back() + du[i]);
    vv.push_back(std::move(v[i]));
  }
  s.back() = 1.0;
  return SpaceTimeControl(std::move(s), std::move(u0), std::move(u), std::move(vv), K < 0.0 ? var : K);
}

bool SpaceTimeControl::in_plus() const { return min_u0_slope() > 0.0; }

double SpaceTimeControl::min_u0_slope() const {
  double out = INFINITY;
  for (int i = 0; i < segments(); ++i) out = std::min(out, u0_slope(i));
  return out;
}

double SpaceTimeControl::variation() const {
  double out = 0.0;
  for (int i = 0; i < segments(); ++i) out += (u_[i + 1] - u_[i]).norm();
  return out;
}

double SpaceTimeControl::max_speed() const {
  double out = 0.0;
  for (int i = 0; i < segments(); ++i) out = std::max(out, u0_slope(i) + u_slope(i).norm());
  return out;
}

int SpaceTimeControl::segment_index(double s) const {
  auto it = std::upper_bound(s_.begin(), s_.end(), s);
  int i = static_cast<int>(std::distance(s_.begin(), it)) - 1;
  return std::clamp(i, 0, segments() - 1);
}

double SpaceTimeControl::u0_at(double s) const {
  const int i = segment_index(s);
  return u0_[i] + (s - s_[i]) / ds(i) * (u0_[i + 1] - u0_[i]);
}

VectorXd SpaceTimeControl::u_at(double s) const {
  const int i = segment_index(s);
  return u_[i] + (s - s_[i]) / ds(i) * (u_[i + 1] - u_[i]);
}

double SpaceTimeControl::s_of_time(double t, bool right) const {
  if (t < a() || t > b()) throw ValidationError("time outside the horizon");
  if (right) {
    auto it = std::upper_bound(u0_.begin(), u0_.end(), t);
    const auto j = static_cast<std::size_t>(std::distance(u0_.begin(), it)) - 1;
    if (u0_[j] == t || j + 1 == s_.size()) return s_[j];
    return s_[j] + (t - u0_[j]) / (u0_[j + 1] - u0_[j]) * (s_[j + 1] - s_[j]);
  }
  auto it = std::lower_bound(u0_.begin(), u0_.end(), t);
  const auto j = static_cast<std::size_t>(std::distance(u0_.begin(), it));
  if (u0_[j] == t || j == 0) return s_[j];
  return s_[j - 1] + (t - u0_[j - 1]) / (u0_[j] - u0_[j - 1]) * (s_[j] - s_[j - 1]);
}

void SpaceTimeControl::validate(double rel_tol) const {
  if (!(b() >= a())) throw ValidationError("u0 must end at b >= a");
  const int l = v_.empty() ? 0 : static_cast<int>(v_.front().size());
  for (int i = 0; i < segments(); ++i) {
    if (u0_[i + 1] < u0_[i]) throw ValidationError("u0 must be nondecreasing (segment " + std::to_string(i) + ")");
    if (v_[i].size() != l) throw ValidationError("v entries differ in dimension");
    const double used = (u0_[i + 1] - u0_[i]) + (u_[i + 1] - u_[i]).norm();
    const double allowed = budget() * ds(i);
    if (used > allowed * (1.0 + rel_tol) + 1e-15) {
      throw ValidationError("slope bound u0' + |u'| <= b - a + K violated on segment " + std::to_string(i));
    }
  }
}

void SpaceTimeControl::validate(const ControlAffineSystem& sys, double rel_tol) const {
  validate(rel_tol);
  if (m() != sys.m()) throw ValidationError("space-time control has wrong m");
  for (const auto& x : u_) {
    if (!sys.U().contains(x, 1e-12)) throw ValidationError("space-time control leaves U");
  }
  for (const auto& x : v_) {
    if (x.size() != sys.l() || !sys.V().contains(x, 1e-12)) throw ValidationError("space-time control leaves V");
  }
}

SpaceTimeControl SpaceTimeControl::with_budget(double K) const {
  SpaceTimeControl out = *this;
  out.K_ = K;
  return out;
}

json SpaceTimeControl::to_json() const {
  json j;
  j["K"] = K_;
  j["nodes"] = s_;
  j["u0"] = u0_;
  json u = json::array(), v = json::array(), bridge = json::array();
  for (const auto& x : u_) u.push_back(vector_to_json(x));
  for (const auto& x : v_) v.push_back(vector_to_json(x));
  for (int i = 0; i < segments(); ++i) bridge.push_back(is_bridge(i));
  j["u"] = u;
  j["v"] = v;
  j["bridge"] = bridge;
  return j;
}

SpaceTimeControl SpaceTimeControl::from_json(const json& j) {
  std::vector<double> s = j.at("nodes").get<std::vector<double>>();
  std::vector<double> u0 = j.at("u0").get<std::vector<double>>();
  std::vector<VectorXd> u, v;
  for (const auto& x : j.at("u")) u.push_back(vector_from_json(x, -1, "u node"));
  if (j.contains("v")) {
    for (const auto& x : j["v"]) v.push_back(x.is_array() && x.empty() ? VectorXd(0) : vector_from_json(x, -1, "v"));
  } else {
    v.assign(s.size() - 1, VectorXd(0));
  }
  SpaceTimeControl out(std::move(s), std::move(u0), std::move(u), std::move(v), j.value("K", 0.0));
  out.validate();
  return out;
}

double total_variation(const ControlSignal& u) {
  double var = 0.0;
  for (const auto& p : u.u_pieces()) var += p.variation();
  for (double t : u.jump_times()) {
    if (t == u.a()) {
      var += (u.u(t) - u.u_right(t)).norm();
    } else {
      var += (u.u(t) - u.u_left(t)).norm();
    }
  }
  return var;
}

namespace {

SpaceTimeControl completion(const ControlSignal& u, bool allow_jumps) {
  if (!allow_jumps && !u.is_ac(1e-12)) throw ValidationError("reparameterize_ac needs an AC control");
  for (const auto& p : u.u_pieces()) {
    if (p.kind == ControlPiece::Kind::Expression) {
      throw ValidationError("space-time reparameterization supports constant and affine pieces only");
    }
  }
  const std::vector<double> bps = u.breakpoints();
  std::vector<double> dt;
  std::vector<VectorXd> du, v;
  auto bridge = [&](const VectorXd& from, const VectorXd& to, VectorXd vv) {
    if (from == to) return;
    dt.push_back(0.0);
    du.push_back(to - from);
    v.push_back(std::move(vv));
  };
  if (allow_jumps && u.initial()) bridge(u.u(u.a()), u.u_right(u.a()), u.v(u.a()));
  for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
    const double t0 = bps[i], t1 = bps[i + 1];
    if (allow_jumps && i > 0) bridge(u.u_left(t0), u.u(t0), u.v(t0));
    const double mid = 0.5 * (t0 + t1);
    const ControlPiece& p = u.u_pieces()[u.piece_index(mid)];
    dt.push_back(t1 - t0);
    du.push_back(p.value(t1) - p.value(t0));
    v.push_back(u.v(mid));
  }
  if (allow_jumps) bridge(u.u_left(u.b()), u.u(u.b()), u.v(u.b()));
  return SpaceTimeControl::from_increments(u.a(), u.u(u.a()), dt, du, std::move(v));
}

}  // namespace

SpaceTimeControl reparameterize_ac(const ControlSignal& u) { return completion(u, false); }

SpaceTimeControl rectilinear_completion(const ControlSignal& u) { return completion(u, true); }

std::size_t SpaceTimeTrajectory::index_of(double s_value) const {
  auto it = std::lower_bound(s.begin(), s.end(), s_value);
  if (it == s.end() || *it != s_value) throw ValidationError("space-time trajectory has no sample at s");
  return static_cast<std::size_t>(std::distance(s.begin(), it));
}

namespace {

OdeRhs segment_rhs(const ControlAffineSystem& sys, const SpaceTimeControl& stc, int i) {
  const int n = sys.n();
  const double sigma = stc.u0_slope(i);
  const VectorXd c = stc.u_slope(i);
  const VectorXd u0 = stc.u()[static_cast<std::size_t>(i)];
  const double s0 = stc.s()[static_cast<std::size_t>(i)];
  const VectorXd v = stc.v()[static_cast<std::size_t>(i)];
  return [&sys, n, sigma, c, u0, s0, v](double s, const VectorXd& y, VectorXd& dy) {
    const VectorXd u = u0 + (s - s0) * c;
    dy.resize(n);
    if (sigma != 0.0) {
      sys.drift(y, u, v, dy);
      dy *= sigma;
    } else {
      dy.setZero();
    }
    VectorXd g(n);
    for (int a = 0; a < c.size(); ++a) {
      if (c[a] == 0.0) continue;
      sys.impulse(a, y, u, g);
      dy += c[a] * g;
    }
  };
}

}  // namespace

SpaceTimeTrajectory solve_spacetime(const ControlAffineSystem& sys, const VectorXd& x0, const SpaceTimeControl& stc,
                                    const std::vector<double>& samples, const OdeOptions& opts) {
  if (x0.size() != sys.n()) throw ValidationError("initial state has wrong size");
  if (stc.m() != sys.m()) throw ValidationError("space-time control has wrong m");
  std::vector<double> grid = merge_grids(stc.s(), samples);
  if (grid.front() < 0.0 || grid.back() > 1.0) throw ValidationError("samples outside [0, 1]");
  SpaceTimeTrajectory out;
  VectorXd y = x0;
  auto record = [&](double s) {
    out.s.push_back(s);
    out.y0.push_back(stc.u0_at(s));
    out.y.push_back(y);
    out.u.push_back(stc.u_at(s));
  };
  record(grid.front());
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const int i = stc.segment_index(0.5 * (grid[k] + grid[k + 1]));
    integrate(segment_rhs(sys, stc, i), y, grid[k], grid[k + 1], opts);
    record(grid[k + 1]);
  }
  return out;
}

VectorXd spacetime_terminal(const ControlAffineSystem& sys, const VectorXd& x0, const SpaceTimeControl& stc,
                            const OdeOptions& opts) {
  if (x0.size() != sys.n()) throw ValidationError("initial state has wrong size");
  VectorXd y = x0;
  for (int i = 0; i < stc.segments(); ++i) {
    integrate(segment_rhs(sys, stc, i), y, stc.s()[static_cast<std::size_t>(i)],
              stc.s()[static_cast<std::size_t>(i) + 1], opts);
  }
  return y;
}

namespace {

bool is_arc_length(const SpaceTimeControl& stc) {
  const double L = stc.b() - stc.a() + stc.variation();
  for (int i = 0; i < stc.segments(); ++i) {
    const double len = (stc.u0()[i + 1] - stc.u0()[i]) + (stc.u()[i + 1] - stc.u()[i]).norm();
    if (std::abs(len - L * stc.ds(i)) > 1e-12 * std::max(1.0, L)) return false;
  }
  return true;
}

SpaceTimeControl to_arc_length(const SpaceTimeControl& stc) {
  std::vector<double> dt;
  std::vector<VectorXd> du;
  for (int i = 0; i < stc.segments(); ++i) {
    dt.push_back(stc.u0()[i + 1] - stc.u0()[i]);
    du.push_back(stc.u()[i + 1] - stc.u()[i]);
  }
  return SpaceTimeControl::from_increments(stc.a(), stc.u().front(), dt, du, stc.v(), stc.K());
}

}  // namespace

SpaceTimeControl raise_min_slope(const SpaceTimeControl& stc, double h) {
  if (!(h > 0.0)) throw ValidationError("min slope must be positive");
  if (stc.min_u0_slope() >= h) return stc;
  const double horizon = stc.b() - stc.a();
  const double L = horizon + stc.variation();
  if (!(h < L)) throw ValidationError("min slope exceeds the path speed");
  std::vector<double> dt, floor;
  std::vector<VectorXd> du;
  double floor_sum = 0.0;
  for (int i = 0; i < stc.segments(); ++i) {
    dt.push_back(stc.u0()[i + 1] - stc.u0()[i]);
    du.push_back(stc.u()[i + 1] - stc.u()[i]);
    floor.push_back(h * du.back().norm() / (L - h));
    floor_sum += floor.back();
  }
  if (floor_sum > horizon) throw ValidationError("min slope too large for the horizon");
  auto total = [&](double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < dt.size(); ++i) s += std::max(lambda * dt[i], floor[i]);
    return s;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (total(mid) > horizon ? hi : lo) = mid;
  }
  std::vector<double> dt_new;
  for (std::size_t i = 0; i < dt.size(); ++i) dt_new.push_back(std::max(lo * dt[i], floor[i]));
  // Close the horizon exactly on the graph part.
  const double excess = horizon - total(lo);
  double graph = 0.0;
  for (std::size_t i = 0; i < dt.size(); ++i) {
    if (lo * dt[i] > floor[i]) graph += dt_new[i];
  }
  if (graph > 0.0) {
    for (std::size_t i = 0; i < dt.size(); ++i) {
      if (lo * dt[i] > floor[i]) dt_new[i] *= 1.0 + excess / graph;
    }
  }
  return SpaceTimeControl::from_increments(stc.a(), stc.u().front(), dt_new, du, stc.v(), stc.K());
}

ConvergenceReport density_study(const ControlAffineSystem& sys, const VectorXd& x0, const SpaceTimeControl& stc_in,
                                const std::vector<double>& h_factors, const OdeOptions& opts, int samples) {
  ConvergenceReport rep;
  rep.study = "density";
  rep.columns = {"h", "sup_dist", "terminal_dist"};
  stc_in.validate();
  SpaceTimeControl stc = stc_in;
  if (!is_arc_length(stc)) {
    stc = to_arc_length(stc);
    rep.notes.push_back("input path renormalized to arc length before perturbation");
  }
  const double horizon = stc.b() - stc.a();
  for (double f : h_factors) {
    const double h = f * horizon;
    const SpaceTimeControl pert = raise_min_slope(stc, h);
    pert.validate(1e-9);
    std::vector<double> grid;
    for (int i = 0; i <= samples; ++i) grid.push_back(static_cast<double>(i) / samples);
    grid = merge_grids(std::move(grid), stc.s());
    grid = merge_grids(std::move(grid), pert.s());
    const SpaceTimeTrajectory y = solve_spacetime(sys, x0, stc, grid, opts);
    const SpaceTimeTrajectory yh = solve_spacetime(sys, x0, pert, grid, opts);
    double sup = 0.0;
    for (std::size_t i = 0; i < y.s.size(); ++i) sup = std::max(sup, (y.y[i] - yh.y[i]).norm());
    rep.rows.push_back({h, sup, (y.y.back() - yh.y.back()).norm()});
  }
  const auto hs = rep.column("h");
  const auto sup = rep.column("sup_dist");
  rep.metrics["loglog_slope"] = loglog_slope(hs, sup);
  rep.metrics["terminal_loglog_slope"] = loglog_slope(hs, rep.column("terminal_dist"));
  rep.metrics["final_sup_dist"] = sup.empty() ? 0.0 : sup.back();
  rep.checks["sup_dist_nonincreasing"] = nonincreasing_with_noise(sup, 0.05, 100.0 * opts.abs_tol);
  return rep;
}

double equivalence_pd_vs_spacetime(const FlowBoxChart& chart, const VectorXd& x0, const ControlSignal& u,
                                   int grid_intervals) {
  const SpaceTimeControl stc = rectilinear_completion(u);
  const Trajectory xpd = pd_solution(chart, x0, u, default_grid(u, grid_intervals));
  std::vector<double> s_right, s_left;
  for (const auto& node : xpd.nodes) {
    s_right.push_back(node.t == u.b() ? 1.0 : stc.s_of_time(node.t, true));
    s_left.push_back(node.t == u.a() ? 0.0 : stc.s_of_time(node.t, false));
  }
  const SpaceTimeTrajectory y =
      solve_spacetime(chart.system(), x0, stc, merge_grids(s_right, s_left), chart.options().ode);
  double dev = 0.0;
  for (std::size_t i = 0; i < xpd.nodes.size(); ++i) {
    const auto& node = xpd.nodes[i];
    const VectorXd& xr = node.t == u.b() ? node.x : node.x_from_right();
    dev = std::max(dev, (xr - y.y[y.index_of(s_right[i])]).norm());
    const VectorXd& xl = node.t == u.a() ? node.x : node.x_from_left();
    dev = std::max(dev, (xl - y.y[y.index_of(s_left[i])]).norm());
  }
  return dev;
}

SpaceTimeControl with_bridge_paths(const SpaceTimeControl& stc, BridgePath kind) {
  if (kind == BridgePath::Affine) return stc;
  std::vector<double> s{0.0}, u0{stc.u0().front()};
  std::vector<VectorXd> u{stc.u().front()}, v;
  for (int i = 0; i < stc.segments(); ++i) {
    const VectorXd& p = stc.u()[static_cast<std::size_t>(i)];
    const VectorXd& q = stc.u()[static_cast<std::size_t>(i) + 1];
    const double s0 = stc.s()[static_cast<std::size_t>(i)];
    const double s1 = stc.s()[static_cast<std::size_t>(i) + 1];
    std::vector<VectorXd> way{p};
    std::vector<double> weight;
    if (!stc.is_bridge(i)) {
      way.push_back(q);
      weight = {1.0};
    } else {
      const VectorXd d = q - p;
      int moving = 0;
      for (int a = 0; a < d.size(); ++a) moving += d[a] != 0.0;
      switch (kind) {
        case BridgePath::TwoSpeed:
          way.push_back(p + 0.25 * d);
          way.push_back(q);
          weight = {0.5, 0.5};
          break;
        case BridgePath::Overshoot:
          way.push_back(q + 0.5 * d);
          way.push_back(q);
          break;
        case BridgePath::Detour:
        case BridgePath::DetourReversed:
          if (moving >= 2) {
            VectorXd cur = p;
            for (int k = 0; k < d.size(); ++k) {
              const int a = kind == BridgePath::Detour ? k : static_cast<int>(d.size()) - 1 - k;
              if (d[a] == 0.0) continue;
              cur[a] = q[a];
              way.push_back(cur);
            }
            way.back() = q;
          } else {
            way.push_back(p - (kind == BridgePath::Detour ? 0.5 : 0.25) * d);
            way.push_back(q);
          }
          break;
        case BridgePath::Affine:
          break;
      }
      if (weight.empty()) {
        for (std::size_t k = 0; k + 1 < way.size(); ++k) weight.push_back((way[k + 1] - way[k]).norm());
      }
    }
    double wsum = 0.0;
    for (double w : weight) wsum += w;
    double acc = 0.0;
    for (std::size_t k = 0; k < weight.size(); ++k) {
      acc += weight[k];
      const double theta = k + 1 == weight.size() ? 1.0 : acc / wsum;
      s.push_back(k + 1 == weight.size() ? s1 : s0 + theta * (s1 - s0));
      u0.push_back(stc.u0()[static_cast<std::size_t>(i)] +
                   theta * (stc.u0()[static_cast<std::size_t>(i) + 1] - stc.u0()[static_cast<std::size_t>(i)]));
      u.push_back(way[k + 1]);
      v.push_back(stc.v()[static_cast<std::size_t>(i)]);
    }
  }
  SpaceTimeControl out(std::move(s), std::move(u0), std::move(u), std::move(v), stc.K());
  const double needed = out.max_speed() - (out.b() - out.a());
  return needed > out.K() ? out.with_budget(needed * (1.0 + 1e-12)) : out;
}

}  // namespace impulse
