#include "impulse/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "impulse/errors.hpp"
#include "impulse/io.hpp"

namespace impulse {

std::vector<double> Trajectory::times() const {
  std::vector<double> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.t);
  return out;
}

const TrajectoryNode& Trajectory::at(double t) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), t,
                             [](const TrajectoryNode& n, double s) { return n.t < s; });
  if (it == nodes.end() || it->t != t) throw ValidationError("trajectory has no node at t=" + format_double(t));
  return *it;
}

std::string Trajectory::to_csv() const {
  std::vector<std::string> header{"t"};
  for (int i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
  for (int i = 1; i <= m; ++i) header.push_back("u" + std::to_string(i));
  header.push_back("side");
  CsvWriter csv(header);
  auto emit = [&](double t, const VectorXd& x, const VectorXd& u, const char* side) {
    std::vector<std::string> cells{format_double(t)};
    for (double v : x) cells.push_back(format_double(v));
    for (double v : u) cells.push_back(format_double(v));
    cells.emplace_back(side);
    csv.row(cells);
  };
  for (const auto& node : nodes) {
    if (node.x_left) emit(node.t, *node.x_left, node.u_left ? *node.u_left : node.u, "L");
    emit(node.t, node.x, node.u, "");
    if (node.x_right) emit(node.t, *node.x_right, node.u_right ? *node.u_right : node.u, "R");
  }
  return csv.str();
}

namespace {

void require_same_grid(const Trajectory& a, const Trajectory& b) {
  if (a.nodes.size() != b.nodes.size()) throw ValidationError("trajectories have different grids");
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    if (a.nodes[i].t != b.nodes[i].t) throw ValidationError("trajectories have different grids");
  }
}

}  // namespace

double l1_distance(const Trajectory& a, const Trajectory& b) {
  require_same_grid(a, b);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < a.nodes.size(); ++i) {
    const double dt = a.nodes[i + 1].t - a.nodes[i].t;
    const double left = (a.nodes[i].x_from_right() - b.nodes[i].x_from_right()).norm();
    const double right = (a.nodes[i + 1].x_from_left() - b.nodes[i + 1].x_from_left()).norm();
    total += 0.5 * dt * (left + right);
  }
  return total;
}

double sup_distance(const Trajectory& a, const Trajectory& b) {
  require_same_grid(a, b);
  double out = 0.0;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const auto& p = a.nodes[i];
    const auto& q = b.nodes[i];
    out = std::max(out, (p.x - q.x).norm());
    out = std::max(out, (p.x_from_left() - q.x_from_left()).norm());
    out = std::max(out, (p.x_from_right() - q.x_from_right()).norm());
  }
  return out;
}

double l1_distance(const ControlSignal& u, const ControlSignal& w, int refine) {
  if (u.a() != w.a() || u.b() != w.b() || u.m() != w.m()) throw ValidationError("controls are not comparable");
  std::vector<double> grid = merge_grids(u.breakpoints(), w.breakpoints());
  auto linear = [](const ControlPiece& p) { return p.kind != ControlPiece::Kind::Expression; };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double t0 = grid[i], t1 = grid[i + 1];
    const double mid = 0.5 * (t0 + t1);
    const ControlPiece& pu = u.u_pieces()[u.piece_index(mid)];
    const ControlPiece& pw = w.u_pieces()[w.piece_index(mid)];
    if (u.m() == 1 && linear(pu) && linear(pw)) {
      const double d0 = pu.value(t0)[0] - pw.value(t0)[0];
      const double d1 = pu.value(t1)[0] - pw.value(t1)[0];
      const double dt = t1 - t0;
      if (d0 * d1 >= 0.0) {
        total += 0.5 * dt * (std::abs(d0) + std::abs(d1));
      } else {
        total += 0.5 * dt * (d0 * d0 + d1 * d1) / (std::abs(d0) + std::abs(d1));
      }
      continue;
    }
    const int k = std::max(1, refine);
    for (int j = 0; j < k; ++j) {
      const double s0 = t0 + (t1 - t0) * j / k;
      const double s1 = t0 + (t1 - t0) * (j + 1) / k;
      total += 0.5 * (s1 - s0) * ((pu.value(s0) - pw.value(s0)).norm() + (pu.value(s1) - pw.value(s1)).norm());
    }
  }
  return total;
}

std::vector<double> merge_grids(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

std::vector<double> default_grid(const ControlSignal& u, int n_intervals) {
  std::vector<double> g;
  for (int i = 0; i <= n_intervals; ++i) g.push_back(u.a() + (u.b() - u.a()) * i / n_intervals);
  g.back() = u.b();
  return merge_grids(std::move(g), u.breakpoints());
}

}  // namespace impulse
