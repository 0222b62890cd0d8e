#include "impulse/hjb.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

#include "impulse/errors.hpp"
#include "impulse/parallel.hpp"

namespace impulse {

double pre_hamiltonian(const ControlAffineSystem& sys, double /*t*/, const VectorXd& x, const VectorXd& u,
                       double /*k*/, const CostateVector& p, double w0, const VectorXd& w, const VectorXd& v) {
  if (w0 < 0.0) throw ValidationError("pre_hamiltonian needs w0 >= 0");
  double h = (p.p_t + p.p_x.dot(sys.drift(x, u, v))) * w0;
  for (int a = 0; a < sys.m(); ++a) {
    h += (p.p_x.dot(sys.impulse(a, x, u)) + p.p_u[a]) * w[a] + p.p_k * std::abs(w[a]);
  }
  return h;
}

HamiltonianValue hamiltonian(const ControlAffineSystem& sys, double /*t*/, const VectorXd& x, const VectorXd& u,
                             double /*k*/, const CostateVector& p, int n_v) {
  const int m = sys.m();
  const auto vs = sys.V().discretize(n_v);
  // Impulse terms do not depend on v.
  VectorXd B(m);
  for (int a = 0; a < m; ++a) B[a] = p.p_x.dot(sys.impulse(a, x, u)) + p.p_u[a];

  HamiltonianValue best{0.0, 0.0, VectorXd::Zero(m), vs.front()};
  for (const auto& v : vs) {
    const double A = p.p_t + p.p_x.dot(sys.drift(x, u, v));
    if (A > best.value) best = {A, 1.0, VectorXd::Zero(m), v};
  }
  for (int a = 0; a < m; ++a) {
    for (double sgn : {1.0, -1.0}) {
      const double val = sgn * B[a] + p.p_k;
      if (val > best.value) {
        best.value = val;
        best.w0 = 0.0;
        best.w = VectorXd::Zero(m);
        best.w[a] = sgn;
        best.v = vs.front();
      }
    }
  }
  return best;
}

json GridSpec::to_json() const {
  return {{"x_lo", vector_to_json(x_lo)}, {"x_hi", vector_to_json(x_hi)}, {"x_points", x_points},
          {"u_points", u_points},         {"t_steps", t_steps},           {"n_v", n_v},
          {"tol_sweep", tol_sweep},       {"max_sweeps", max_sweeps}};
}

GridSpec GridSpec::from_json(const json& j, int n) {
  GridSpec g;
  g.x_lo = vector_from_json(j.at("x_lo"), n, "x_lo");
  g.x_hi = vector_from_json(j.at("x_hi"), n, "x_hi");
  g.x_points = j.value("x_points", g.x_points);
  g.u_points = j.value("u_points", g.u_points);
  g.t_steps = j.value("t_steps", g.t_steps);
  g.n_v = j.value("n_v", g.n_v);
  g.tol_sweep = j.value("tol_sweep", g.tol_sweep);
  g.max_sweeps = j.value("max_sweeps", g.max_sweeps);
  return g;
}

namespace {

std::size_t product(const std::vector<Axis>& axes) {
  std::size_t p = 1;
  for (const auto& ax : axes) p *= static_cast<std::size_t>(ax.count);
  return p;
}

// Lower cell index and weight of the upper node; `clamped` is set when q lies outside the axis.
std::pair<int, double> locate(const Axis& ax, double q, bool& clamped) {
  if (ax.count == 1) {
    if (std::abs(q - ax.lo) > 1e-12) clamped = true;
    return {0, 0.0};
  }
  const double tol = 1e-12 * ax.step;
  if (q < ax.lo - tol || q > ax.hi() + tol) clamped = true;
  const double s = std::clamp((q - ax.lo) / ax.step, 0.0, static_cast<double>(ax.count - 1));
  const int i = std::min(static_cast<int>(std::floor(s)), ax.count - 2);
  return {i, s - i};
}

// Multilinear stencil over a tensor of axes (first axis slowest).
struct Stencil {
  std::vector<std::size_t> idx;
  std::vector<double> w;
  bool clamped = false;
};

Stencil make_stencil(const std::vector<Axis>& axes, const VectorXd& q) {
  const int d = static_cast<int>(axes.size());
  std::vector<std::pair<int, double>> cells(static_cast<std::size_t>(d));
  Stencil st;
  for (int i = 0; i < d; ++i) cells[static_cast<std::size_t>(i)] = locate(axes[static_cast<std::size_t>(i)], q[i], st.clamped);
  for (int corner = 0; corner < (1 << d); ++corner) {
    std::size_t flat = 0;
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      const auto& [lo, frac] = cells[static_cast<std::size_t>(i)];
      const bool up = (corner >> (d - 1 - i)) & 1;
      const int node = std::min(lo + (up ? 1 : 0), axes[static_cast<std::size_t>(i)].count - 1);
      w *= up ? frac : 1.0 - frac;
      flat = flat * static_cast<std::size_t>(axes[static_cast<std::size_t>(i)].count) + static_cast<std::size_t>(node);
    }
    if (w != 0.0) {
      st.idx.push_back(flat);
      st.w.push_back(w);
    }
  }
  return st;
}

std::vector<int> unflatten(std::size_t flat, const std::vector<Axis>& axes) {
  std::vector<int> out(axes.size());
  for (std::size_t i = axes.size(); i-- > 0;) {
    out[i] = static_cast<int>(flat % static_cast<std::size_t>(axes[i].count));
    flat /= static_cast<std::size_t>(axes[i].count);
  }
  return out;
}

VectorXd coords(const std::vector<int>& idx, const std::vector<Axis>& axes) {
  VectorXd c(static_cast<Eigen::Index>(axes.size()));
  for (std::size_t i = 0; i < axes.size(); ++i) c[static_cast<Eigen::Index>(i)] = axes[i].node(idx[i]);
  return c;
}

template <class T>
void put(std::ostream& os, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    os.write(bytes, sizeof(T));
  } else {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

template <class T>
T get(std::istream& is) {
  char bytes[sizeof(T)];
  if (!is.read(bytes, sizeof(T))) throw ParseError("truncated value grid", 1, 1);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

std::size_t ValueGrid::slice_size() const { return product(x) * product(u) * static_cast<std::size_t>(k.count); }

std::size_t ValueGrid::index(int ti, const std::vector<int>& xi, const std::vector<int>& ui, int ki) const {
  std::size_t flat = static_cast<std::size_t>(ti);
  for (std::size_t i = 0; i < x.size(); ++i) flat = flat * static_cast<std::size_t>(x[i].count) + static_cast<std::size_t>(xi[i]);
  for (std::size_t i = 0; i < u.size(); ++i) flat = flat * static_cast<std::size_t>(u[i].count) + static_cast<std::size_t>(ui[i]);
  return flat * static_cast<std::size_t>(k.count) + static_cast<std::size_t>(ki);
}

double ValueGrid::at(int ti, const std::vector<int>& xi, const std::vector<int>& ui, int ki) const {
  return values.at(index(ti, xi, ui, ki));
}

double ValueGrid::interpolate(int ti, const VectorXd& xq, const VectorXd& uq, double kq) const {
  if (ti < 0 || ti >= t.count) throw ValidationError("time index out of range");
  std::vector<Axis> axes = x;
  axes.insert(axes.end(), u.begin(), u.end());
  axes.push_back(k);
  VectorXd q(n + m + 1);
  q << xq, uq, kq;
  const Stencil st = make_stencil(axes, q);
  const std::size_t base = static_cast<std::size_t>(ti) * slice_size();
  double val = 0.0;
  for (std::size_t c = 0; c < st.idx.size(); ++c) val += st.w[c] * values[base + st.idx[c]];
  return val;
}

std::string ValueGrid::slice_csv(int ti, int ki) const {
  if (ti < 0 || ti >= t.count || ki < 0 || ki >= k.count) throw ValidationError("slice index out of range");
  std::vector<std::string> header;
  for (int i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
  for (int i = 1; i <= m; ++i) header.push_back("u" + std::to_string(i));
  header.push_back("W");
  CsvWriter csv(header);
  const std::size_t nx = product(x), nu = product(u);
  for (std::size_t xf = 0; xf < nx; ++xf) {
    const auto xi = unflatten(xf, x);
    for (std::size_t uf = 0; uf < nu; ++uf) {
      const auto ui = unflatten(uf, u);
      std::vector<double> row;
      for (std::size_t i = 0; i < x.size(); ++i) row.push_back(x[i].node(xi[i]));
      for (std::size_t i = 0; i < u.size(); ++i) row.push_back(u[i].node(ui[i]));
      row.push_back(at(ti, xi, ui, ki));
      csv.row(row);
    }
  }
  return csv.str();
}

void ValueGrid::write_binary(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write("IMPW", 4);
  put<std::uint32_t>(os, 1);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(n));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(m));
  auto axis = [&](const Axis& ax) {
    put<std::uint64_t>(os, static_cast<std::uint64_t>(ax.count));
    put<double>(os, ax.lo);
    put<double>(os, ax.step);
  };
  axis(t);
  for (const auto& ax : x) axis(ax);
  for (const auto& ax : u) axis(ax);
  axis(k);
  put<std::uint64_t>(os, values.size());
  for (double v : values) put<double>(os, v);
  if (!os) throw Error("failed writing " + path);
}

ValueGrid ValueGrid::read_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "IMPW", 4) != 0) throw ParseError("not a value grid file", 1, 1);
  if (get<std::uint32_t>(is) != 1) throw ParseError("unsupported value grid version", 1, 1);
  ValueGrid g;
  g.n = static_cast<int>(get<std::uint32_t>(is));
  g.m = static_cast<int>(get<std::uint32_t>(is));
  auto axis = [&] {
    Axis ax;
    ax.count = static_cast<int>(get<std::uint64_t>(is));
    ax.lo = get<double>(is);
    ax.step = get<double>(is);
    return ax;
  };
  g.t = axis();
  for (int i = 0; i < g.n; ++i) g.x.push_back(axis());
  for (int i = 0; i < g.m; ++i) g.u.push_back(axis());
  g.k = axis();
  g.K = g.k.hi();
  const auto count = get<std::uint64_t>(is);
  if (count != g.slice_size() * static_cast<std::size_t>(g.t.count)) throw ParseError("value count mismatch", 1, 1);
  g.values.resize(count);
  for (auto& v : g.values) v = get<double>(is);
  return g;
}

ValueGrid solve_w(const MayerProblem& problem, double K, const GridSpec& spec) {
  const auto& sys = problem.sys;
  const int n = sys.n(), m = sys.m();
  if (K < 0.0) throw ValidationError("K must be nonnegative");
  if (spec.x_lo.size() != n || spec.x_hi.size() != n) throw ValidationError("grid x box has wrong dimension");
  if (spec.x_points < 2 || spec.u_points < 2 || spec.t_steps < 1) throw ValidationError("grid too small");
  const auto box = sys.U().box_bounds();
  if (!box || !box->first.allFinite() || !box->second.allFinite()) {
    throw ValidationError("the grid solver needs a bounded box U");
  }

  ValueGrid g;
  g.n = n;
  g.m = m;
  g.K = K;
  g.t = {problem.a, (problem.b - problem.a) / spec.t_steps, spec.t_steps + 1};
  for (int i = 0; i < n; ++i) {
    if (!(spec.x_hi[i] > spec.x_lo[i])) throw ValidationError("grid x box is empty");
    g.x.push_back({spec.x_lo[i], (spec.x_hi[i] - spec.x_lo[i]) / (spec.x_points - 1), spec.x_points});
  }
  const VectorXd range = box->second - box->first;
  const double du = range.maxCoeff() / (spec.u_points - 1);
  if (!(du > 0.0)) throw ValidationError("U box is degenerate");
  for (int i = 0; i < m; ++i) {
    g.u.push_back({box->first[i], du, static_cast<int>(std::floor(range[i] / du + 1e-9)) + 1});
  }
  g.k = {0.0, du, static_cast<int>(std::floor(K / du + 1e-9)) + 1};
  const std::size_t nx = product(g.x), nu = product(g.u), nxu = nx * nu;
  const auto NK = static_cast<std::size_t>(g.k.count);
  const std::size_t slice = nxu * NK;
  if (slice * static_cast<std::size_t>(g.t.count) > 500'000'000) throw ValidationError("grid exceeds 5e8 nodes");
  g.values.assign(slice * static_cast<std::size_t>(g.t.count), 0.0);

  // Departure stencils are time independent: the system is autonomous.
  const auto vs = sys.V().discretize(spec.n_v);
  const double dt = g.t.step;
  std::vector<std::vector<Stencil>> drift(nxu), jump(nxu);
  std::vector<std::vector<long>> jump_target(nxu);
  std::vector<double> terminal(nxu);
  parallel_for(nxu, spec.threads, [&](std::size_t node) {
    const VectorXd xc = coords(unflatten(node / nu, g.x), g.x);
    const auto ui = unflatten(node % nu, g.u);
    const VectorXd uc = coords(ui, g.u);
    terminal[node] = problem.cost(xc, uc);
    for (const auto& v : vs) drift[node].push_back(make_stencil(g.x, xc + dt * sys.drift(xc, uc, v)));
    for (int a = 0; a < m; ++a) {
      for (int sgn : {1, -1}) {
        auto uj = ui;
        uj[static_cast<std::size_t>(a)] += sgn;
        if (uj[static_cast<std::size_t>(a)] < 0 || uj[static_cast<std::size_t>(a)] >= g.u[static_cast<std::size_t>(a)].count) {
          continue;
        }
        std::size_t uflat = 0;
        for (std::size_t i = 0; i < uj.size(); ++i) uflat = uflat * static_cast<std::size_t>(g.u[i].count) + static_cast<std::size_t>(uj[i]);
        jump[node].push_back(make_stencil(g.x, xc + du * sgn * sys.impulse(a, xc, uc)));
        jump_target[node].push_back(static_cast<long>(uflat));
      }
    }
  });
  for (std::size_t node = 0; node < nxu; ++node) {
    for (const auto& st : drift[node]) g.clamped += st.clamped;
    for (const auto& st : jump[node]) g.clamped += st.clamped;
  }

  auto weighted = [&](const double* W, const Stencil& st, std::size_t uflat, std::size_t ki) {
    double val = 0.0;
    for (std::size_t c = 0; c < st.idx.size(); ++c) val += st.w[c] * W[(st.idx[c] * nu + uflat) * NK + ki];
    return val;
  };

  // Relaxation in decreasing k: layer k only reads layer k + dk, so one pass reaches the fixed point
  // and the next pass confirms it.
  auto relax = [&](double* W) {
    std::vector<double> decrease(nxu);
    for (int pass = 1;; ++pass) {
      if (pass > spec.max_sweeps) throw Error("impulse relaxation did not converge");
      double worst = 0.0;
      for (std::size_t ki = NK - 1; ki-- > 0;) {
        parallel_for(nxu, spec.threads, [&](std::size_t node) {
          double best = W[node * NK + ki];
          const double before = best;
          for (std::size_t j = 0; j < jump[node].size(); ++j) {
            best = std::min(best, weighted(W, jump[node][j], static_cast<std::size_t>(jump_target[node][j]), ki + 1));
          }
          W[node * NK + ki] = best;
          decrease[node] = before - best;
        });
        for (double d : decrease) worst = std::max(worst, d);
      }
      g.max_sweeps_used = std::max(g.max_sweeps_used, pass);
      if (worst <= spec.tol_sweep) break;
    }
  };

  double* last = g.values.data() + static_cast<std::size_t>(g.t.count - 1) * slice;
  for (std::size_t node = 0; node < nxu; ++node) {
    std::fill(last + node * NK, last + (node + 1) * NK, terminal[node]);
  }
  relax(last);
  for (int ti = g.t.count - 2; ti >= 0; --ti) {
    double* W = g.values.data() + static_cast<std::size_t>(ti) * slice;
    const double* next = W + slice;
    parallel_for(nxu, spec.threads, [&](std::size_t node) {
      const std::size_t uflat = node % nu;
      for (std::size_t ki = 0; ki < NK; ++ki) {
        double best = INFINITY;
        for (const auto& st : drift[node]) best = std::min(best, weighted(next, st, uflat, ki));
        W[node * NK + ki] = best;
      }
    });
    relax(W);
  }
  for (double v : g.values) {
    if (!std::isfinite(v)) throw Error("value grid contains non-finite values");
  }
  return g;
}

json CrossValidationReport::to_json() const {
  json j;
  j["K"] = K;
  j["V_BV_K"] = v_bv;
  j["tol"] = tol;
  json lv = json::array();
  for (const auto& l : levels) {
    lv.push_back({{"x_points", l.x_points},
                  {"u_points", l.u_points},
                  {"t_steps", l.t_steps},
                  {"W", l.w},
                  {"diff", l.diff},
                  {"clamped", l.clamped}});
  }
  j["levels"] = lv;
  j["shrinking"] = shrinking;
  j["final_diff"] = levels.empty() ? INFINITY : levels.back().diff;
  j["pass"] = pass();
  j["search"] = search.to_json();
  return j;
}

CrossValidationReport crossvalidate_w(const MayerProblem& problem, double K, const GridSpec& finest, long budget,
                                      std::uint64_t seed, int levels, double tol) {
  if (levels < 1) throw ValidationError("need at least one grid level");
  CrossValidationReport rep;
  rep.K = K;
  rep.tol = tol;
  SearchOptions so;
  so.threads = finest.threads;
  rep.search = estimate_value(problem, ControlParameterization(problem, ControlClass::U_K, K), budget, seed, so);
  rep.v_bv = rep.search.best_value;
  for (int j = 0; j < levels; ++j) {
    const int factor = 1 << (levels - 1 - j);
    GridSpec spec = finest;
    spec.x_points = (finest.x_points - 1) / factor + 1;
    spec.u_points = (finest.u_points - 1) / factor + 1;
    spec.t_steps = (finest.t_steps + factor - 1) / factor;
    const auto start = std::chrono::steady_clock::now();
    const ValueGrid g = solve_w(problem, K, spec);
    CrossValidationLevel lv;
    lv.x_points = spec.x_points;
    lv.u_points = spec.u_points;
    lv.t_steps = spec.t_steps;
    lv.w = g.interpolate(0, problem.x0, problem.u0, 0.0);
    lv.diff = std::abs(lv.w - rep.v_bv);
    lv.clamped = g.clamped;
    lv.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep.levels.push_back(lv);
  }
  rep.shrinking = true;
  for (std::size_t j = 1; j < rep.levels.size(); ++j) {
    if (!(rep.levels[j].diff < rep.levels[j - 1].diff) && rep.levels[j].diff > 1e-12) rep.shrinking = false;
  }
  return rep;
}

}  // namespace impulse
