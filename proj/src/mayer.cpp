#include "impulse/mayer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "impulse/errors.hpp"
#include "impulse/parallel.hpp"
#include "impulse/rng.hpp"
#include "impulse/solver.hpp"

namespace impulse {

std::string class_name(ControlClass c) {
  switch (c) {
    case ControlClass::AC:
      return "AC";
    case ControlClass::L1:
      return "L1";
    case ControlClass::AC_K:
      return "AC_K";
    case ControlClass::U_K:
      return "U_K";
    case ControlClass::U_K_plus:
      return "U_K_plus";
  }
  return "?";
}

ControlClass parse_class(const std::string& name) {
  for (auto c : {ControlClass::AC, ControlClass::L1, ControlClass::AC_K, ControlClass::U_K, ControlClass::U_K_plus}) {
    if (class_name(c) == name) return c;
  }
  if (name == "BV_K") return ControlClass::U_K;
  if (name == "BV_K_plus") return ControlClass::U_K_plus;
  throw ValidationError("unknown control class \"" + name + "\" (AC, L1, AC_K, U_K, U_K_plus)");
}

MayerProblem::MayerProblem(ControlAffineSystem sys_in, expr::Expr psi_in, VectorXd x0_in, VectorXd u0_in, double a_in,
                           double b_in, ChartOptions chart_opts)
    : sys(std::move(sys_in)),
      chart(sys, std::move(chart_opts)),
      psi(std::move(psi_in)),
      psi_program(psi),
      x0(std::move(x0_in)),
      u0(std::move(u0_in)),
      a(a_in),
      b(b_in) {
  if (x0.size() != sys.n()) throw ValidationError("x0 has wrong dimension");
  if (u0.size() != sys.m()) throw ValidationError("u0 has wrong dimension");
  if (!(a < b)) throw ValidationError("problem horizon needs a < b");
  if (psi.depends_on(expr::VarKind::V) || psi.depends_on(expr::VarKind::T)) {
    throw ValidationError("psi may only depend on x and u");
  }
  if (psi.max_index(expr::VarKind::X) >= sys.n() || psi.max_index(expr::VarKind::U) >= sys.m()) {
    throw ValidationError("psi refers to a variable beyond the system dimensions");
  }
  if (!sys.U().contains(u0, 1e-12)) throw ValidationError("u0 is outside U");
}

double MayerProblem::cost(const VectorXd& x, const VectorXd& u) const {
  expr::Bindings bind;
  bind.x = std::span<const double>(x.data(), static_cast<std::size_t>(x.size()));
  bind.u = std::span<const double>(u.data(), static_cast<std::size_t>(u.size()));
  return psi_program(bind);
}

MayerProblem problem_from_json(const json& j, const std::string& base_dir) {
  ControlAffineSystem sys = [&] {
    if (j.contains("system_dsl")) return parse_system(j["system_dsl"].get<std::string>());
    if (!j.contains("system")) throw ValidationError("problem needs \"system\" or \"system_dsl\"");
    std::filesystem::path p = j["system"].get<std::string>();
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    return load_system(p.string());
  }();
  ChartOptions co;
  if (j.contains("ode_tol")) co.ode.abs_tol = co.ode.rel_tol = j["ode_tol"].get<double>();
  if (j.value("dphi", "fd") == "variational") co.mode = DphiMode::Variational;
  const int n = sys.n(), m = sys.m();
  return MayerProblem(std::move(sys), expr::parse(j.at("psi").get<std::string>()),
                      vector_from_json(j.at("x0"), n, "x0"), vector_from_json(j.at("u0"), m, "u0"), j.value("a", 0.0),
                      j.value("b", 1.0), co);
}

ControlParameterization::ControlParameterization(const MayerProblem& problem, ControlClass cls, double K,
                                                 ParameterizationShape shape)
    : a_(problem.a), b_(problem.b), u0_(problem.u0), cls_(cls), K_(K), shape_(shape) {
  const auto& sys = problem.sys;
  m_ = sys.m();
  l_ = sys.l();
  const auto box = sys.U().box_bounds();
  if (!box) throw ValidationError("control parameterizations need a box impulse domain U");
  ulo_ = box->first;
  uhi_ = box->second;
  if (!ulo_.allFinite() || !uhi_.allFinite()) throw ValidationError("U box must be bounded");
  if (l_ == 0) {
    dv_ = 0;
  } else if (sys.V().kind() == OrdinarySet::Kind::Finite) {
    dv_ = 1;
    v_points_ = sys.V().points();
  } else {
    dv_ = l_;
    vlo_ = sys.V().lo();
    vhi_ = sys.V().hi();
  }
  if (K_ < 0.0) throw ValidationError("K must be nonnegative");
  if (shape_.pieces < 1 || shape_.segments < 1) throw ValidationError("parameterization needs at least one piece");
  const int P = shape_.pieces;
  switch (cls_) {
    case ControlClass::L1:
      dim_ = (P + 1) * m_ + P * dv_;
      break;
    case ControlClass::AC:
    case ControlClass::AC_K:
      dim_ = P * m_ + P * dv_;
      break;
    case ControlClass::U_K:
    case ControlClass::U_K_plus:
      dim_ = shape_.segments * (1 + m_ + dv_);
      break;
  }
}

VectorXd ControlParameterization::decode_u(const double* p) const {
  VectorXd u(m_);
  for (int i = 0; i < m_; ++i) u[i] = ulo_[i] + std::clamp(p[i], 0.0, 1.0) * (uhi_[i] - ulo_[i]);
  return u;
}

VectorXd ControlParameterization::decode_v(const double* p) const {
  if (dv_ == 0) return VectorXd(0);
  if (!v_points_.empty()) {
    const auto count = static_cast<double>(v_points_.size());
    const auto idx = static_cast<std::size_t>(std::min(count - 1.0, std::floor(std::clamp(p[0], 0.0, 1.0) * count)));
    return v_points_[idx];
  }
  VectorXd v(l_);
  for (int k = 0; k < l_; ++k) v[k] = vlo_[k] + std::clamp(p[k], 0.0, 1.0) * (vhi_[k] - vlo_[k]);
  return v;
}

ControlSignal ControlParameterization::decode_signal(const VectorXd& p) const {
  if (uses_spacetime()) throw ValidationError("space-time classes decode to SpaceTimeControl");
  if (p.size() != dim_) throw ValidationError("parameter vector has wrong size");
  const int P = shape_.pieces;
  auto t_at = [&](int i) { return i == P ? b_ : a_ + (b_ - a_) * i / P; };
  const double* vp = p.data() + (cls_ == ControlClass::L1 ? (P + 1) * m_ : P * m_);
  std::vector<VPiece> v;
  if (l_ > 0) {
    for (int i = 0; i < P; ++i) {
      v.push_back({t_at(i), t_at(i + 1), decode_v(vp + i * dv_)});
    }
  }
  std::vector<ControlPiece> pieces;
  if (cls_ == ControlClass::L1) {
    for (int i = 0; i < P; ++i) pieces.push_back(ControlPiece::constant(t_at(i), t_at(i + 1), decode_u(p.data() + i * m_)));
    return ControlSignal(a_, b_, std::move(pieces), decode_u(p.data() + P * m_), std::move(v), u0_);
  }
  std::vector<VectorXd> nodes{u0_};
  for (int i = 0; i < P; ++i) nodes.push_back(decode_u(p.data() + i * m_));
  if (cls_ == ControlClass::AC_K) {
    double var = 0.0;
    for (int i = 0; i < P; ++i) var += (nodes[i + 1] - nodes[i]).norm();
    const double scale = var > K_ ? K_ / var : 1.0;
    for (auto& node : nodes) node = u0_ + scale * (node - u0_);
  }
  for (int i = 0; i < P; ++i) pieces.push_back(ControlPiece::affine(t_at(i), t_at(i + 1), nodes[i], nodes[i + 1]));
  return ControlSignal(a_, b_, std::move(pieces), nodes.back(), std::move(v));
}

SpaceTimeControl ControlParameterization::decode_spacetime(const VectorXd& p) const {
  if (!uses_spacetime()) throw ValidationError("class decodes to ControlSignal");
  if (p.size() != dim_) throw ValidationError("parameter vector has wrong size");
  const int S = shape_.segments;
  const int stride = 1 + m_ + dv_;
  std::vector<double> share(S);
  std::vector<VectorXd> node(S + 1), v(S);
  node[0] = u0_;
  for (int i = 0; i < S; ++i) {
    const double* q = p.data() + i * stride;
    const double x = std::clamp(q[0], 0.0, 1.0);
    share[i] = cls_ == ControlClass::U_K_plus ? shape_.min_share + (1.0 - shape_.min_share) * x : x;
    node[i + 1] = decode_u(q + 1);
    v[i] = decode_v(q + 1 + m_);
  }
  double share_sum = std::accumulate(share.begin(), share.end(), 0.0);
  if (!(share_sum > 0.0)) {
    std::fill(share.begin(), share.end(), 1.0);
    share_sum = S;
  }
  // Shrinking the node path toward u0 keeps it in the box U and brings the variation down to K.
  double var = 0.0;
  for (int i = 0; i < S; ++i) var += (node[i + 1] - node[i]).norm();
  const double scale = var > K_ ? K_ / var : 1.0;
  std::vector<double> dt(S);
  std::vector<VectorXd> du(S);
  for (int i = 0; i < S; ++i) {
    dt[i] = (b_ - a_) * share[i] / share_sum;
    du[i] = scale * (node[i + 1] - node[i]);
  }
  return SpaceTimeControl::from_increments(a_, u0_, dt, du, std::move(v), K_);
}

json ControlParameterization::decode_json(const VectorXd& p) const {
  return uses_spacetime() ? decode_spacetime(p).to_json() : control_to_json(decode_signal(p));
}

Outcome evaluate(const MayerProblem& problem, const ControlParameterization& param, const VectorXd& p) {
  Outcome out;
  try {
    if (param.uses_spacetime()) {
      const SpaceTimeControl stc = param.decode_spacetime(p);
      out.x = spacetime_terminal(problem.sys, problem.x0, stc, problem.chart.options().ode);
      out.u = stc.u().back();
    } else {
      const ControlSignal u = param.decode_signal(p);
      out.x = pd_terminal(problem.chart, problem.x0, u);
      out.u = u.terminal();
    }
    out.value = problem.cost(out.x, out.u);
    out.ok = std::isfinite(out.value);
  } catch (const Error&) {
    out.ok = false;
  }
  if (!out.ok) out.value = INFINITY;
  return out;
}

json ValueReport::to_json() const {
  json j;
  j["class"] = class_name(cls);
  j["K"] = K;
  j["best_value"] = best_value;
  j["recheck_value"] = recheck_value;
  j["terminal_x"] = vector_to_json(terminal_x);
  j["terminal_u"] = vector_to_json(terminal_u);
  j["evals"] = evals;
  j["failures"] = failures;
  j["restarts"] = restarts;
  j["final_step"] = final_step;
  j["seed"] = seed;
  j["best_params"] = vector_to_json(best_params);
  j["best_control"] = best_control;
  return j;
}

std::string ValueReport::trace_csv() const {
  CsvWriter csv({"evals", "incumbent"});
  for (const auto& [e, v] : trace) csv.row(std::vector<std::string>{std::to_string(e), format_double(v)});
  return csv.str();
}

ValueReport estimate_value(const MayerProblem& problem, const ControlParameterization& param, long budget,
                           std::uint64_t seed, const SearchOptions& opts) {
  if (budget < 100) throw ValidationError("search budget must be at least 100 evaluations");
  const int d = param.dim();
  ValueReport rep;
  rep.cls = param.control_class();
  rep.K = param.K();
  rep.seed = seed;

  VectorXd best_p;
  double best = INFINITY;
  auto run_batch = [&](const std::vector<VectorXd>& pts) -> std::vector<Outcome> {
    std::vector<Outcome> res(pts.size());
    parallel_for(pts.size(), opts.threads, [&](std::size_t i) { res[i] = evaluate(problem, param, pts[i]); });
    for (std::size_t i = 0; i < pts.size(); ++i) {
      ++rep.evals;
      if (!res[i].ok) ++rep.failures;
      if (res[i].value < best) {
        best = res[i].value;
        best_p = pts[i];
        rep.trace.emplace_back(rep.evals, best);
      }
    }
    return res;
  };

  // Random phase: the center plus uniform samples.
  const long n_random = std::max<long>(1, static_cast<long>(opts.restart_fraction * static_cast<double>(budget)));
  const RandomStream root(seed, "estimate_value");
  std::vector<VectorXd> starts(static_cast<std::size_t>(n_random));
  for (long i = 0; i < n_random; ++i) {
    VectorXd p(d);
    if (i == 0) {
      p.setConstant(0.5);
    } else {
      RandomStream rs = root.substream(static_cast<std::uint64_t>(i));
      for (int k = 0; k < d; ++k) p[k] = rs.uniform();
    }
    starts[static_cast<std::size_t>(i)] = std::move(p);
  }
  const std::vector<Outcome> start_vals = run_batch(starts);
  std::vector<std::size_t> order(starts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return start_vals[i].value < start_vals[j].value; });

  // Pattern phase: coordinate polls from the best starts, step halved after a failed poll.
  for (std::size_t oi = 0; oi < order.size() && rep.evals < budget; ++oi) {
    if (!start_vals[order[oi]].ok) break;
    VectorXd x = starts[order[oi]];
    double fx = start_vals[order[oi]].value;
    double step = opts.initial_step;
    ++rep.restarts;
    while (step >= opts.min_step && rep.evals < budget) {
      std::vector<VectorXd> poll;
      for (int k = 0; k < d; ++k) {
        for (double sgn : {1.0, -1.0}) {
          VectorXd y = x;
          y[k] = std::clamp(x[k] + sgn * step, 0.0, 1.0);
          if (y[k] != x[k]) poll.push_back(std::move(y));
        }
      }
      const auto room = static_cast<std::size_t>(budget - rep.evals);
      if (poll.size() > room) poll.resize(room);
      if (poll.empty()) break;
      const std::vector<Outcome> vals = run_batch(poll);
      std::size_t arg = 0;
      for (std::size_t i = 1; i < vals.size(); ++i) {
        if (vals[i].value < vals[arg].value) arg = i;
      }
      if (!(vals[arg].value < fx)) {
        step *= 0.5;
        continue;
      }
      // Combine the best improving move of every coordinate, then extrapolate along the accepted move.
      VectorXd combined = x;
      int n_improving = 0;
      for (int k = 0; k < d; ++k) {
        double best_k = fx;
        for (std::size_t i = 0; i < poll.size(); ++i) {
          if (poll[i][k] != x[k] && vals[i].value < best_k) {
            best_k = vals[i].value;
            combined[k] = poll[i][k];
          }
        }
        if (best_k < fx) ++n_improving;
      }
      VectorXd next = poll[arg];
      double f_next = vals[arg].value;
      if (n_improving > 1 && rep.evals < budget) {
        const Outcome oc = run_batch({combined}).front();
        if (oc.value < f_next) {
          next = combined;
          f_next = oc.value;
        }
      }
      VectorXd move = next - x;
      x = std::move(next);
      fx = f_next;
      while (rep.evals < budget) {
        const VectorXd y = (x + move).cwiseMax(0.0).cwiseMin(1.0);
        if (y == x) break;
        const Outcome oy = run_batch({y}).front();
        if (!(oy.value < fx)) break;
        move = y - x;
        x = y;
        fx = oy.value;
      }
    }
    rep.final_step = step;
  }
  if (!std::isfinite(best)) throw Error("estimate_value: every candidate failed to simulate");

  rep.best_value = best;
  rep.best_params = best_p;
  rep.best_control = param.decode_json(best_p);
  const Outcome re = evaluate(problem, param, best_p);
  rep.recheck_value = re.value;
  rep.terminal_x = re.x;
  rep.terminal_u = re.u;
  return rep;
}

json ExtensionReport::to_json() const {
  json j;
  j["V_AC"] = ac.best_value;
  j["V_L1"] = l1.best_value;
  json bvs = json::array();
  for (std::size_t i = 0; i < bv.size(); ++i) bvs.push_back({{"K", K_list[i]}, {"V_BV_K", bv[i].best_value}});
  j["V_BV_K"] = bvs;
  j["tol_value"] = tol_value;
  j["checks"] = {{"ac_equals_l1", ac_equals_l1},
                 {"bv_nonincreasing", bv_nonincreasing},
                 {"bv_limit_matches", bv_limit_matches}};
  j["pass"] = pass();
  j["reports"] = json::array();
  j["reports"].push_back(ac.to_json());
  j["reports"].push_back(l1.to_json());
  for (const auto& r : bv) j["reports"].push_back(r.to_json());
  return j;
}

ExtensionReport proper_extension_check(const MayerProblem& problem, long budget, const std::vector<double>& K_list,
                                       std::uint64_t seed, double tol_value, const SearchOptions& opts,
                                       ParameterizationShape shape) {
  for (std::size_t i = 1; i < K_list.size(); ++i) {
    if (!(K_list[i] > K_list[i - 1])) throw ValidationError("K_list must be increasing");
  }
  ExtensionReport rep;
  rep.K_list = K_list;
  rep.tol_value = tol_value;
  rep.ac = estimate_value(problem, ControlParameterization(problem, ControlClass::AC, 0.0, shape), budget, seed, opts);
  rep.l1 = estimate_value(problem, ControlParameterization(problem, ControlClass::L1, 0.0, shape), budget, seed, opts);
  for (double K : K_list) {
    rep.bv.push_back(
        estimate_value(problem, ControlParameterization(problem, ControlClass::U_K, K, shape), budget, seed, opts));
  }
  rep.ac_equals_l1 = std::abs(rep.ac.best_value - rep.l1.best_value) <= tol_value;
  rep.bv_nonincreasing = true;
  for (std::size_t i = 1; i < rep.bv.size(); ++i) {
    if (rep.bv[i].best_value > rep.bv[i - 1].best_value + tol_value) rep.bv_nonincreasing = false;
  }
  rep.bv_limit_matches = rep.bv.empty() || std::abs(rep.bv.back().best_value - rep.l1.best_value) <= tol_value;
  return rep;
}

std::string Cloud::to_csv() const {
  std::vector<std::string> header;
  for (int i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
  for (int i = 1; i <= m; ++i) header.push_back("u" + std::to_string(i));
  header.push_back("K");
  header.push_back("seed");
  CsvWriter csv(header);
  for (const auto& p : points) {
    std::vector<std::string> cells;
    for (double v : p) cells.push_back(format_double(v));
    cells.push_back(format_double(K));
    cells.push_back(std::to_string(seed));
    csv.row(cells);
  }
  return csv.str();
}

Cloud sample_reachable(const MayerProblem& problem, ControlClass cls, double K, int n_samples, std::uint64_t seed,
                       int threads, ParameterizationShape shape) {
  if (n_samples < 1) throw ValidationError("n_samples must be positive");
  const ControlParameterization param(problem, cls, K, shape);
  const RandomStream root(seed, "sample_reachable/" + class_name(cls));
  std::vector<Outcome> res(static_cast<std::size_t>(n_samples));
  parallel_for(res.size(), threads, [&](std::size_t i) {
    RandomStream rs = root.substream(i);
    VectorXd p(param.dim());
    for (int k = 0; k < p.size(); ++k) p[k] = rs.uniform();
    res[i] = evaluate(problem, param, p);
  });
  Cloud c;
  c.n = problem.sys.n();
  c.m = problem.sys.m();
  c.K = K;
  c.seed = seed;
  for (auto& r : res) {
    if (!r.ok && !(r.x.size() == c.n && r.x.allFinite())) {
      ++c.failures;
      continue;
    }
    VectorXd pt(c.n + c.m);
    pt << r.x, r.u;
    c.points.push_back(std::move(pt));
  }
  return c;
}

std::pair<double, double> hausdorff_distance(const std::vector<VectorXd>& A, const std::vector<VectorXd>& B) {
  if (A.empty() || B.empty()) throw ValidationError("hausdorff_distance needs nonempty clouds");
  auto one_sided = [](const std::vector<VectorXd>& P, const std::vector<VectorXd>& Q) {
    double sup = 0.0;
    for (const auto& p : P) {
      double best = INFINITY;
      for (const auto& q : Q) {
        best = std::min(best, (p - q).squaredNorm());
        if (best <= sup) break;  // cannot raise the sup any more
      }
      sup = std::max(sup, best);
    }
    return std::sqrt(sup);
  };
  return {one_sided(A, B), one_sided(B, A)};
}

NearestNeighborSpacing nearest_neighbor_spacing(const std::vector<VectorXd>& cloud) {
  if (cloud.size() < 2) throw ValidationError("nearest-neighbor spacing needs two points");
  NearestNeighborSpacing out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double best = INFINITY;
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      if (j != i) best = std::min(best, (cloud[i] - cloud[j]).squaredNorm());
    }
    best = std::sqrt(best);
    out.mean += best;
    out.max = std::max(out.max, best);
  }
  out.mean /= static_cast<double>(cloud.size());
  return out;
}

}  // namespace impulse
