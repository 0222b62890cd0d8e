#include "impulse/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "impulse/errors.hpp"
#include "impulse/hjb.hpp"
#include "impulse/io.hpp"
#include "impulse/mayer.hpp"
#include "impulse/parallel.hpp"
#include "impulse/solver.hpp"
#include "impulse/spacetime.hpp"
#include "impulse/system.hpp"

#ifndef IMPULSE_VERSION
#define IMPULSE_VERSION "0.0.0"
#endif

namespace impulse {
namespace {

namespace fs = std::filesystem;

// Failed study contract or hypothesis check: exit 1 without an error message.
struct CheckFailed {};

struct Globals {
  std::uint64_t seed = 1;
  double ode_tol = 1e-10;
  std::string out_dir = ".";
  int threads = 0;
};

/// Written next to the outputs of every run.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json tolerances = json::object();
  std::uint64_t seed = 0;
  int threads = 1;
  double wall_clock = 0.0;
  int exit_code = 0;

  json to_json() const {
    return {{"command", command},       {"args", args},       {"inputs", inputs},
            {"outputs", outputs},       {"seed", seed},       {"version", IMPULSE_VERSION},
            {"tolerances", tolerances}, {"threads", threads}, {"wall_clock_seconds", wall_clock},
            {"exit_code", exit_code}};
  }
};

VectorXd parse_list(const std::string& text, int dim, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(what + ": cannot read number '" + item + "'");
    }
  }
  if (dim == 1 && vals.empty()) throw ValidationError(what + " is empty");
  if (dim >= 0 && static_cast<int>(vals.size()) == 1 && dim > 1) vals.assign(static_cast<std::size_t>(dim), vals[0]);
  if (dim >= 0 && static_cast<int>(vals.size()) != dim) {
    throw ValidationError(what + " needs " + std::to_string(dim) + " entries");
  }
  return Eigen::Map<VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  const VectorXd v = parse_list(text, -1, what);
  return {v.data(), v.data() + v.size()};
}

class Session {
 public:
  Session(Globals g, std::ostream& out) : g_(std::move(g)), out_(out) {
    threads_ = resolve_threads(g_.threads);
    fs::create_directories(g_.out_dir);
    manifest_.seed = g_.seed;
    manifest_.threads = threads_;
    manifest_.tolerances["ode_tol"] = g_.ode_tol;
  }

  OdeOptions ode() const {
    OdeOptions o;
    o.abs_tol = o.rel_tol = g_.ode_tol;
    return o;
  }
  ChartOptions chart_options() const {
    ChartOptions c;
    c.ode = ode();
    return c;
  }
  int threads() const { return threads_; }
  std::uint64_t seed() const { return g_.seed; }
  RunManifest& manifest() { return manifest_; }
  std::ostream& out() { return out_; }

  void input(const std::string& path) { manifest_.inputs.push_back(path); }
  void write(const std::string& name, const std::string& text) {
    const std::string path = (fs::path(g_.out_dir) / name).string();
    write_text(path, text);
    manifest_.outputs.push_back(path);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
  std::string path_of(const std::string& name) {
    const std::string path = (fs::path(g_.out_dir) / name).string();
    manifest_.outputs.push_back(path);
    return path;
  }
  void finish(int code, double seconds) {
    manifest_.exit_code = code;
    manifest_.wall_clock = seconds;
    write_text((fs::path(g_.out_dir) / (manifest_.command + "_manifest.json")).string(),
               manifest_.to_json().dump(2) + "\n");
  }

 private:
  Globals g_;
  std::ostream& out_;
  int threads_ = 1;
  RunManifest manifest_;
};

// ---- check ----

struct CheckArgs {
  std::string system;
  std::string lo, hi;
  int samples = 200;
  double tol_bracket = 1e-6;
};

void cmd_check(Session& s, const CheckArgs& a) {
  s.input(a.system);
  const ControlAffineSystem sys = load_system(a.system);
  const int d = sys.n() + sys.m();
  const VectorXd lo = a.lo.empty() ? VectorXd::Constant(d, -2.0) : parse_list(a.lo, d, "--lo");
  const VectorXd hi = a.hi.empty() ? VectorXd::Constant(d, 2.0) : parse_list(a.hi, d, "--hi");
  s.manifest().tolerances["tol_bracket_scale"] = a.tol_bracket;
  const HypothesisReport rep = check_hypotheses(sys, lo, hi, a.samples, a.tol_bracket);
  json j;
  j["system"] = a.system;
  j["n"] = sys.n();
  j["m"] = sys.m();
  j["l"] = sys.l();
  j["max_bracket_norm"] = rep.max_bracket_norm;
  if (rep.worst) {
    j["worst_bracket"] = {{"alpha", rep.worst->alpha + 1},
                          {"beta", rep.worst->beta + 1},
                          {"point", vector_to_json(rep.worst->point)},
                          {"norm", rep.worst->norm}};
  }
  j["growth_M"] = rep.growth_m;
  j["growth_N"] = rep.growth_n;
  j["lipschitz_estimate"] = rep.lipschitz_estimate;
  j["checks"] = {{"commutativity", rep.pass_commutativity},
                 {"growth", rep.pass_growth},
                 {"V_compact", rep.pass_v_compact},
                 {"U_impulse_domain", rep.pass_u_impulse_domain}};
  j["pass"] = rep.pass();
  s.write_json("check.json", j);
  auto mark = [](bool ok) { return ok ? "ok" : "FAILED"; };
  s.out() << "system " << a.system << ": n=" << sys.n() << " m=" << sys.m() << " l=" << sys.l() << "\n"
          << "  commutativity  " << mark(rep.pass_commutativity) << " (max bracket " << rep.max_bracket_norm
          << ")\n";
  if (!rep.pass_commutativity && rep.worst) {
    s.out() << "    [g" << rep.worst->alpha + 1 << ", g" << rep.worst->beta + 1 << "] = " << rep.worst->norm
            << " at (";
    for (Eigen::Index i = 0; i < rep.worst->point.size(); ++i) {
      s.out() << (i ? ", " : "") << format_double(rep.worst->point[i]);
    }
    s.out() << ")\n";
  }
  s.out() << "  growth         " << mark(rep.pass_growth) << "\n"
          << "  V compact      " << mark(rep.pass_v_compact) << "\n"
          << "  U domain       " << mark(rep.pass_u_impulse_domain) << "\n";
  if (!rep.pass()) throw CheckFailed{};
}

// ---- simulate ----

struct SimulateArgs {
  std::string system, control, x0;
  std::string method = "pd";
  int intervals = 200;
};

void cmd_simulate(Session& s, const SimulateArgs& a) {
  s.input(a.system);
  s.input(a.control);
  const ControlAffineSystem sys = load_system(a.system);
  const ControlSignal u = load_control(a.control);
  const VectorXd x0 = parse_list(a.x0, sys.n(), "--x0");
  const auto grid = default_grid(u, a.intervals);
  Trajectory tr;
  if (a.method == "pd") {
    tr = pd_solution(FlowBoxChart(sys, s.chart_options()), x0, u, grid);
  } else {
    u.validate(sys);
    tr = solve_original_ac(sys, x0, u, grid, s.ode());
  }
  s.write("trajectory.csv", tr.to_csv());
  s.out() << "x(b) =";
  for (Eigen::Index i = 0; i < tr.back().x.size(); ++i) s.out() << " " << format_double(tr.back().x[i]);
  s.out() << "\n";
}

// ---- study ----

struct StudyArgs {
  std::string kind;
  std::string system, control, x0;
  double t_star = NAN;
  int k_max = 8;
  int h_exp = 10;
  int samples = 2000;
  double tol = 1e-6;
  double r = 1.0;
  std::string lo, hi;
  int pairs = 50;
};

void emit_report(Session& s, const ConvergenceReport& rep) {
  s.write(rep.study + ".csv", rep.to_csv());
  s.write_json(rep.study + ".json", rep.to_json());
  s.out() << rep.study << ":\n";
  for (const auto& [k, v] : rep.metrics) s.out() << "  " << k << " = " << format_double(v) << "\n";
  for (const auto& [k, v] : rep.checks) s.out() << "  " << k << ": " << (v ? "ok" : "FAILED") << "\n";
  if (!rep.pass()) throw CheckFailed{};
}

void cmd_study(Session& s, const StudyArgs& a) {
  s.input(a.system);
  const ControlAffineSystem sys = load_system(a.system);
  const FlowBoxChart chart(sys, s.chart_options());
  const VectorXd x0 = parse_list(a.x0, sys.n(), "--x0");
  if (a.kind == "lipschitz") {
    std::vector<VPiece> v;
    double ta = 0.0, tb = 1.0;
    if (!a.control.empty()) {
      s.input(a.control);
      const ControlSignal u = load_control(a.control);
      v = u.v_pieces();
      ta = u.a();
      tb = u.b();
    }
    const auto box = sys.U().box_bounds();
    const int m = sys.m();
    VectorXd lo = VectorXd::Constant(m, -1.0), hi = VectorXd::Constant(m, 1.0);
    if (box) {
      lo = lo.cwiseMax(box->first);
      hi = hi.cwiseMin(box->second);
    }
    if (!a.lo.empty()) lo = parse_list(a.lo, m, "--lo");
    if (!a.hi.empty()) hi = parse_list(a.hi, m, "--hi");
    const auto res = lipschitz_dependence_probe(chart, a.r, lo, hi, a.pairs, v, s.seed(), ta, tb, 4, s.threads());
    const json j = {{"study", "lipschitz"}, {"r", a.r},         {"pairs", a.pairs},
                    {"max_ratio", res.max_ratio}, {"evaluated", res.evaluated}, {"skipped", res.skipped},
                    {"failed", res.failed}};
    s.write_json("lipschitz.json", j);
    s.out() << "lipschitz: max ratio " << format_double(res.max_ratio) << " over " << res.evaluated << " pairs\n";
    if (!std::isfinite(res.max_ratio) || res.evaluated == 0) throw CheckFailed{};
    return;
  }
  if (a.control.empty()) throw ValidationError("study " + a.kind + " needs --control");
  s.input(a.control);
  const ControlSignal u = load_control(a.control);
  if (a.kind == "pdlimit") {
    std::vector<int> ks;
    for (int k = 1; k <= a.k_max; ++k) ks.push_back(k);
    const double t_star = std::isnan(a.t_star) ? u.b() : a.t_star;
    emit_report(s, pd_limit_study(chart, x0, u, t_star, ks));
  } else if (a.kind == "density") {
    std::vector<double> h;
    for (int e = 1; e <= a.h_exp; ++e) h.push_back(std::ldexp(1.0, -e));
    emit_report(s, density_study(sys, x0, rectilinear_completion(u), h, s.ode(), a.samples));
  } else if (a.kind == "equivalence") {
    s.manifest().tolerances["tol_equiv"] = a.tol;
    const double dev = equivalence_pd_vs_spacetime(chart, x0, u);
    const json j = {{"study", "equivalence"}, {"deviation", dev}, {"tol", a.tol}, {"pass", dev <= a.tol}};
    s.write_json("equivalence.json", j);
    s.out() << "equivalence: deviation " << format_double(dev) << (dev <= a.tol ? " ok" : " FAILED") << "\n";
    if (!(dev <= a.tol)) throw CheckFailed{};
  } else {
    throw ValidationError("unknown study '" + a.kind + "' (pdlimit, density, equivalence, lipschitz)");
  }
}

// ---- problem-based commands ----

MayerProblem load_problem(Session& s, const std::string& path, json& doc) {
  s.input(path);
  doc = load_json(path);
  if (!doc.contains("ode_tol")) doc["ode_tol"] = s.chart_options().ode.abs_tol;
  return problem_from_json(doc, fs::path(path).parent_path().string());
}

struct OptimizeArgs {
  std::string problem;
  std::string cls;
  double K = NAN;
  long budget = 0;
  bool extension = false;
  std::string K_list;
  double tol_value = 1e-3;
};

void cmd_optimize(Session& s, const OptimizeArgs& a) {
  json doc;
  const MayerProblem pr = load_problem(s, a.problem, doc);
  const long budget = a.budget > 0 ? a.budget : doc.value("budget", 10000L);
  SearchOptions so;
  so.threads = s.threads();
  ParameterizationShape shape;
  shape.pieces = doc.value("pieces", shape.pieces);
  shape.segments = doc.value("segments", shape.segments);
  s.manifest().tolerances["budget"] = budget;
  if (a.extension) {
    std::vector<double> K_list = !a.K_list.empty() ? parse_doubles(a.K_list, "--K-list")
                                 : doc.contains("K_list") ? doc["K_list"].get<std::vector<double>>()
                                                          : std::vector<double>{0.5, 1, 2, 4};
    s.manifest().tolerances["tol_value"] = a.tol_value;
    const ExtensionReport rep = proper_extension_check(pr, budget, K_list, s.seed(), a.tol_value, so, shape);
    s.write_json("extension.json", rep.to_json());
    CsvWriter csv({"class", "K", "value"});
    csv.row(std::vector<std::string>{"AC", "", format_double(rep.ac.best_value)});
    csv.row(std::vector<std::string>{"L1", "", format_double(rep.l1.best_value)});
    for (std::size_t i = 0; i < rep.bv.size(); ++i) {
      csv.row(std::vector<std::string>{"BV_K", format_double(K_list[i]), format_double(rep.bv[i].best_value)});
    }
    s.write("values.csv", csv.str());
    s.out() << "V_AC   = " << format_double(rep.ac.best_value) << "\n"
            << "V_L1   = " << format_double(rep.l1.best_value) << "\n";
    for (std::size_t i = 0; i < rep.bv.size(); ++i) {
      s.out() << "V_BV_K = " << format_double(rep.bv[i].best_value) << "  (K = " << format_double(K_list[i])
              << ")\n";
    }
    s.out() << "AC = L1: " << (rep.ac_equals_l1 ? "ok" : "FAILED")
            << "  nonincreasing in K: " << (rep.bv_nonincreasing ? "ok" : "FAILED")
            << "  limit matches L1: " << (rep.bv_limit_matches ? "ok" : "FAILED") << "\n";
    if (!rep.pass()) throw CheckFailed{};
    return;
  }
  const ControlClass cls = parse_class(!a.cls.empty() ? a.cls : doc.value("class", std::string("L1")));
  const double K = !std::isnan(a.K) ? a.K : doc.value("K", 0.0);
  const ValueReport rep = estimate_value(pr, ControlParameterization(pr, cls, K, shape), budget, s.seed(), so);
  s.write_json("value.json", rep.to_json());
  s.write("trace.csv", rep.trace_csv());
  s.out() << class_name(cls) << (rep.cls == ControlClass::L1 || rep.cls == ControlClass::AC ? "" : " K=" + format_double(K))
          << ": best value " << format_double(rep.best_value) << " after " << rep.evals << " evaluations ("
          << rep.failures << " failed)\n";
}

struct HjbArgs {
  std::string problem;
  double K = NAN;
  std::string x_lo, x_hi;
  int x_points = 41, u_points = 41, t_steps = 50, n_v = 5, levels = 3;
  long budget = 0;
  int slice_t = 0, slice_k = 0;
  double tol = 5e-2;
};

void cmd_hjb(Session& s, const HjbArgs& a) {
  json doc;
  const MayerProblem pr = load_problem(s, a.problem, doc);
  const int n = pr.sys.n();
  const double K = !std::isnan(a.K) ? a.K : doc.value("K", 2.0);
  GridSpec spec = doc.contains("grid") ? GridSpec::from_json(doc["grid"], n) : GridSpec{};
  if (!a.x_lo.empty()) spec.x_lo = parse_list(a.x_lo, n, "--x-lo");
  if (!a.x_hi.empty()) spec.x_hi = parse_list(a.x_hi, n, "--x-hi");
  if (spec.x_lo.size() != n || spec.x_hi.size() != n) throw ValidationError("hjb needs --x-lo and --x-hi");
  spec.x_points = a.x_points;
  spec.u_points = a.u_points;
  spec.t_steps = a.t_steps;
  spec.n_v = a.n_v;
  spec.threads = s.threads();
  s.manifest().tolerances["tol_sweep"] = spec.tol_sweep;
  s.manifest().tolerances["tol_crossvalidation"] = a.tol;
  const ValueGrid g = solve_w(pr, K, spec);
  g.write_binary(s.path_of("W.bin"));
  s.write("W_slice.csv", g.slice_csv(std::clamp(a.slice_t, 0, g.t.count - 1), std::clamp(a.slice_k, 0, g.k.count - 1)));
  const long budget = a.budget > 0 ? a.budget : doc.value("budget", 10000L);
  const CrossValidationReport rep = crossvalidate_w(pr, K, spec, budget, s.seed(), a.levels, a.tol);
  json j = rep.to_json();
  j["grid"] = spec.to_json();
  s.write_json("crossval.json", j);
  s.out() << "W_K(a, x0, u0, 0) = " << format_double(g.interpolate(0, pr.x0, pr.u0, 0.0)) << "  V_BV_K = "
          << format_double(rep.v_bv) << "\n";
  for (const auto& lv : rep.levels) {
    s.out() << "  grid " << lv.x_points << "x" << lv.u_points << ", " << lv.t_steps << " steps: |W - V| = "
            << format_double(lv.diff) << "\n";
  }
  s.out() << "  refinement " << (rep.pass() ? "ok" : "FAILED") << "\n";
  if (!rep.pass()) throw CheckFailed{};
}

struct ReachArgs {
  std::string problem;
  std::string classes = "L1,AC";
  double K = NAN;
  int n = 1000;
};

void cmd_reach(Session& s, const ReachArgs& a) {
  json doc;
  const MayerProblem pr = load_problem(s, a.problem, doc);
  const double K = !std::isnan(a.K) ? a.K : doc.value("K", 2.0);
  std::vector<ControlClass> classes;
  std::stringstream ss(a.classes);
  std::string item;
  while (std::getline(ss, item, ',')) classes.push_back(parse_class(item));
  std::vector<Cloud> clouds;
  for (auto c : classes) {
    clouds.push_back(sample_reachable(pr, c, K, a.n, s.seed(), s.threads()));
    if (clouds.back().points.empty()) throw Error("empty cloud for class " + class_name(c));
    s.write("cloud_" + class_name(c) + ".csv", clouds.back().to_csv());
  }
  CsvWriter csv({"from", "to", "distance"});
  json table = json::array();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    for (std::size_t j = 0; j < classes.size(); ++j) {
      if (i == j) continue;
      const double d = hausdorff_distance(clouds[i].points, clouds[j].points).first;
      csv.row(std::vector<std::string>{class_name(classes[i]), class_name(classes[j]), format_double(d)});
      table.push_back({{"from", class_name(classes[i])}, {"to", class_name(classes[j])}, {"distance", d}});
      s.out() << "d(" << class_name(classes[i]) << " -> " << class_name(classes[j]) << ") = " << format_double(d)
              << "\n";
    }
  }
  json spacing = json::object();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (clouds[i].points.size() < 2) continue;
    const auto nn = nearest_neighbor_spacing(clouds[i].points);
    spacing[class_name(classes[i])] = {{"mean", nn.mean}, {"max", nn.max}};
  }
  s.write("hausdorff.csv", csv.str());
  s.write_json("reach.json", {{"K", K}, {"n", a.n}, {"distances", table}, {"nearest_neighbor_spacing", spacing}});
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Impulsive control systems: p.d. solutions, graph completions, Mayer problems, HJB grids", "impulse"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--ode-tol", g.ode_tol, "Absolute and relative ODE tolerance")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (default: $IMPULSE_THREADS or 1)");

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "Audit the standing hypotheses of a system file");
  check->add_option("system", ca.system, "System DSL file")->required();
  check->add_option("--lo", ca.lo, "Sample box lower corner in (x, u), comma separated");
  check->add_option("--hi", ca.hi, "Sample box upper corner in (x, u)");
  check->add_option("--samples", ca.samples)->capture_default_str();
  check->add_option("--tol-bracket", ca.tol_bracket)->capture_default_str();

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Trajectory of a control as CSV");
  sim->add_option("system", sa.system)->required();
  sim->add_option("control", sa.control)->required();
  sim->add_option("--x0", sa.x0, "Initial state")->required();
  sim->add_option("--method", sa.method)->check(CLI::IsMember({"pd", "direct"}))->capture_default_str();
  sim->add_option("--intervals", sa.intervals)->capture_default_str();

  StudyArgs st;
  auto* study = app.add_subcommand("study", "Convergence studies");
  study->add_option("kind", st.kind)->required()->check(CLI::IsMember({"pdlimit", "density", "equivalence", "lipschitz"}));
  study->add_option("--system", st.system)->required();
  study->add_option("--control", st.control);
  study->add_option("--x0", st.x0)->required();
  study->add_option("--t-star", st.t_star, "pdlimit: comparison time (default b)");
  study->add_option("--k-max", st.k_max)->capture_default_str();
  study->add_option("--h-exp", st.h_exp, "density: h = 2^-1 .. 2^-h_exp")->capture_default_str();
  study->add_option("--samples", st.samples)->capture_default_str();
  study->add_option("--tol", st.tol, "equivalence tolerance")->capture_default_str();
  study->add_option("--r", st.r)->capture_default_str();
  study->add_option("--lo", st.lo);
  study->add_option("--hi", st.hi);
  study->add_option("--pairs", st.pairs)->capture_default_str();

  OptimizeArgs oa;
  auto* opt = app.add_subcommand("optimize", "Estimate a Mayer value");
  opt->add_option("problem", oa.problem)->required();
  opt->add_option("--class", oa.cls, "AC, L1, AC_K, U_K, U_K_plus");
  opt->add_option("--K", oa.K);
  opt->add_option("--budget", oa.budget);
  opt->add_flag("--extension", oa.extension, "Compare AC, L1 and U_K over a K list");
  opt->add_option("--K-list", oa.K_list);
  opt->add_option("--tol-value", oa.tol_value)->capture_default_str();

  HjbArgs ha;
  auto* hjb = app.add_subcommand("hjb", "Grid value function and cross-validation");
  hjb->add_option("problem", ha.problem)->required();
  hjb->add_option("--K", ha.K);
  hjb->add_option("--x-lo", ha.x_lo);
  hjb->add_option("--x-hi", ha.x_hi);
  hjb->add_option("--x-points", ha.x_points)->capture_default_str();
  hjb->add_option("--u-points", ha.u_points)->capture_default_str();
  hjb->add_option("--t-steps", ha.t_steps)->capture_default_str();
  hjb->add_option("--n-v", ha.n_v)->capture_default_str();
  hjb->add_option("--levels", ha.levels)->capture_default_str();
  hjb->add_option("--budget", ha.budget, "Search budget (default: problem file, else 10000)");
  hjb->add_option("--slice-t", ha.slice_t, "Time index of the exported slice")->capture_default_str();
  hjb->add_option("--slice-k", ha.slice_k, "Budget index of the exported slice")->capture_default_str();
  hjb->add_option("--tol", ha.tol)->capture_default_str();

  ReachArgs ra;
  auto* reach = app.add_subcommand("reach", "Reachable-set clouds and Hausdorff distances");
  reach->add_option("problem", ra.problem)->required();
  reach->add_option("--classes", ra.classes)->capture_default_str();
  reach->add_option("--K", ra.K);
  reach->add_option("--n", ra.n)->capture_default_str();

  std::string replay_path, replay_out;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", replay_path)->required();
  replay->add_option("--to", replay_out, "Write outputs here instead of the recorded directory");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  if (replay->parsed()) {
    try {
      const json m = load_json(replay_path);
      std::vector<std::string> again = m.at("args").get<std::vector<std::string>>();
      if (!replay_out.empty()) {
        std::vector<std::string> filtered;
        for (std::size_t i = 0; i < again.size(); ++i) {
          if (again[i] == "--out-dir") {
            ++i;
          } else if (again[i].rfind("--out-dir=", 0) != 0) {
            filtered.push_back(again[i]);
          }
        }
        filtered.insert(filtered.begin(), {"--out-dir", replay_out});
        again = std::move(filtered);
      }
      return run_cli(again, out, err);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
  }

  const auto start = std::chrono::steady_clock::now();
  std::unique_ptr<Session> session;
  int code = 0;
  try {
    session = std::make_unique<Session>(g, out);
    session->manifest().args = args;
    auto& s = *session;
    if (check->parsed()) {
      s.manifest().command = "check";
      cmd_check(s, ca);
    } else if (sim->parsed()) {
      s.manifest().command = "simulate";
      cmd_simulate(s, sa);
    } else if (study->parsed()) {
      s.manifest().command = "study_" + st.kind;
      cmd_study(s, st);
    } else if (opt->parsed()) {
      s.manifest().command = "optimize";
      cmd_optimize(s, oa);
    } else if (hjb->parsed()) {
      s.manifest().command = "hjb";
      cmd_hjb(s, ha);
    } else if (reach->parsed()) {
      s.manifest().command = "reach";
      cmd_reach(s, ra);
    }
  } catch (const CheckFailed&) {
    code = 1;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    code = 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    code = 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    code = 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    code = 1;
  }
  if (session) {
    try {
      session->finish(code, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    } catch (const std::exception& e) {
      err << "error: cannot write manifest: " << e.what() << "\n";
      if (code == 0) code = 1;
    }
  }
  return code;
}

}  // namespace impulse
