#include <cmath>
#include <random>

#include "doctest.h"
#include "impulse/errors.hpp"
#include "impulse/io.hpp"
#include "impulse/solver.hpp"
#include "impulse/spacetime.hpp"

using namespace impulse;

namespace {

VectorXd vec1(double x) { return VectorXd::Constant(1, x); }
VectorXd vec2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

const char* kToy = "n=1;m=1;l=1; f = x1*v1; g1 = x1; U = box(-1,1); V = set{0,1}";
const char* kCommuting = "n=2;m=2;l=0; f = (-x1, x2); g1 = (x1, 0); g2 = (0, x2); U = box((-2,-2),(2,2))";

void check_budget(const SpaceTimeControl& stc) {
  for (int i = 0; i < stc.segments(); ++i) {
    CHECK(stc.u0_slope(i) >= 0.0);
    CHECK(stc.u0_slope(i) + stc.u_slope(i).norm() <= stc.budget() * (1 + 1e-12));
  }
  CHECK(stc.u0().front() == stc.a());
  CHECK(stc.s().front() == 0.0);
  CHECK(stc.s().back() == 1.0);
}

// Piecewise-affine control with random nodes; AC on [0, 1].
ControlSignal random_affine(std::mt19937_64& rng, int pieces, int m, double amp) {
  std::uniform_real_distribution<double> d(-amp, amp);
  std::vector<ControlPiece> ps;
  VectorXd prev(m);
  for (int j = 0; j < m; ++j) prev[j] = d(rng);
  for (int i = 0; i < pieces; ++i) {
    VectorXd next(m);
    for (int j = 0; j < m; ++j) next[j] = d(rng);
    ps.push_back(ControlPiece::affine(double(i) / pieces, double(i + 1) / pieces, prev, next));
    prev = next;
  }
  return ControlSignal(0, 1, ps);
}

}  // namespace

TEST_CASE("total variation examples") {
  CHECK(total_variation(ControlSignal(0, 1, {ControlPiece::constant(0, 1, vec1(0.3))})) == 0.0);
  CHECK(total_variation(step_control(0, 1, 0.5, 0, 1)) == 1.0);
  const ControlSignal ramp_drop(0, 1, {ControlPiece::affine(0, 1, vec1(0), vec1(1))}, vec1(0));
  CHECK(total_variation(ramp_drop) == doctest::Approx(2.0));
  // jump at the initial time counts as well
  const ControlSignal lead(0, 1, {ControlPiece::constant(0, 1, vec1(1))}, std::nullopt, {}, vec1(-0.5));
  CHECK(total_variation(lead) == doctest::Approx(1.5));
  // alternating: 1 + 2 (2k - 1 times) + 1 for the drop to the tail
  CHECK(total_variation(alternating_control(5)) == doctest::Approx(2.0 * 9 + 1));
}

TEST_CASE("reparameterize_ac examples") {
  const auto c = reparameterize_ac(ControlSignal(0, 1, {ControlPiece::constant(0, 1, vec1(0.4))}));
  CHECK(c.K() == 0.0);
  for (double s : {0.0, 0.3, 0.75, 1.0}) {
    CHECK(c.u0_at(s) == doctest::Approx(s));
    CHECK(c.u_at(s)[0] == 0.4);
  }
  const auto id = reparameterize_ac(ControlSignal(0, 1, {ControlPiece::affine(0, 1, vec1(0), vec1(1))}));
  CHECK(id.K() == doctest::Approx(1.0));
  for (double s : {0.0, 0.3, 0.75, 1.0}) {
    CHECK(id.u0_at(s) == doctest::Approx(s));
    CHECK(id.u_at(s)[0] == doctest::Approx(s));
  }
  CHECK(id.in_plus());

  // u = 2t on [0, 1/2), then constant 1: arc lengths 3/2 and 1/2 out of 2
  const ControlSignal pw(0, 1, {ControlPiece::affine(0, 0.5, vec1(0), vec1(1)), ControlPiece::constant(0.5, 1, vec1(1))});
  const auto r = reparameterize_ac(pw);
  CHECK(r.u0_at(0.75) == doctest::Approx(0.5));
  CHECK(r.u_at(0.75)[0] == doctest::Approx(1.0));
  check_budget(r);
}

TEST_CASE("rectilinear completion examples") {
  const auto step = rectilinear_completion(step_control(0, 1, 0.5, 0, 1));
  CHECK(step.K() == 1.0);
  CHECK(step.budget() == 2.0);
  CHECK_FALSE(step.in_plus());
  int bridges = 0;
  for (int i = 0; i < step.segments(); ++i) {
    if (!step.is_bridge(i)) continue;
    ++bridges;
    CHECK(step.u0()[i] == 0.5);
    CHECK(std::abs(step.u()[i + 1][0] - step.u()[i][0]) == 1.0);
  }
  CHECK(bridges == 1);
  check_budget(step);

  const int k_max = 6;
  const auto alt = rectilinear_completion(alternating_control(k_max));
  std::vector<double> sizes;
  for (int i = 0; i < alt.segments(); ++i)
    if (alt.is_bridge(i)) sizes.push_back(std::abs(alt.u()[i + 1][0] - alt.u()[i][0]));
  REQUIRE(sizes.size() == std::size_t(2 * k_max));
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) CHECK(sizes[i] == 2.0);
  CHECK(sizes.back() == 1.0);
  check_budget(alt);

  std::mt19937_64 rng(2);
  const ControlSignal ac = random_affine(rng, 5, 1, 1.0);
  const auto r1 = reparameterize_ac(ac);
  const auto r2 = rectilinear_completion(ac);
  REQUIRE(r1.segments() == r2.segments());
  for (int i = 0; i <= r1.segments(); ++i) {
    CHECK(r1.s()[i] == doctest::Approx(r2.s()[i]));
    CHECK(r1.u0()[i] == doctest::Approx(r2.u0()[i]));
  }
}

TEST_CASE("budget invariant on random constructions") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 1 + trial % 2;
    const ControlSignal ac = random_affine(rng, 1 + trial % 6, m, 1.5);
    check_budget(reparameterize_ac(ac));
    std::vector<double> dt;
    std::vector<VectorXd> du, v;
    for (int i = 0; i < 6; ++i) {
      dt.push_back(d(rng) < 0.3 ? 0.0 : d(rng));
      du.push_back(VectorXd::Random(m));
      v.push_back(VectorXd());
    }
    const auto inc = SpaceTimeControl::from_increments(0.0, VectorXd::Zero(m), dt, du, v);
    check_budget(inc);
    double total = 0;
    for (double x : dt) total += x;
    CHECK(inc.b() == doctest::Approx(total));
    check_budget(raise_min_slope(inc, 0.05 * inc.b()));
    for (auto kind : {BridgePath::TwoSpeed, BridgePath::Overshoot, BridgePath::Detour, BridgePath::DetourReversed})
      check_budget(with_bridge_paths(inc, kind));
  }
}

TEST_CASE("from_increments layout") {
  const auto c = SpaceTimeControl::from_increments(1.0, vec1(0), {1.0, 0.0, 2.0}, {vec1(0), vec1(1), vec1(-1)},
                                                   {vec1(0), vec1(0), vec1(1)});
  // lengths 1, 1, 3 of a total of 5
  REQUIRE(c.segments() == 3);
  CHECK(c.s()[1] == doctest::Approx(0.2));
  CHECK(c.s()[2] == doctest::Approx(0.4));
  CHECK(c.a() == 1.0);
  CHECK(c.b() == 4.0);
  CHECK(c.K() == 2.0);
  CHECK(c.is_bridge(1));
  CHECK(c.u_at(1.0)[0] == 0.0);
  CHECK(c.s_of_time(2.0, false) == doctest::Approx(0.2));
  CHECK(c.s_of_time(2.0, true) == doctest::Approx(0.4));
  CHECK_THROWS_AS(c.with_budget(1.0).validate(), ValidationError);
}

TEST_CASE("raise_min_slope") {
  const auto step = rectilinear_completion(step_control(0, 1, 0.5, 0, 1));
  for (double h : {0.25, 0.05, 0.001}) {
    const auto r = raise_min_slope(step, h);
    CHECK(r.in_plus());
    CHECK(r.min_u0_slope() >= h * (1 - 1e-12));
    CHECK(r.K() == step.K());
    CHECK(r.a() == step.a());
    CHECK(r.b() == doctest::Approx(step.b()));
    CHECK(r.u().back()[0] == step.u().back()[0]);
    r.validate();
  }
  const auto id = reparameterize_ac(ControlSignal(0, 1, {ControlPiece::affine(0, 1, vec1(0), vec1(1))}));
  const auto same = raise_min_slope(id, 0.1);
  CHECK(same.s() == id.s());
  CHECK(same.u0() == id.u0());
}

TEST_CASE("solve_spacetime: translation jumps by the u-jump") {
  const auto sys = parse_system("n=1;m=1;l=0; f = 0; g1 = 1");
  const auto stc = rectilinear_completion(step_control(0, 1, 0.5, 0, 1.75));
  const auto tr = solve_spacetime(sys, vec1(0.2), stc);
  CHECK(tr.y.front()[0] == 0.2);
  CHECK(tr.y.back()[0] == doctest::Approx(1.95).epsilon(1e-12));
  CHECK(tr.y0.back() == doctest::Approx(1.0));
}

TEST_CASE("solve_spacetime: toy completion ends at x0 e^{-1/2}") {
  const auto sys = parse_system(kToy);
  const auto stc = rectilinear_completion(alternating_control(12));
  OdeOptions o;
  o.abs_tol = o.rel_tol = 1e-11;
  const VectorXd y = spacetime_terminal(sys, vec1(1.5), stc, o);
  CHECK(std::abs(y[0] - 1.5 * std::exp(-0.5)) < 1e-8);
}

TEST_CASE("reparameterized AC solution follows the original") {
  const auto sys = parse_system(kToy);
  const ControlSignal u(0, 1, {ControlPiece::affine(0, 0.4, vec1(1), vec1(-0.5)), ControlPiece::affine(0.4, 1, vec1(-0.5), vec1(0.7))},
                        std::nullopt, {{0, 0.5, vec1(1)}, {0.5, 1, vec1(0)}});
  const auto stc = reparameterize_ac(u);
  std::vector<double> ss;
  for (int i = 0; i <= 20; ++i) ss.push_back(i / 20.0);
  const auto y = solve_spacetime(sys, vec1(1.0), stc, ss);
  std::vector<double> ts;
  for (double s : ss) ts.push_back(stc.u0_at(s));
  const Trajectory x = solve_original_ac(sys, vec1(1.0), u, merge_grids(ts, default_grid(u, 10)));
  for (double s : ss) {
    const std::size_t i = y.index_of(s);
    CHECK(std::abs(y.y[i][0] - x.at(stc.u0_at(s)).x[0]) < 1e-8);
  }
}

TEST_CASE("bridge path independence for commuting fields, both orders") {
  const auto sys = parse_system(kCommuting);
  const std::vector<double> dt{0.3, 0.0, 0.4, 0.0, 0.3};
  const std::vector<VectorXd> du{vec2(0.2, 0), vec2(1.0, -0.8), vec2(0, 0.3), vec2(-1.2, 0.5), vec2(0.1, 0.1)};
  const std::vector<VectorXd> v(5, VectorXd());
  const auto stc = SpaceTimeControl::from_increments(0.0, vec2(0, 0), dt, du, v);
  OdeOptions o;
  o.abs_tol = o.rel_tol = 1e-11;
  const VectorXd ref = spacetime_terminal(sys, vec2(1.0, -0.5), stc, o);
  for (auto kind : {BridgePath::TwoSpeed, BridgePath::Overshoot, BridgePath::Detour, BridgePath::DetourReversed}) {
    const VectorXd y = spacetime_terminal(sys, vec2(1.0, -0.5), with_bridge_paths(stc, kind), o);
    CHECK((y - ref).norm() <= 1e-6);
  }
  // x1 = x1(0) exp(-t + u1 - u1(0)), x2 = x2(0) exp(t + u2 - u2(0))
  CHECK(ref[0] == doctest::Approx(1.0 * std::exp(-1.0 + 0.1)).epsilon(1e-9));
  CHECK(ref[1] == doctest::Approx(-0.5 * std::exp(1.0 + 0.1)).epsilon(1e-9));
}

TEST_CASE("density study on an already slow-enough control is zero") {
  const auto sys = parse_system(kToy);
  const ControlSignal u(0, 1, {ControlPiece::constant(0, 1, vec1(0.5))}, std::nullopt, {{0, 1, vec1(1)}});
  const auto stc = reparameterize_ac(u);
  const auto rep = density_study(sys, vec1(1.0), stc, {0.25, 0.125}, {}, 200);
  CHECK(rep.rows.size() == 2);
  for (const auto& row : rep.rows) CHECK(row[1] == 0.0);
}

TEST_CASE("equivalence of the p.d. solution and the completion") {
  const FlowBoxChart chart(parse_system(kToy));
  CHECK(equivalence_pd_vs_spacetime(chart, vec1(1.0), step_control(0, 1, 0.5, 0, 1, vec1(1))) <= 1e-6);
  std::mt19937_64 rng(3);
  const ControlSignal ac = random_affine(rng, 4, 1, 1.0).with_v({{0, 1, vec1(1)}});
  CHECK(equivalence_pd_vs_spacetime(chart, vec1(1.0), ac) <= 1e-8);
}

TEST_CASE("json round trips") {
  const auto stc = rectilinear_completion(alternating_control(3));
  const auto back = SpaceTimeControl::from_json(stc.to_json());
  CHECK(back.s() == stc.s());
  CHECK(back.u0() == stc.u0());
  CHECK(back.K() == stc.K());
  for (int i = 0; i <= stc.segments(); ++i) CHECK(back.u()[i] == stc.u()[i]);

  const ControlSignal u(0, 2,
                        {ControlPiece::affine(0, 0.5, vec1(-1), vec1(1)),
                         ControlPiece::expression(0.5, 1.5, {expr::parse("cos(t)/2")}),
                         ControlPiece::constant(1.5, 2, vec1(0.25))},
                        vec1(-0.75), {{0, 1, vec1(1)}, {1, 2, vec1(0)}}, vec1(0.5));
  const ControlSignal w = control_from_json(control_to_json(u));
  CHECK(control_to_json(w) == control_to_json(u));
  for (double t : {0.0, 0.3, 0.5, 1.2, 1.5, 1.9, 2.0}) {
    CHECK(w.u(t) == u.u(t));
    CHECK(w.v(t) == u.v(t));
  }
  CHECK(w.initial().has_value());
  CHECK_THROWS(control_from_json(json::parse(R"({"a": 0, "b": 1, "u": {"pieces": []}})")));
}
