#include <chrono>
#include <cmath>

#include "doctest.h"
#include "impulse/errors.hpp"
#include "impulse/solver.hpp"

using namespace impulse;

namespace {

VectorXd vec1(double x) { return VectorXd::Constant(1, x); }

const char* kToy = "n=1;m=1;l=1; f = x1*v1; g1 = x1; U = box(-1,1); V = set{0,1}";

// Closed form of the alternating example (x0 scaled).
double toy_closed_form(double x0, double t, int k_max) {
  if (t < 0.5) return x0 * std::exp(t);
  if (t == 1.0) return x0 * std::exp(-0.5);
  const int count = 2 * k_max;
  if (t >= 1.0 - 1.0 / (count + 1)) return x0 * std::exp(-0.5);  // truncated tail, u = 0
  const int k = static_cast<int>(std::floor(1.0 / (1.0 - t) + 1e-9));  // t in [1-1/k, 1-1/(k+1))
  return k % 2 == 0 ? x0 * std::exp(0.5) * std::exp(-2.0) : x0 * std::exp(0.5);
}

}  // namespace

TEST_CASE("alternating control structure") {
  const ControlSignal u = alternating_control(12);
  CHECK(u.u_pieces().size() == 25);
  CHECK(u.u(0.0)[0] == 1.0);
  CHECK(u.u(0.5)[0] == -1.0);
  CHECK(u.u_left(0.5)[0] == 1.0);
  CHECK(u.u(1.0)[0] == 0.0);
  const auto jumps = u.jump_times();
  CHECK(jumps.size() == 24);
  CHECK(u.v(0.25)[0] == 1.0);
  CHECK(u.v(0.5)[0] == 0.0);
}

TEST_CASE("reduced toy solution is x0 e^{-1} e^{min(t,1/2)}") {
  for (auto mode : {DphiMode::FiniteDifference, DphiMode::Variational}) {
    ChartOptions o;
    o.mode = mode;
    const FlowBoxChart chart(parse_system(kToy), o);
    const ControlSignal u = alternating_control(12);
    const double x0 = 1.3;
    const Trajectory xi = solve_reduced(chart, vec1(x0 * std::exp(-1.0)), u, default_grid(u, 50));
    for (const auto& n : xi.nodes) {
      const double expect = x0 * std::exp(-1.0) * std::exp(std::min(n.t, 0.5));
      CHECK(std::abs(n.x[0] - expect) <= 1e-8 * expect);
    }
  }
}

TEST_CASE("p.d. solution of the alternating control matches the closed form") {
  const FlowBoxChart chart(parse_system(kToy));
  const ControlSignal u = alternating_control(12);
  const double x0 = 2.0;
  const auto t_start = std::chrono::steady_clock::now();
  const Trajectory x = pd_solution(chart, vec1(x0), u, default_grid(u, 50));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  MESSAGE("pd_solution time " << secs);
  double worst = 0;
  for (const auto& n : x.nodes) {
    const double expect = toy_closed_form(x0, n.t, 12);
    worst = std::max(worst, std::abs(n.x[0] - expect) / expect);
    if (n.x_left) {
      const double tl = n.t - 1e-9;
      worst = std::max(worst, std::abs((*n.x_left)[0] - toy_closed_form(x0, tl, 12)) / toy_closed_form(x0, tl, 12));
    }
  }
  MESSAGE("worst rel error " << worst);
  CHECK(worst <= 1e-6);
  CHECK(x.back().x[0] == doctest::Approx(x0 * std::exp(-0.5)).epsilon(1e-8));
  // zeta = u bit-exactly
  for (const auto& n : x.nodes) CHECK(n.u == u.u(n.t));
}

TEST_CASE("direct integration and p.d. solution agree for AC controls") {
  const auto sys = parse_system(kToy);
  const FlowBoxChart chart(sys);
  std::vector<ControlPiece> ps{ControlPiece::affine(0, 0.5, vec1(1), vec1(-0.5)),
                               ControlPiece::expression(0.5, 1.0, {expr::parse("-0.5*cos(2*(t-0.5))")})};
  const ControlSignal u(0, 1, ps, std::nullopt, {{0, 0.5, vec1(1)}, {0.5, 1, vec1(0)}});
  const auto grid = default_grid(u, 40);
  const Trajectory p = pd_solution(chart, vec1(1.0), u, grid);
  const Trajectory q = solve_original_ac(sys, vec1(1.0), u, grid);
  CHECK(sup_distance(p, q) < 1e-7);
  // x(t) = x(a) exp(u(t) - u(a)) once v = 0
  const double xh = q.at(0.5).x[0];
  for (const auto& n : q.nodes) {
    if (n.t < 0.5) continue;
    CHECK(std::abs(n.x[0] - xh * std::exp(n.u[0] - u.u(0.5)[0])) < 1e-8);
  }
}

TEST_CASE("translation system: direct quadrature x = x0 + t") {
  const auto sys = parse_system("n=1;m=1;l=0; f = 0; g1 = 1");
  const ControlSignal u(0, 1, {ControlPiece::affine(0, 1, vec1(0), vec1(1))});
  const Trajectory q = solve_original_ac(sys, vec1(0.5), u, default_grid(u, 10));
  for (const auto& n : q.nodes) CHECK(n.x[0] == doctest::Approx(0.5 + n.t).epsilon(1e-12));
  CHECK_THROWS_AS(solve_original_ac(sys, vec1(0), step_control(0, 1, 0.5, 0, 1), {0, 1}), ValidationError);
}

TEST_CASE("ac_approximation of a unit step") {
  const ControlSignal u = step_control(0, 1, 0.5, 0, 1);
  for (int k = 1; k <= 5; ++k) {
    const ControlSignal uk = ac_approximation(u, 1.0, k);
    const double w = ramp_width(u, k);
    CHECK(uk.is_ac(1e-15));
    CHECK(l1_distance(uk, u) == doctest::Approx(w / 2).epsilon(1e-12));
    CHECK(uk.u(0.0) == u.u(0.0));
    CHECK(uk.u(1.0) == u.u(1.0));
    CHECK(uk.u(0.5 + w)[0] == 1.0);
  }
  // t_star at the jump: ramp is placed to the left
  const ControlSignal ul = ac_approximation(u, 0.5, 2);
  CHECK(ul.u(0.5)[0] == 1.0);
  CHECK(ul.u(0.5 - ramp_width(u, 2))[0] == 0.0);
  // AC input is returned unchanged
  const ControlSignal lin(0, 1, {ControlPiece::affine(0, 1, vec1(0), vec1(1))});
  CHECK(l1_distance(ac_approximation(lin, 0.3, 3), lin) == 0.0);
}

TEST_CASE("ac_approximation of the alternating control") {
  const ControlSignal u = alternating_control(12);
  for (int k = 1; k <= 4; ++k) {
    const ControlSignal uk = ac_approximation(u, 1.0, k);
    CHECK(uk.is_ac(1e-15));
    CHECK(l1_distance(uk, u) <= 2 * 12 * ramp_width(u, k) + 1e-15);
    CHECK(uk.u(1.0)[0] == 0.0);
    CHECK(uk.u(0.0)[0] == 1.0);
  }
}
