#include <cmath>

#include "doctest.h"
#include "impulse/errors.hpp"
#include "impulse/mayer.hpp"
#include "impulse/rng.hpp"

using namespace impulse;

namespace {

VectorXd vec1(double x) { return VectorXd::Constant(1, x); }

MayerProblem toy_problem(const char* psi = "x1^2", const char* V = "set{0,1}") {
  const std::string dsl = std::string("n=1;m=1;l=1; f = x1*v1; g1 = x1; U = box(-1,1); V = ") + V;
  ChartOptions co;
  co.ode.abs_tol = co.ode.rel_tol = 1e-9;
  return MayerProblem(parse_system(dsl), expr::parse(psi), vec1(1.0), vec1(1.0), 0.0, 1.0, co);
}

VectorXd random_params(int d, std::uint64_t i) {
  RandomStream rs = RandomStream(7, "test").substream(i);
  VectorXd p(d);
  for (int k = 0; k < d; ++k) p[k] = rs.uniform();
  return p;
}

}  // namespace

TEST_CASE("class names round-trip") {
  for (auto c : {ControlClass::AC, ControlClass::L1, ControlClass::AC_K, ControlClass::U_K, ControlClass::U_K_plus}) {
    CHECK(parse_class(class_name(c)) == c);
  }
  CHECK_THROWS_AS(parse_class("BV"), ValidationError);
}

TEST_CASE("psi may not depend on v or t") {
  CHECK_THROWS_AS(toy_problem("x1*v1"), ValidationError);
  CHECK_THROWS_AS(toy_problem("x2"), ValidationError);
}

TEST_CASE("decoded controls are admissible for their class") {
  const MayerProblem pr = toy_problem();
  for (auto c : {ControlClass::L1, ControlClass::AC, ControlClass::AC_K, ControlClass::U_K, ControlClass::U_K_plus}) {
    const ControlParameterization param(pr, c, 1.5);
    for (std::uint64_t i = 0; i < 40; ++i) {
      const VectorXd p = random_params(param.dim(), i);
      if (param.uses_spacetime()) {
        const SpaceTimeControl stc = param.decode_spacetime(p);
        CHECK_NOTHROW(stc.validate(pr.sys, 1e-9));
        CHECK(stc.variation() <= 1.5 + 1e-12);
        CHECK(stc.u().front()[0] == 1.0);
        CHECK(stc.a() == 0.0);
        CHECK(stc.b() == doctest::Approx(1.0).epsilon(1e-14));
        if (c == ControlClass::U_K_plus) CHECK(stc.in_plus());
      } else {
        const ControlSignal u = param.decode_signal(p);
        CHECK_NOTHROW(u.validate(pr.sys));
        if (c != ControlClass::L1) {
          CHECK(u.is_ac());
          CHECK(u.u(0.0)[0] == 1.0);
        }
        if (c == ControlClass::AC_K) CHECK(total_variation(u) <= 1.5 + 1e-12);
      }
    }
  }
}

TEST_CASE("constant cost returns the constant") {
  const MayerProblem pr = toy_problem("3.5");
  const auto rep = estimate_value(pr, ControlParameterization(pr, ControlClass::U_K, 1.0), 200, 1);
  CHECK(rep.best_value == 3.5);
  CHECK(rep.recheck_value == 3.5);
}

TEST_CASE("K = 0 leaves only the drift") {
  const MayerProblem pr = toy_problem();
  const auto rep = estimate_value(pr, ControlParameterization(pr, ControlClass::U_K, 0.0), 500, 1);
  // u stays at 1, v = 0 is optimal: x(1) = 1.
  CHECK(rep.best_value == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("budgeted value on the toy problem") {
  const MayerProblem pr = toy_problem();
  for (double K : {0.5, 1.0, 2.0, 4.0}) {
    const auto rep = estimate_value(pr, ControlParameterization(pr, ControlClass::U_K, K), 4000, 3);
    CHECK(rep.best_value == doctest::Approx(std::exp(-2.0 * std::min(K, 2.0))).epsilon(1e-6));
    CHECK(rep.recheck_value == rep.best_value);
    CHECK(rep.evals == 4000);
    CHECK(!rep.trace.empty());
    CHECK(rep.trace.back().second == rep.best_value);
  }
}

TEST_CASE("L1 reaches the endpoint value") {
  const MayerProblem pr = toy_problem();
  const auto rep = estimate_value(pr, ControlParameterization(pr, ControlClass::L1), 1500, 1);
  CHECK(rep.best_value == doctest::Approx(std::exp(-4.0)).epsilon(1e-6));
  CHECK(rep.terminal_u[0] == doctest::Approx(-1.0));
}

TEST_CASE("search is deterministic and thread independent") {
  const MayerProblem pr = toy_problem();
  const ControlParameterization param(pr, ControlClass::U_K_plus, 1.0);
  SearchOptions one, three;
  three.threads = 3;
  const auto r1 = estimate_value(pr, param, 600, 11, one);
  const auto r2 = estimate_value(pr, param, 600, 11, three);
  CHECK(r1.best_value == r2.best_value);
  CHECK(r1.best_params == r2.best_params);
  CHECK(r1.trace == r2.trace);
  const auto r3 = estimate_value(pr, param, 600, 12, one);
  CHECK(std::isfinite(r3.best_value));
  CHECK(r3.best_value <= r3.trace.front().second);
}

TEST_CASE("budget below 100 is rejected") {
  const MayerProblem pr = toy_problem();
  CHECK_THROWS_AS(estimate_value(pr, ControlParameterization(pr, ControlClass::L1), 50, 1), ValidationError);
}

TEST_CASE("toy clouds with v = 0 lie on x = exp(u - 1)") {
  const MayerProblem pr = toy_problem("x1", "set{0}");
  for (auto c : {ControlClass::L1, ControlClass::U_K}) {
    const Cloud cloud = sample_reachable(pr, c, 2.0, 200, 5);
    CHECK(cloud.points.size() == 200);
    CHECK(cloud.failures == 0);
    double worst = 0.0;
    for (const auto& p : cloud.points) worst = std::max(worst, std::abs(p[0] - std::exp(p[1] - 1.0)));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("pure translation cloud stays at the initial state") {
  const std::string dsl = "n=1;m=1;l=0; f = 0; g1 = 0; U = box(0,1)";
  const MayerProblem pr(parse_system(dsl), expr::parse("u1"), vec1(2.0), vec1(0.0));
  const Cloud cloud = sample_reachable(pr, ControlClass::AC, 0.0, 50, 1);
  for (const auto& p : cloud.points) {
    CHECK(p[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(p[1] >= 0.0);
    CHECK(p[1] <= 1.0);
  }
  const auto rep = estimate_value(pr, ControlParameterization(pr, ControlClass::L1), 300, 1);
  CHECK(rep.best_value == 0.0);
}

TEST_CASE("hausdorff distance by hand") {
  const std::vector<VectorXd> A{VectorXd::Zero(2)};
  const std::vector<VectorXd> B{VectorXd::Zero(2), VectorXd::Unit(2, 0)};
  CHECK(hausdorff_distance(A, A) == std::pair<double, double>{0.0, 0.0});
  CHECK(hausdorff_distance(A, B) == std::pair<double, double>{0.0, 1.0});
  CHECK_THROWS_AS(hausdorff_distance(A, {}), ValidationError);
  CHECK(nearest_neighbor_spacing(B).mean == 1.0);
  const std::vector<VectorXd> C{VectorXd::Zero(1), VectorXd::Ones(1), VectorXd::Constant(1, 4.0)};
  CHECK(nearest_neighbor_spacing(C).mean == doctest::Approx(5.0 / 3.0));
  CHECK(nearest_neighbor_spacing(C).max == 3.0);
}

TEST_CASE("cloud csv header") {
  Cloud c;
  c.n = 1;
  c.m = 1;
  c.points.push_back(VectorXd::Ones(2));
  const std::string csv = c.to_csv();
  CHECK(csv.rfind("x1,u1,K,seed\n", 0) == 0);
}
