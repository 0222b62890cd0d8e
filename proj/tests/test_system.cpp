#include <cmath>
#include <random>

#include "doctest.h"
#include "impulse/errors.hpp"
#include "impulse/system.hpp"

using namespace impulse;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double eval(const char* text, double x1 = 0.0, double t = 0.0) {
  const double xs[] = {x1};
  expr::Bindings b;
  b.x = xs;
  b.t = t;
  return expr::parse(text).evaluate(b);
}

ParseError parse_error_of(const char* src) {
  try {
    parse_system(src);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("no ParseError for " << src);
  return ParseError("", 0, 0);
}

}  // namespace

TEST_CASE("expression precedence and functions") {
  CHECK(eval("1 + 2*3") == 7.0);
  CHECK(eval("-2^2") == -4.0);
  CHECK(eval("2^3^2") == 512.0);
  CHECK(eval("(1 - 4)/2") == -1.5);
  CHECK(eval("x1*x1 - x1", 3.0) == 6.0);
  CHECK(eval("exp(log(x1))", 2.5) == doctest::Approx(2.5));
  CHECK(eval("abs(-x1) + tanh(0)", 4.0) == 4.0);
  CHECK(eval("sin(t)^2 + cos(t)^2", 0.0, 0.7) == doctest::Approx(1.0));
}

TEST_CASE("symbolic derivatives agree with central differences") {
  const expr::Expr e = expr::parse("sin(x1)*exp(x1/2) + x1^3 - log(1 + x1*x1)");
  const expr::Expr d = e.derivative(expr::VarKind::X, 0);
  for (double x : {-1.3, 0.0, 0.4, 2.2}) {
    const double h = 1e-6;
    const double fd = (eval(e.str().c_str(), x + h) - eval(e.str().c_str(), x - h)) / (2 * h);
    const double xs[] = {x};
    expr::Bindings b;
    b.x = xs;
    CHECK(d.evaluate(b) == doctest::Approx(fd).epsilon(1e-7));
    CHECK(expr::Program(d)(b) == d.evaluate(b));
  }
}

TEST_CASE("parse_system examples") {
  const auto toy = parse_system("n=1;m=1;l=1; f = x1*v1; g1 = x1");
  CHECK(toy.n() == 1);
  CHECK(toy.m() == 1);
  CHECK(toy.l() == 1);
  CHECK(toy.drift(vec({2.0}), vec({0.3}), vec({1.5}))[0] == 3.0);
  CHECK(toy.impulse(0, vec({-0.7}), vec({0.3}))[0] == -0.7);

  const auto tr = parse_system("n=1;m=1;l=0; f = 0; g1 = 1");
  CHECK(tr.l() == 0);
  CHECK(tr.impulse(0, vec({5.0}), vec({9.0}))[0] == 1.0);
  CHECK(tr.drift(vec({5.0}), vec({9.0}), VectorXd())[0] == 0.0);

  const auto nc = parse_system("n=2;m=2;l=0; f=0; g1 = (1,0); g2 = (x1,0)");
  CHECK(nc.m() == 2);
}

TEST_CASE("parse errors carry positions") {
  const ParseError syntax = parse_error_of("n=1;m=1;l=0\nf = x1 +* 2\ng1 = 1");
  CHECK(syntax.line() == 2);
  CHECK(syntax.column() == 9);

  CHECK_THROWS_AS(parse_system("n=1;m=1;l=0; f = y1; g1 = 1"), ParseError);
  CHECK_THROWS_AS(parse_system("n=1;m=1;l=0; f = x2; g1 = 1"), ParseError);
  CHECK_THROWS_AS(parse_system("n=1;m=1;l=0; f = v1; g1 = 1"), ParseError);
  CHECK_THROWS_AS(parse_system("n=2;m=1;l=0; f = (0,0); g1 = (1,0,0)"), ParseError);
  CHECK_THROWS_AS(parse_system("n=1;m=2;l=0; f = 0; g1 = 1"), ParseError);
}

TEST_CASE("domain descriptors") {
  const auto sys = parse_system("n=1;m=2;l=2; f = v1 - v2; g1 = 1; g2 = 0\n"
                                "U = box((-1,0),(1,2))\nV = set{(0,0),(1,0.5)}");
  CHECK(sys.U().kind() == ImpulseDomain::Kind::Box);
  CHECK(sys.U().contains(vec({0.5, 1.5})));
  CHECK_FALSE(sys.U().contains(vec({0.5, 2.5})));
  CHECK(sys.V().kind() == OrdinarySet::Kind::Finite);
  CHECK(sys.V().points().size() == 2);
  CHECK(sys.V().contains(vec({1.0, 0.5})));
  CHECK_FALSE(sys.V().contains(vec({0.5, 0.5})));

  const auto box_v = OrdinarySet::box(vec({0.0, -1.0}), vec({1.0, 1.0}));
  CHECK(box_v.discretize(3).size() == 9);
  const auto poly = ImpulseDomain::polytope(Eigen::MatrixXd::Identity(2, 2), vec({1.0, 1.0}));
  CHECK(poly.contains(vec({-5.0, 1.0})));
  CHECK_FALSE(poly.contains(vec({1.1, 0.0})));
}

TEST_CASE("lie bracket examples") {
  const auto nc = parse_system("n=2;m=2;l=0; f=0; g1 = (1,0); g2 = (x1,0)");
  const auto toy = parse_system("n=1;m=1;l=1; f = x1*v1; g1 = x1");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int i = 0; i < 20; ++i) {
    const VectorXd p = vec({d(rng), d(rng), d(rng), d(rng)});
    const VectorXd b12 = lie_bracket(nc, 0, 1, p);
    CHECK(b12.size() == 4);
    CHECK(b12[0] == doctest::Approx(1.0));
    CHECK(b12[1] == 0.0);
    CHECK(b12.tail(2).isZero(0.0));
    CHECK(lie_bracket(nc, 0, 0, p).isZero(0.0));
    CHECK(lie_bracket(toy, 0, 0, p.head(2)).isZero(0.0));
  }
}

TEST_CASE("bracket antisymmetry and zero z-components, analytic and finite differences") {
  const char* src =
      "n=2;m=2;l=0; f = (x2, -x1); g1 = (sin(x1)*u2, x2^2); g2 = (exp(x2/3), x1*u1)";
  for (auto source : {JacobianSource::Analytic, JacobianSource::FiniteDifference}) {
    const auto sys = parse_system(src).with_jacobians(source);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) {
      const VectorXd p = vec({d(rng), d(rng), d(rng), d(rng)});
      const VectorXd ab = lie_bracket(sys, 0, 1, p);
      const VectorXd ba = lie_bracket(sys, 1, 0, p);
      CHECK(ab.tail(2).isZero(0.0));
      CHECK((ab + ba).norm() <= 10.0 * fd_step(p.norm()));
    }
  }
}

TEST_CASE("analytic and finite-difference jacobians agree") {
  const auto sys = parse_system("n=2;m=1;l=1; f = (x2*v1, -sin(x1) + u1^2); g1 = (x2, -x1*u1)");
  const auto fd = sys.with_jacobians(JacobianSource::FiniteDifference);
  const VectorXd x = vec({0.3, -1.2}), u = vec({0.8}), v = vec({1.1});
  CHECK((sys.drift_jacobian(x, u, v) - fd.drift_jacobian(x, u, v)).norm() < 1e-8);
  CHECK((sys.impulse_jacobian(0, x, u) - fd.impulse_jacobian(0, x, u)).norm() < 1e-8);
  const MatrixXd ext = sys.extended_impulse_jacobian(0, vec({0.3, -1.2, 0.8}));
  CHECK(ext.rows() == 3);
  CHECK(ext.row(2).isZero(0.0));
  const VectorXd g = sys.extended_impulse(0, vec({0.3, -1.2, 0.8}));
  CHECK(g[2] == 1.0);
}

TEST_CASE("check_hypotheses examples") {
  const VectorXd lo2 = VectorXd::Constant(2, -2.0), hi2 = VectorXd::Constant(2, 2.0);
  const auto toy = check_hypotheses(parse_system("n=1;m=1;l=1; f = x1*v1; g1 = x1; V = set{0,1}"), lo2, hi2, 100);
  CHECK(toy.pass_commutativity);
  CHECK(toy.max_bracket_norm == 0.0);

  const VectorXd lo4 = VectorXd::Constant(4, -2.0), hi4 = VectorXd::Constant(4, 2.0);
  const auto nc = check_hypotheses(parse_system("n=2;m=2;l=0; f=0; g1 = (1,0); g2 = (x1,0)"), lo4, hi4, 100);
  CHECK_FALSE(nc.pass_commutativity);
  CHECK(nc.max_bracket_norm >= 1.0 - 1e-9);
  REQUIRE(nc.worst.has_value());
  CHECK(nc.worst->alpha != nc.worst->beta);

  const auto cst = check_hypotheses(parse_system("n=2;m=2;l=0; f=0; g1 = (1,0); g2 = (0,1)"), lo4, hi4, 100);
  CHECK(cst.pass_commutativity);
  CHECK(cst.bracket_sample_points.size() == 100);
}

TEST_CASE("DSL round trip gives identical evaluations") {
  const char* src =
      "n=2;m=1;l=1\nf = (x2 + 0.1*v1, -sin(x1) - 0.2*x2 + tanh(u1)/3)\ng1 = (abs(x2)^1.5, exp(-x1*u1))\n"
      "U = box(-1, 1)\nV = box(-0.5, 0.5)";
  const auto a = parse_system(src);
  const auto b = parse_system(a.to_dsl());
  CHECK(b.to_dsl() == a.to_dsl());
  CHECK(b.U().str() == a.U().str());
  CHECK(b.V().str() == a.V().str());
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const VectorXd x = vec({d(rng), d(rng)}), u = vec({d(rng) / 2}), v = vec({d(rng) / 4});
    CHECK(a.drift(x, u, v) == b.drift(x, u, v));
    CHECK(a.impulse(0, x, u) == b.impulse(0, x, u));
  }
}
