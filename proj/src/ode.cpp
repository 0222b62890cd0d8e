#include "impulse/ode.hpp"

#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <string>
#include <vector>

#include "impulse/errors.hpp"

namespace impulse {

namespace odeint = boost::numeric::odeint;

void integrate(const OdeRhs& rhs, Eigen::VectorXd& y, double t0, double t1, const OdeOptions& opts,
               const std::optional<EscapeBox>& guard) {
  if (t0 == t1) return;
  if (!y.allFinite()) throw IntegrationError("integrate: non-finite initial state");
  using State = std::vector<double>;
  const auto dim = static_cast<std::size_t>(y.size());
  State state(y.data(), y.data() + dim);
  Eigen::VectorXd y_buf(y.size());
  Eigen::VectorXd dy_buf(y.size());

  auto system = [&](const State& s, State& ds, double t) {
    y_buf = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(dim));
    rhs(t, y_buf, dy_buf);
    ds.assign(dy_buf.data(), dy_buf.data() + dim);
  };

  long steps = 0;
  Eigen::VectorXd probe(y.size());
  auto observer = [&](const State& s, double t) {
    probe = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(dim));
    if (!probe.allFinite()) {
      throw IntegrationError("integrate: state blew up (non-finite) at t=" + std::to_string(t));
    }
    if (guard && !guard->contains(probe)) {
      throw FlowEscape("integrate: state left the escape box at t=" + std::to_string(t));
    }
    if (++steps > opts.max_steps) throw IntegrationError("integrate: step budget exhausted");
  };

  auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(opts.abs_tol, opts.rel_tol);
  const double span = t1 - t0;
  const double dt0 = span / 16.0;
  try {
    odeint::integrate_adaptive(stepper, system, state, t0, t1, dt0, observer);
  } catch (const odeint::step_adjustment_error& e) {
    throw IntegrationError(std::string("integrate: step-size underflow: ") + e.what());
  } catch (const odeint::no_progress_error& e) {
    throw IntegrationError(std::string("integrate: no progress: ") + e.what());
  }
  y = Eigen::Map<const Eigen::VectorXd>(state.data(), static_cast<Eigen::Index>(dim));
  if (!y.allFinite()) throw IntegrationError("integrate: state blew up (non-finite)");
}

}  // namespace impulse
