#include "impulse/flowbox.hpp"

#include "impulse/errors.hpp"
#include "impulse/sampling.hpp"

namespace impulse {

VectorXd exp_flow(const VectorField& field, double t, const VectorXd& p, const OdeOptions& opts,
                  const std::optional<EscapeBox>& guard) {
  VectorXd y = p;
  integrate([&](double, const VectorXd& s, VectorXd& ds) { field(s, ds); }, y, 0.0, t, opts, guard);
  return y;
}

FlowBoxChart::FlowBoxChart(ControlAffineSystem sys, ChartOptions opts)
    : sys_(std::move(sys)), opts_(std::move(opts)) {
  const int d = sys_.n() + sys_.m();
  VectorXd lo = VectorXd::Constant(d, -1e3);
  VectorXd hi = VectorXd::Constant(d, 1e3);
  if (opts_.working_box) {
    lo = opts_.working_box->first;
    hi = opts_.working_box->second;
    if (lo.size() != d || hi.size() != d) throw ValidationError("working box has wrong dimension");
  }
  const VectorXd center = 0.5 * (lo + hi);
  const VectorXd half = 0.5 * (hi - lo);
  guard_ = EscapeBox{center - 10.0 * half, center + 10.0 * half};
}

FlowBoxChart FlowBoxChart::with_mode(DphiMode mode) const {
  FlowBoxChart copy = *this;
  copy.opts_.mode = mode;
  return copy;
}

VectorXd FlowBoxChart::flow_frozen(const VectorXd& start, const VectorXd& coeff) const {
  const int n = sys_.n();
  const int m = sys_.m();
  if (coeff.isZero(0.0)) return start;
  VectorXd gbuf(n);
  VectorXd y = start;
  integrate(
      [&](double, const VectorXd& p, VectorXd& dp) {
        dp.setZero();
        const VectorXd x = p.head(n);
        const VectorXd z = p.tail(m);
        for (int a = 0; a < m; ++a) {
          if (coeff[a] == 0.0) continue;
          sys_.impulse(a, x, z, gbuf);
          dp.head(n) += coeff[a] * gbuf;
          dp[n + a] += coeff[a];
        }
      },
      y, 0.0, 1.0, opts_.ode, guard_);
  return y;
}

VectorXd FlowBoxChart::phi_pr(const VectorXd& x, const VectorXd& z) const {
  VectorXd p(sys_.n() + sys_.m());
  p << x, z;
  return flow_frozen(p, -z).head(sys_.n());
}

std::pair<VectorXd, VectorXd> FlowBoxChart::phi(const VectorXd& x, const VectorXd& z) const {
  return {phi_pr(x, z), z};
}

VectorXd FlowBoxChart::phi_inverse_pr(const VectorXd& xi, const VectorXd& zeta) const {
  VectorXd p(sys_.n() + sys_.m());
  p << xi, VectorXd::Zero(sys_.m());
  return flow_frozen(p, zeta).head(sys_.n());
}

std::pair<VectorXd, VectorXd> FlowBoxChart::phi_inverse(const VectorXd& xi, const VectorXd& zeta) const {
  return {phi_inverse_pr(xi, zeta), zeta};
}

VectorXd FlowBoxChart::variational_apply(const VectorXd& x, const VectorXd& z, const VectorXd& dir) const {
  // p' = -z_a g_a(p),  q' = -z_a Dg_a(p) q - dz_a g_a(p),  (p, q)(0) = ((x, z), dir).
  const int n = sys_.n();
  const int m = sys_.m();
  const int d = n + m;
  const VectorXd dz = dir.tail(m);
  VectorXd y(2 * d);
  y << x, z, dir;
  VectorXd gbuf(n), jbuf(n);
  EscapeBox guard{VectorXd(2 * d), VectorXd(2 * d)};
  guard.lo << guard_.lo, VectorXd::Constant(d, -1e300);
  guard.hi << guard_.hi, VectorXd::Constant(d, 1e300);
  integrate(
      [&](double, const VectorXd& s, VectorXd& ds) {
        ds.setZero();
        const VectorXd px = s.head(n);
        const VectorXd pz = s.segment(n, m);
        const VectorXd qx = s.segment(d, n);
        const VectorXd qz = s.tail(m);
        for (int a = 0; a < m; ++a) {
          if (z[a] == 0.0 && dz[a] == 0.0) continue;
          sys_.impulse(a, px, pz, gbuf);
          ds.head(n) -= z[a] * gbuf;
          ds[n + a] -= z[a];
          sys_.impulse_jvp(a, px, pz, qx, qz, jbuf);
          ds.segment(d, n) -= z[a] * jbuf + dz[a] * gbuf;
          ds[d + n + a] -= dz[a];
        }
      },
      y, 0.0, 1.0, opts_.ode, guard);
  VectorXd out(d);
  out << y.segment(d, n), dz;
  return out;
}

MatrixXd FlowBoxChart::dphi(const VectorXd& x, const VectorXd& z) const {
  const int n = sys_.n();
  const int m = sys_.m();
  const int d = n + m;
  MatrixXd j(d, d);
  if (opts_.mode == DphiMode::Variational) {
    for (int c = 0; c < d; ++c) j.col(c) = variational_apply(x, z, VectorXd::Unit(d, c));
    return j;
  }
  VectorXd xp = x, zp = z;
  for (int c = 0; c < d; ++c) {
    double& coord = c < n ? xp[c] : zp[c - n];
    const double orig = coord;
    const double h = fd_step(orig);
    coord = orig + h;
    const VectorXd plus = phi_pr(xp, zp);
    coord = orig - h;
    const VectorXd minus = phi_pr(xp, zp);
    coord = orig;
    j.block(0, c, n, 1) = (plus - minus) / (2.0 * h);
    // The z-part of phi is the identity.
    j.block(n, c, m, 1).setZero();
    if (c >= n) j(c, c) = 1.0;
  }
  return j;
}

VectorXd FlowBoxChart::dphi_apply(const VectorXd& x, const VectorXd& z, const VectorXd& dir) const {
  if (opts_.mode == DphiMode::Variational) return variational_apply(x, z, dir);
  const int n = sys_.n();
  const int m = sys_.m();
  const double scale = dir.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return VectorXd::Zero(n + m);
  // Central difference along dir, step sized as h_jac on the largest touched coordinate.
  double base = 0.0;
  for (int c = 0; c < n + m; ++c) {
    if (dir[c] != 0.0) base = std::max(base, std::abs(c < n ? x[c] : z[c - n]));
  }
  const double h = fd_step(base) / scale;
  const VectorXd plus = phi_pr(x + h * dir.head(n), z + h * dir.tail(m));
  const VectorXd minus = phi_pr(x - h * dir.head(n), z - h * dir.tail(m));
  VectorXd out(n + m);
  out << (plus - minus) / (2.0 * h), dir.tail(m);
  return out;
}

VectorXd FlowBoxChart::pushforward_drift_full(const VectorXd& xi, const VectorXd& zeta, const VectorXd& v) const {
  const int n = sys_.n();
  const VectorXd x = phi_inverse_pr(xi, zeta);
  VectorXd dir = VectorXd::Zero(n + sys_.m());
  sys_.drift(x, zeta, v, dir.head(n));
  return dphi_apply(x, zeta, dir);
}

VectorXd FlowBoxChart::pushforward_drift(const VectorXd& xi, const VectorXd& zeta, const VectorXd& v) const {
  const VectorXd full = pushforward_drift_full(xi, zeta, v);
  const double zpart = full.tail(sys_.m()).cwiseAbs().maxCoeff();
  if (!(zpart <= opts_.tol_push)) {
    throw FlowBoxViolation("pushforward_drift: z-components of F reach " + std::to_string(zpart) +
                           " (commutativity broken?)");
  }
  return full.head(sys_.n());
}

VectorXd FlowBoxChart::pushforward_impulse(const VectorXd& xi, const VectorXd& zeta, int alpha) const {
  if (alpha < 0 || alpha >= sys_.m()) throw ValidationError("pushforward_impulse: index out of range");
  const VectorXd x = phi_inverse_pr(xi, zeta);
  VectorXd p(sys_.n() + sys_.m());
  p << x, zeta;
  return dphi_apply(x, zeta, sys_.extended_impulse(alpha, p));
}

double estimate_dphi_bound(const FlowBoxChart& chart, const VectorXd& lo, const VectorXd& hi, int n_samples) {
  const int n = chart.n();
  double bound = 0.0;
  for (const VectorXd& p : halton_points(n_samples, lo, hi)) {
    bound = std::max(bound, chart.dphi(p.head(n), p.tail(chart.m())).operatorNorm());
  }
  return bound;
}

}  // namespace impulse
