#include "impulse/control.hpp"

#include <algorithm>
#include <cmath>

#include "impulse/errors.hpp"

namespace impulse {

namespace {

expr::Bindings time_bindings(double t) {
  expr::Bindings b;
  b.t = t;
  return b;
}

bool differs(const VectorXd& p, const VectorXd& q, double tol) {
  return (p - q).lpNorm<Eigen::Infinity>() > tol;
}

}  // namespace

ControlPiece ControlPiece::constant(double t0, double t1, VectorXd value) {
  ControlPiece p;
  p.kind = Kind::Constant;
  p.t0 = t0;
  p.t1 = t1;
  p.start = std::move(value);
  return p;
}

ControlPiece ControlPiece::affine(double t0, double t1, VectorXd start, VectorXd end) {
  if (start.size() != end.size()) throw ValidationError("affine piece: endpoint dimensions differ");
  ControlPiece p;
  p.kind = Kind::Affine;
  p.t0 = t0;
  p.t1 = t1;
  p.start = std::move(start);
  p.end = std::move(end);
  return p;
}

ControlPiece ControlPiece::expression(double t0, double t1, std::vector<expr::Expr> exprs) {
  for (const auto& e : exprs) {
    if (e.depends_on(expr::VarKind::X) || e.depends_on(expr::VarKind::U) || e.depends_on(expr::VarKind::V)) {
      throw ValidationError("expression piece may only depend on t");
    }
  }
  ControlPiece p;
  p.kind = Kind::Expression;
  p.t0 = t0;
  p.t1 = t1;
  for (const auto& e : exprs) p.dexprs.push_back(e.derivative(expr::VarKind::T, 0));
  p.exprs = std::move(exprs);
  return p;
}

int ControlPiece::dim() const {
  return kind == Kind::Expression ? static_cast<int>(exprs.size()) : static_cast<int>(start.size());
}

VectorXd ControlPiece::value(double t) const {
  switch (kind) {
    case Kind::Constant:
      return start;
    case Kind::Affine: {
      const double span = t1 - t0;
      const double theta = span > 0.0 ? (t - t0) / span : 0.0;
      return (1.0 - theta) * start + theta * end;
    }
    case Kind::Expression: {
      VectorXd out(dim());
      const auto b = time_bindings(t);
      for (int i = 0; i < out.size(); ++i) out[i] = exprs[static_cast<std::size_t>(i)].evaluate(b);
      return out;
    }
  }
  return {};
}

VectorXd ControlPiece::derivative(double t) const {
  switch (kind) {
    case Kind::Constant:
      return VectorXd::Zero(dim());
    case Kind::Affine: {
      const double span = t1 - t0;
      return span > 0.0 ? VectorXd((end - start) / span) : VectorXd::Zero(dim());
    }
    case Kind::Expression: {
      VectorXd out(dim());
      const auto b = time_bindings(t);
      for (int i = 0; i < out.size(); ++i) out[i] = dexprs[static_cast<std::size_t>(i)].evaluate(b);
      return out;
    }
  }
  return {};
}

ControlPiece ControlPiece::restricted(double s0, double s1) const {
  switch (kind) {
    case Kind::Constant:
      return constant(s0, s1, start);
    case Kind::Affine:
      return affine(s0, s1, value(s0), value(s1));
    case Kind::Expression:
      return expression(s0, s1, exprs);
  }
  return *this;
}

double ControlPiece::variation() const {
  switch (kind) {
    case Kind::Constant:
      return 0.0;
    case Kind::Affine:
      return (end - start).norm();
    case Kind::Expression: {
      constexpr int kSamples = 4096;
      double total = 0.0;
      VectorXd prev = value(t0);
      for (int i = 1; i <= kSamples; ++i) {
        VectorXd cur = value(t0 + (t1 - t0) * i / kSamples);
        total += (cur - prev).norm();
        prev = std::move(cur);
      }
      return total;
    }
  }
  return 0.0;
}

ControlSignal::ControlSignal(double a, double b, std::vector<ControlPiece> u_pieces, std::optional<VectorXd> terminal,
                             std::vector<VPiece> v_pieces, std::optional<VectorXd> initial)
    : a_(a), b_(b), u_(std::move(u_pieces)), v_(std::move(v_pieces)), initial_(std::move(initial)) {
  if (!(a < b)) throw ValidationError("control horizon needs a < b");
  if (u_.empty()) throw ValidationError("control has no u pieces");
  m_ = u_.front().dim();
  double t = a;
  for (const auto& p : u_) {
    if (p.dim() != m_) throw ValidationError("u pieces have inconsistent dimensions");
    if (p.t0 != t || !(p.t1 > p.t0)) throw ValidationError("u pieces must tile [a, b] in increasing order");
    t = p.t1;
  }
  if (t != b) throw ValidationError("u pieces must end at b");
  terminal_ = terminal ? *terminal : u_.back().value(b);
  if (terminal_.size() != m_) throw ValidationError("terminal value has wrong dimension");
  if (initial_ && initial_->size() != m_) throw ValidationError("initial value has wrong dimension");

  l_ = v_.empty() ? 0 : static_cast<int>(v_.front().value.size());
  t = a;
  for (const auto& p : v_) {
    if (p.value.size() != l_) throw ValidationError("v pieces have inconsistent dimensions");
    if (p.t0 != t || !(p.t1 > p.t0)) throw ValidationError("v pieces must tile [a, b] in increasing order");
    t = p.t1;
  }
  if (!v_.empty() && t != b) throw ValidationError("v pieces must end at b");
}

std::size_t ControlSignal::piece_index(double t) const {
  auto it = std::upper_bound(u_.begin(), u_.end(), t, [](double s, const ControlPiece& p) { return s < p.t0; });
  if (it == u_.begin()) return 0;
  return static_cast<std::size_t>(std::distance(u_.begin(), it) - 1);
}

VectorXd ControlSignal::u(double t) const {
  if (t < a_ || t > b_) throw ValidationError("u evaluated outside [a, b]");
  if (t == a_ && initial_) return *initial_;
  if (t == b_) return terminal_;
  return u_[piece_index(t)].value(t);
}

VectorXd ControlSignal::u_left(double t) const {
  if (t <= a_ || t > b_) throw ValidationError("left limit needs t in (a, b]");
  std::size_t i = piece_index(t);
  if (u_[i].t0 == t && i > 0) --i;
  return u_[i].value(t);
}

VectorXd ControlSignal::u_right(double t) const {
  if (t < a_ || t >= b_) throw ValidationError("right limit needs t in [a, b)");
  return u_[piece_index(t)].value(t);
}

std::size_t ControlSignal::v_index(double t) const {
  auto it = std::upper_bound(v_.begin(), v_.end(), t, [](double s, const VPiece& p) { return s < p.t0; });
  if (it == v_.begin()) return 0;
  return static_cast<std::size_t>(std::distance(v_.begin(), it) - 1);
}

VectorXd ControlSignal::v(double t) const {
  if (v_.empty()) return VectorXd(0);
  return v_[v_index(t)].value;
}

std::vector<double> ControlSignal::breakpoints() const {
  std::vector<double> out{a_, b_};
  for (const auto& p : u_) out.push_back(p.t0);
  for (const auto& p : v_) out.push_back(p.t0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> ControlSignal::jump_times(double tol) const {
  std::vector<double> out;
  if (initial_ && differs(*initial_, u_.front().value(a_), tol)) out.push_back(a_);
  for (std::size_t i = 1; i < u_.size(); ++i) {
    const double t = u_[i].t0;
    if (differs(u_[i - 1].value(t), u_[i].value(t), tol)) out.push_back(t);
  }
  if (differs(terminal_, u_.back().value(b_), tol)) out.push_back(b_);
  return out;
}

void ControlSignal::validate(const ControlAffineSystem& sys) const {
  if (m_ != sys.m()) throw ValidationError("control has m=" + std::to_string(m_) + ", system expects " +
                                           std::to_string(sys.m()));
  if (sys.l() > 0 && v_.empty()) throw ValidationError("system has ordinary controls but no v pieces were given");
  if (!v_.empty() && l_ != sys.l()) throw ValidationError("v has wrong dimension");
  auto check_u = [&](const VectorXd& val, double t) {
    if (!val.allFinite() || !sys.U().contains(val, 1e-12)) {
      throw ValidationError("control value outside U at t=" + std::to_string(t));
    }
  };
  for (const auto& p : u_) {
    const int samples = p.kind == ControlPiece::Kind::Expression ? 32 : 1;
    for (int i = 0; i <= samples; ++i) {
      const double t = p.t0 + (p.t1 - p.t0) * i / samples;
      check_u(p.value(t), t);
    }
  }
  check_u(terminal_, b_);
  if (initial_) check_u(*initial_, a_);
  for (const auto& p : v_) {
    if (!sys.V().contains(p.value, 1e-12)) {
      throw ValidationError("ordinary control outside V at t=" + std::to_string(p.t0));
    }
  }
}

ControlSignal ControlSignal::with_v(std::vector<VPiece> v_pieces) const {
  ControlSignal out(a_, b_, u_, terminal_, std::move(v_pieces), initial_);
  out.truncation_level_ = truncation_level_;
  return out;
}

ControlSignal alternating_control(int k_max) {
  if (k_max < 1) throw ValidationError("k_max must be at least 1");
  std::vector<ControlPiece> pieces;
  const int count = 2 * k_max;
  for (int k = 1; k <= count; ++k) {
    const double t0 = 1.0 - 1.0 / k;
    const double t1 = 1.0 - 1.0 / (k + 1);
    pieces.push_back(ControlPiece::constant(t0, t1, VectorXd::Constant(1, k % 2 == 1 ? 1.0 : -1.0)));
  }
  pieces.push_back(ControlPiece::constant(1.0 - 1.0 / (count + 1), 1.0, VectorXd::Zero(1)));
  std::vector<VPiece> v{{0.0, 0.5, VectorXd::Ones(1)}, {0.5, 1.0, VectorXd::Zero(1)}};
  ControlSignal u(0.0, 1.0, std::move(pieces), VectorXd::Zero(1), std::move(v));
  u.set_truncation_level(k_max);
  return u;
}

ControlSignal step_control(double a, double b, double t_jump, double lo, double hi, VectorXd v) {
  std::vector<ControlPiece> pieces{ControlPiece::constant(a, t_jump, VectorXd::Constant(1, lo)),
                                   ControlPiece::constant(t_jump, b, VectorXd::Constant(1, hi))};
  std::vector<VPiece> vp;
  if (v.size() > 0) vp.push_back({a, b, v});
  return ControlSignal(a, b, std::move(pieces), std::nullopt, std::move(vp));
}

}  // namespace impulse
