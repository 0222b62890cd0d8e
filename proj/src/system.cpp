#include "impulse/system.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dsl_parser.hpp"
#include "impulse/errors.hpp"
#include "impulse/sampling.hpp"

namespace impulse {

using expr::Bindings;
using expr::Expr;
using expr::VarKind;

namespace {

std::span<const double> view(const VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_vector(const VectorXd& v) {
  if (v.size() == 1) return fmt_double(v[0]);
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += fmt_double(v[i]);
  }
  return s + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// Sets

ImpulseDomain ImpulseDomain::full(int m) {
  ImpulseDomain d;
  d.kind_ = Kind::Full;
  d.dim_ = m;
  return d;
}

ImpulseDomain ImpulseDomain::box(VectorXd lo, VectorXd hi) {
  if (lo.size() != hi.size()) throw ValidationError("box: bound dimensions differ");
  if ((lo.array() > hi.array()).any()) throw ValidationError("box: lower bound exceeds upper bound");
  ImpulseDomain d;
  d.kind_ = Kind::Box;
  d.dim_ = static_cast<int>(lo.size());
  d.lo_ = std::move(lo);
  d.hi_ = std::move(hi);
  return d;
}

ImpulseDomain ImpulseDomain::polytope(MatrixXd a, VectorXd b) {
  if (a.rows() != b.size()) throw ValidationError("polytope: row count mismatch");
  ImpulseDomain d;
  d.kind_ = Kind::Polytope;
  d.dim_ = static_cast<int>(a.cols());
  d.a_ = std::move(a);
  d.b_ = std::move(b);
  return d;
}

bool ImpulseDomain::contains(const VectorXd& u, double tol) const {
  if (u.size() != dim_ || !u.allFinite()) return false;
  switch (kind_) {
    case Kind::Full: return true;
    case Kind::Box: return (u.array() >= lo_.array() - tol).all() && (u.array() <= hi_.array() + tol).all();
    case Kind::Polytope: return ((a_ * u - b_).array() <= tol).all();
  }
  return false;
}

std::optional<std::pair<VectorXd, VectorXd>> ImpulseDomain::box_bounds() const {
  if (kind_ != Kind::Box) return std::nullopt;
  return std::make_pair(lo_, hi_);
}

std::string ImpulseDomain::str() const {
  switch (kind_) {
    case Kind::Full: return "full";
    case Kind::Box: return "box(" + fmt_vector(lo_) + ", " + fmt_vector(hi_) + ")";
    case Kind::Polytope: {
      std::string s = "polytope{";
      for (Eigen::Index r = 0; r < a_.rows(); ++r) {
        if (r) s += ", ";
        s += "(";
        for (Eigen::Index c = 0; c < a_.cols(); ++c) s += fmt_double(a_(r, c)) + ", ";
        s += fmt_double(b_[r]) + ")";
      }
      return s + "}";
    }
  }
  return "";
}

OrdinarySet OrdinarySet::box(VectorXd lo, VectorXd hi) {
  if (lo.size() != hi.size()) throw ValidationError("box: bound dimensions differ");
  if ((lo.array() > hi.array()).any()) throw ValidationError("box: lower bound exceeds upper bound");
  if (!lo.allFinite() || !hi.allFinite()) throw ValidationError("V must be bounded");
  OrdinarySet s;
  s.kind_ = Kind::Box;
  s.dim_ = static_cast<int>(lo.size());
  s.lo_ = std::move(lo);
  s.hi_ = std::move(hi);
  return s;
}

OrdinarySet OrdinarySet::finite(std::vector<VectorXd> points) {
  if (points.empty()) throw ValidationError("V: empty set");
  OrdinarySet s;
  s.kind_ = Kind::Finite;
  s.dim_ = static_cast<int>(points.front().size());
  for (const auto& p : points) {
    if (p.size() != s.dim_) throw ValidationError("V: points of different dimensions");
    if (!p.allFinite()) throw ValidationError("V: non-finite point");
  }
  s.points_ = std::move(points);
  s.lo_ = s.points_.front();
  s.hi_ = s.points_.front();
  for (const auto& p : s.points_) {
    s.lo_ = s.lo_.cwiseMin(p);
    s.hi_ = s.hi_.cwiseMax(p);
  }
  return s;
}

OrdinarySet OrdinarySet::empty() { return finite({VectorXd(0)}); }

bool OrdinarySet::contains(const VectorXd& v, double tol) const {
  if (v.size() != dim_) return false;
  if (kind_ == Kind::Box) {
    return (v.array() >= lo_.array() - tol).all() && (v.array() <= hi_.array() + tol).all();
  }
  for (const auto& p : points_) {
    if ((p - v).cwiseAbs().maxCoeff() <= tol || dim_ == 0) return true;
  }
  return false;
}

std::vector<VectorXd> OrdinarySet::discretize(int per_axis) const {
  if (kind_ == Kind::Finite) return points_;
  per_axis = std::max(per_axis, 1);
  std::vector<VectorXd> out;
  std::vector<int> idx(static_cast<std::size_t>(dim_), 0);
  for (;;) {
    VectorXd p(dim_);
    for (int d = 0; d < dim_; ++d) {
      const double s = per_axis == 1 ? 0.5 : static_cast<double>(idx[static_cast<std::size_t>(d)]) / (per_axis - 1);
      p[d] = lo_[d] + s * (hi_[d] - lo_[d]);
    }
    out.push_back(p);
    int d = 0;
    while (d < dim_ && ++idx[static_cast<std::size_t>(d)] == per_axis) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == dim_) break;
  }
  return out;
}

std::string OrdinarySet::str() const {
  if (kind_ == Kind::Box) return "box(" + fmt_vector(lo_) + ", " + fmt_vector(hi_) + ")";
  std::string s = "set{";
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i) s += ", ";
    s += fmt_vector(points_[i]);
  }
  return s + "}";
}

// ---------------------------------------------------------------------------
// System

ControlAffineSystem::ControlAffineSystem(int n, int m, int l, std::vector<Expr> drift,
                                         std::vector<std::vector<Expr>> impulse, ImpulseDomain u_set,
                                         OrdinarySet v_set)
    : n_(n), m_(m), l_(l), f_(std::move(drift)), g_(std::move(impulse)), u_set_(std::move(u_set)),
      v_set_(std::move(v_set)) {
  if (n_ < 1 || m_ < 1 || l_ < 0) throw ValidationError("dimensions must satisfy n >= 1, m >= 1, l >= 0");
  if (static_cast<int>(f_.size()) != n_) throw ValidationError("drift has wrong length");
  if (static_cast<int>(g_.size()) != m_) throw ValidationError("wrong number of impulse fields");
  for (const auto& g : g_) {
    if (static_cast<int>(g.size()) != n_) throw ValidationError("impulse field has wrong length");
  }
  if (u_set_.dim() != m_) throw ValidationError("U has wrong dimension");
  if (v_set_.dim() != l_) throw ValidationError("V has wrong dimension");
  compile();
}

void ControlAffineSystem::compile() {
  f_prog_.clear();
  g_prog_.assign(static_cast<std::size_t>(m_), {});
  df_prog_.clear();
  dg_prog_.assign(static_cast<std::size_t>(m_), {});
  auto add_derivatives = [&](const Expr& e, std::vector<expr::Program>& out) {
    for (int j = 0; j < n_; ++j) out.emplace_back(e.derivative(VarKind::X, j));
    for (int b = 0; b < m_; ++b) out.emplace_back(e.derivative(VarKind::U, b));
  };
  for (const Expr& e : f_) {
    f_prog_.emplace_back(e);
    add_derivatives(e, df_prog_);
  }
  for (int a = 0; a < m_; ++a) {
    for (const Expr& e : g_[static_cast<std::size_t>(a)]) {
      g_prog_[static_cast<std::size_t>(a)].emplace_back(e);
      add_derivatives(e, dg_prog_[static_cast<std::size_t>(a)]);
    }
  }
}

ControlAffineSystem ControlAffineSystem::with_jacobians(JacobianSource source) const {
  ControlAffineSystem copy = *this;
  copy.jac_source_ = source;
  return copy;
}

void ControlAffineSystem::drift(const VectorXd& x, const VectorXd& u, const VectorXd& v,
                                Eigen::Ref<VectorXd> out) const {
  const Bindings b{view(x), view(u), view(v), 0.0};
  for (int i = 0; i < n_; ++i) out[i] = f_prog_[static_cast<std::size_t>(i)](b);
}

VectorXd ControlAffineSystem::drift(const VectorXd& x, const VectorXd& u, const VectorXd& v) const {
  VectorXd out(n_);
  drift(x, u, v, out);
  return out;
}

void ControlAffineSystem::impulse(int alpha, const VectorXd& x, const VectorXd& u,
                                  Eigen::Ref<VectorXd> out) const {
  const Bindings b{view(x), view(u), {}, 0.0};
  const auto& progs = g_prog_[static_cast<std::size_t>(alpha)];
  for (int i = 0; i < n_; ++i) out[i] = progs[static_cast<std::size_t>(i)](b);
}

VectorXd ControlAffineSystem::impulse(int alpha, const VectorXd& x, const VectorXd& u) const {
  VectorXd out(n_);
  impulse(alpha, x, u, out);
  return out;
}

namespace {

template <typename Fn>
MatrixXd central_jacobian(int n, int m, const VectorXd& x, const VectorXd& u, Fn&& fn) {
  MatrixXd j(n, n + m);
  VectorXd xp = x, up = u;
  for (int c = 0; c < n + m; ++c) {
    double& coord = c < n ? xp[c] : up[c - n];
    const double orig = coord;
    const double h = fd_step(orig);
    coord = orig + h;
    const VectorXd plus = fn(xp, up);
    coord = orig - h;
    const VectorXd minus = fn(xp, up);
    coord = orig;
    j.col(c) = (plus - minus) / (2.0 * h);
  }
  return j;
}

}  // namespace

MatrixXd ControlAffineSystem::drift_jacobian(const VectorXd& x, const VectorXd& u, const VectorXd& v) const {
  if (jac_source_ == JacobianSource::FiniteDifference) {
    return central_jacobian(n_, m_, x, u, [&](const VectorXd& xx, const VectorXd& uu) { return drift(xx, uu, v); });
  }
  const Bindings b{view(x), view(u), view(v), 0.0};
  MatrixXd j(n_, n_ + m_);
  for (int i = 0; i < n_; ++i) {
    for (int c = 0; c < n_ + m_; ++c) j(i, c) = df_prog_[static_cast<std::size_t>(i * (n_ + m_) + c)](b);
  }
  return j;
}

MatrixXd ControlAffineSystem::impulse_jacobian(int alpha, const VectorXd& x, const VectorXd& u) const {
  if (jac_source_ == JacobianSource::FiniteDifference) {
    return central_jacobian(n_, m_, x, u,
                            [&](const VectorXd& xx, const VectorXd& uu) { return impulse(alpha, xx, uu); });
  }
  const Bindings b{view(x), view(u), {}, 0.0};
  const auto& progs = dg_prog_[static_cast<std::size_t>(alpha)];
  MatrixXd j(n_, n_ + m_);
  for (int i = 0; i < n_; ++i) {
    for (int c = 0; c < n_ + m_; ++c) j(i, c) = progs[static_cast<std::size_t>(i * (n_ + m_) + c)](b);
  }
  return j;
}

void ControlAffineSystem::impulse_jvp(int alpha, const VectorXd& x, const VectorXd& u, const VectorXd& dx,
                                      const VectorXd& du, Eigen::Ref<VectorXd> out) const {
  if (jac_source_ == JacobianSource::FiniteDifference) {
    const double dnorm = std::sqrt(dx.squaredNorm() + du.squaredNorm());
    if (dnorm == 0.0) {
      out.setZero();
      return;
    }
    const double pnorm = std::sqrt(x.squaredNorm() + u.squaredNorm());
    const double h = fd_step(pnorm) / dnorm;
    const VectorXd plus = impulse(alpha, x + h * dx, u + h * du);
    const VectorXd minus = impulse(alpha, x - h * dx, u - h * du);
    out = (plus - minus) / (2.0 * h);
    return;
  }
  const Bindings b{view(x), view(u), {}, 0.0};
  const auto& progs = dg_prog_[static_cast<std::size_t>(alpha)];
  for (int i = 0; i < n_; ++i) {
    double acc = 0.0;
    const std::size_t row = static_cast<std::size_t>(i * (n_ + m_));
    for (int c = 0; c < n_; ++c) {
      if (dx[c] != 0.0) acc += progs[row + static_cast<std::size_t>(c)](b) * dx[c];
    }
    for (int c = 0; c < m_; ++c) {
      if (du[c] != 0.0) acc += progs[row + static_cast<std::size_t>(n_ + c)](b) * du[c];
    }
    out[i] = acc;
  }
}

VectorXd ControlAffineSystem::extended_drift(const VectorXd& p, const VectorXd& v) const {
  VectorXd out = VectorXd::Zero(n_ + m_);
  drift(p.head(n_), p.tail(m_), v, out.head(n_));
  return out;
}

VectorXd ControlAffineSystem::extended_impulse(int alpha, const VectorXd& p) const {
  VectorXd out = VectorXd::Zero(n_ + m_);
  impulse(alpha, p.head(n_), p.tail(m_), out.head(n_));
  out[n_ + alpha] = 1.0;
  return out;
}

MatrixXd ControlAffineSystem::extended_impulse_jacobian(int alpha, const VectorXd& p) const {
  MatrixXd j = MatrixXd::Zero(n_ + m_, n_ + m_);
  j.topRows(n_) = impulse_jacobian(alpha, p.head(n_), p.tail(m_));
  return j;
}

std::string ControlAffineSystem::to_dsl() const {
  std::ostringstream os;
  os << "n=" << n_ << "; m=" << m_ << "; l=" << l_ << "\n";
  auto vec = [](const std::vector<Expr>& es) {
    if (es.size() == 1) return es[0].str();
    std::string s = "(";
    for (std::size_t i = 0; i < es.size(); ++i) {
      if (i) s += ", ";
      s += es[i].str();
    }
    return s + ")";
  };
  os << "f = " << vec(f_) << "\n";
  for (int a = 0; a < m_; ++a) os << "g" << a + 1 << " = " << vec(g_[static_cast<std::size_t>(a)]) << "\n";
  os << "U = " << u_set_.str() << "\n";
  if (l_ > 0) os << "V = " << v_set_.str() << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// DSL

namespace {

struct FieldDecl {
  std::vector<Expr> exprs;
  dsl::Token at;
};

VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

VectorXd broadcast(const std::vector<double>& v, int dim, const dsl::Parser& p, const dsl::Token& at) {
  if (static_cast<int>(v.size()) == dim) return to_vector(v);
  if (v.size() == 1) return VectorXd::Constant(dim, v[0]);
  p.fail_at(at, "dimension mismatch: expected " + std::to_string(dim) + " components, got " +
                    std::to_string(v.size()));
}

struct SetDecl {
  std::string kind;
  std::vector<std::vector<double>> items;  // box: {lo, hi}; set / polytope: elements
  dsl::Token at;
};

SetDecl parse_set(dsl::Parser& p) {
  SetDecl d;
  d.at = p.peek();
  d.kind = p.expect_ident();
  if (d.kind == "full") return d;
  if (d.kind == "box") {
    p.expect_punct('(');
    d.items.push_back(p.constant_vector());
    p.expect_punct(',');
    d.items.push_back(p.constant_vector());
    p.expect_punct(')');
    return d;
  }
  if (d.kind == "set" || d.kind == "polytope") {
    p.expect_punct('{');
    for (;;) {
      while (p.peek().kind == dsl::Tok::Newline) p.next();
      d.items.push_back(p.constant_vector());
      while (p.peek().kind == dsl::Tok::Newline) p.next();
      if (p.at_punct(',')) {
        p.next();
        continue;
      }
      p.expect_punct('}');
      break;
    }
    return d;
  }
  p.fail_at(d.at, "unknown set descriptor '" + d.kind + "' (expected box, set, polytope or full)");
}

void check_vars(const dsl::Parser& p, const FieldDecl& d, int n, int m, int l, bool allow_v,
                const std::string& name) {
  for (const Expr& e : d.exprs) {
    if (e.depends_on(VarKind::T)) p.fail_at(d.at, "unknown identifier 't' in " + name);
    if (const int i = e.max_index(VarKind::X); i >= n) {
      p.fail_at(d.at, "unknown identifier '" + expr::var_name(VarKind::X, i) + "' in " + name + " (n=" +
                          std::to_string(n) + ")");
    }
    if (const int i = e.max_index(VarKind::U); i >= m) {
      p.fail_at(d.at, "unknown identifier '" + expr::var_name(VarKind::U, i) + "' in " + name + " (m=" +
                          std::to_string(m) + ")");
    }
    if (const int i = e.max_index(VarKind::V); i >= 0 && (!allow_v || i >= l)) {
      p.fail_at(d.at, "unknown identifier '" + expr::var_name(VarKind::V, i) + "' in " + name +
                          (allow_v ? " (l=" + std::to_string(l) + ")" : " (impulse fields cannot use v)"));
    }
  }
}

}  // namespace

ControlAffineSystem parse_system(std::string_view source) {
  dsl::Parser p(dsl::tokenize(source));
  std::map<std::string, int> dims;
  std::optional<FieldDecl> f;
  std::map<int, FieldDecl> g;
  std::optional<SetDecl> u_decl, v_decl;

  for (;;) {
    p.skip_separators();
    if (p.at_end()) break;
    const dsl::Token head = p.peek();
    const std::string name = p.expect_ident();
    p.expect_punct('=');
    if (name == "n" || name == "m" || name == "l") {
      const dsl::Token at = p.peek();
      const double value = p.constant_expression();
      if (value != std::floor(value) || value < 0 || value > 1e6) {
        p.fail_at(at, name + " must be a non-negative integer");
      }
      if (dims.count(name)) p.fail_at(head, name + " declared twice");
      dims[name] = static_cast<int>(value);
    } else if (name == "f") {
      if (f) p.fail_at(head, "f declared twice");
      f = FieldDecl{{}, p.peek()};
      f->exprs = p.vector_or_scalar();
    } else if (name.size() >= 2 && name[0] == 'g' &&
               name.find_first_not_of("0123456789", 1) == std::string::npos && name[1] != '0') {
      const int k = std::stoi(name.substr(1));
      if (g.count(k)) p.fail_at(head, name + " declared twice");
      FieldDecl d{{}, p.peek()};
      d.exprs = p.vector_or_scalar();
      g[k] = std::move(d);
    } else if (name == "U") {
      u_decl = parse_set(p);
    } else if (name == "V") {
      v_decl = parse_set(p);
    } else {
      p.fail_at(head, "unknown identifier '" + name + "'");
    }
    if (!p.at_statement_end()) p.fail("expected end of statement, found '" + p.peek().text + "'");
  }

  const dsl::Token end = p.peek();
  for (const char* key : {"n", "m"}) {
    if (!dims.count(key)) p.fail_at(end, std::string("missing header value ") + key);
  }
  const int n = dims["n"];
  const int m = dims["m"];
  const int l = dims.count("l") ? dims["l"] : 0;
  if (n < 1) p.fail_at(end, "n must be at least 1");
  if (m < 1) p.fail_at(end, "m must be at least 1");
  if (!f) p.fail_at(end, "missing drift declaration 'f = ...'");

  // a bare 0 stands for the zero vector
  auto check_len = [&](FieldDecl& d, const std::string& what) {
    if (d.exprs.size() == 1 && d.exprs[0].is_zero()) d.exprs.assign(static_cast<std::size_t>(n), Expr());
    if (static_cast<int>(d.exprs.size()) != n) {
      p.fail_at(d.at, "dimension mismatch: " + what + " has " + std::to_string(d.exprs.size()) +
                          " components, expected n=" + std::to_string(n));
    }
  };
  check_len(*f, "f");
  check_vars(p, *f, n, m, l, true, "f");
  std::vector<std::vector<Expr>> impulse;
  for (int k = 1; k <= m; ++k) {
    auto it = g.find(k);
    if (it == g.end()) p.fail_at(end, "missing impulse field g" + std::to_string(k));
    check_len(it->second, "g" + std::to_string(k));
    check_vars(p, it->second, n, m, l, false, "g" + std::to_string(k));
    impulse.push_back(it->second.exprs);
  }
  if (!g.empty() && g.rbegin()->first > m) {
    const auto& extra = *g.rbegin();
    p.fail_at(extra.second.at, "dimension mismatch: g" + std::to_string(extra.first) + " declared but m=" +
                                   std::to_string(m));
  }

  ImpulseDomain u_set = ImpulseDomain::full(m);
  if (u_decl) {
    if (u_decl->kind == "box") {
      u_set = ImpulseDomain::box(broadcast(u_decl->items[0], m, p, u_decl->at),
                                 broadcast(u_decl->items[1], m, p, u_decl->at));
    } else if (u_decl->kind == "polytope") {
      MatrixXd a(static_cast<Eigen::Index>(u_decl->items.size()), m);
      VectorXd b(static_cast<Eigen::Index>(u_decl->items.size()));
      for (std::size_t r = 0; r < u_decl->items.size(); ++r) {
        const auto& row = u_decl->items[r];
        if (static_cast<int>(row.size()) != m + 1) {
          p.fail_at(u_decl->at, "polytope rows need m+1 entries (normal, offset)");
        }
        for (int c = 0; c < m; ++c) a(static_cast<Eigen::Index>(r), c) = row[static_cast<std::size_t>(c)];
        b[static_cast<Eigen::Index>(r)] = row.back();
      }
      u_set = ImpulseDomain::polytope(a, b);
    } else if (u_decl->kind == "set") {
      p.fail_at(u_decl->at, "U must be a box, a polytope or full (finite sets are not impulse domains)");
    }
  }

  OrdinarySet v_set = OrdinarySet::empty();
  if (l > 0) {
    if (!v_decl) {
      v_set = OrdinarySet::box(VectorXd::Zero(l), VectorXd::Ones(l));
    } else if (v_decl->kind == "box") {
      v_set = OrdinarySet::box(broadcast(v_decl->items[0], l, p, v_decl->at),
                               broadcast(v_decl->items[1], l, p, v_decl->at));
    } else if (v_decl->kind == "set") {
      std::vector<VectorXd> pts;
      for (const auto& item : v_decl->items) pts.push_back(broadcast(item, l, p, v_decl->at));
      v_set = OrdinarySet::finite(std::move(pts));
    } else {
      p.fail_at(v_decl->at, "V must be a box or a finite set (compact)");
    }
  } else if (v_decl) {
    p.fail_at(v_decl->at, "V declared but l = 0");
  }

  return ControlAffineSystem(n, m, l, f->exprs, std::move(impulse), std::move(u_set), std::move(v_set));
}

ControlAffineSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open system file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_system(ss.str());
}

// ---------------------------------------------------------------------------
// Hypotheses

VectorXd lie_bracket(const ControlAffineSystem& sys, int alpha, int beta, const VectorXd& p) {
  if (alpha < 0 || alpha >= sys.m() || beta < 0 || beta >= sys.m()) {
    throw ValidationError("lie_bracket: index out of range");
  }
  if (p.size() != sys.n() + sys.m()) throw ValidationError("lie_bracket: point has wrong dimension");
  const VectorXd ga = sys.extended_impulse(alpha, p);
  const VectorXd gb = sys.extended_impulse(beta, p);
  const VectorXd out =
      sys.extended_impulse_jacobian(beta, p) * ga - sys.extended_impulse_jacobian(alpha, p) * gb;
  if (!out.allFinite()) throw IntegrationError("lie_bracket: non-finite Jacobian");
  return out;
}

HypothesisReport check_hypotheses(const ControlAffineSystem& sys, const VectorXd& lo, const VectorXd& hi,
                                  int n_samples, double tol_bracket_scale) {
  const int n = sys.n();
  const int m = sys.m();
  if (lo.size() != n + m || hi.size() != n + m) throw ValidationError("check_hypotheses: box dimension");
  if (n_samples < 1) throw ValidationError("check_hypotheses: n_samples must be >= 1");

  HypothesisReport rep;
  rep.tol_bracket_scale = tol_bracket_scale;
  rep.bracket_sample_points = halton_points(n_samples, lo, hi);
  const auto v_samples = sys.V().discretize(3);

  double worst_ratio = 0.0;
  double sum_rr = 0.0, sum_rf = 0.0, sum_rg = 0.0;
  for (const VectorXd& pt : rep.bracket_sample_points) {
    const double tol = tol_bracket_scale * (1.0 + pt.squaredNorm());
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b) {
        const double norm = lie_bracket(sys, a, b, pt).norm();
        rep.max_bracket_norm = std::max(rep.max_bracket_norm, norm);
        if (norm > tol) rep.pass_commutativity = false;
        if (norm / tol > worst_ratio) {
          worst_ratio = norm / tol;
          rep.worst = BracketViolation{a, b, pt, norm};
        }
      }
    }
    const VectorXd x = pt.head(n);
    const VectorXd u = pt.tail(m);
    const double r = 1.0 + pt.norm();
    double fmax = 0.0;
    for (const VectorXd& v : v_samples) {
      fmax = std::max(fmax, sys.drift(x, u, v).norm());
      rep.lipschitz_estimate = std::max(rep.lipschitz_estimate, sys.drift_jacobian(x, u, v).operatorNorm());
    }
    double gmax = 0.0;
    for (int a = 0; a < m; ++a) {
      gmax = std::max(gmax, sys.extended_impulse(a, pt).norm());
      rep.impulse_lipschitz_estimate =
          std::max(rep.impulse_lipschitz_estimate, sys.impulse_jacobian(a, x, u).operatorNorm());
    }
    rep.lipschitz_estimate = std::max(rep.lipschitz_estimate, rep.impulse_lipschitz_estimate);
    sum_rr += r * r;
    sum_rf += r * fmax;
    sum_rg += r * gmax;
    rep.growth_m_max_ratio = std::max(rep.growth_m_max_ratio, fmax / r);
    rep.growth_n_max_ratio = std::max(rep.growth_n_max_ratio, gmax / r);
  }
  rep.growth_m = sum_rf / sum_rr;
  rep.growth_n = sum_rg / sum_rr;
  rep.pass_growth = std::isfinite(rep.growth_m) && std::isfinite(rep.growth_n) &&
                    std::isfinite(rep.growth_m_max_ratio) && std::isfinite(rep.growth_n_max_ratio);
  rep.pass_v_compact = sys.V().kind() == OrdinarySet::Kind::Finite ||
                       (sys.V().lo().allFinite() && sys.V().hi().allFinite());
  rep.pass_u_impulse_domain = sys.U().is_convex();
  return rep;
}

}  // namespace impulse
