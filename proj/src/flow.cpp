#include "translatorlab/flow.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "translatorlab/parallel.hpp"

namespace tlab::flow {

namespace {

// Cut fractions are clamped from below in the stencils: the explicit update
// has coefficients of order 1/theta at cut cells and loses stability for
// tiny cuts. The boundary value stays at the true cut point and the
// quadrature keeps the true fraction, so the clamp only stretches the
// stencil geometry by O(h) at a cut cell.
constexpr double kThetaMin = 0.25;

double frobenius(const Matrix& m) { return std::sqrt(m.squaredNorm()); }

double spectral_norm_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// DomainSpec
// ---------------------------------------------------------------------------

DomainSpec DomainSpec::rectangle(const Vector& lo, const Vector& hi) {
  require(lo.size() >= 1 && lo.size() <= 2 && lo.size() == hi.size(),
          ErrorCode::invalid_argument, "rectangle: dimension must be 1 or 2");
  for (int i = 0; i < lo.size(); ++i)
    require(lo(i) < hi(i), ErrorCode::invalid_argument,
            "rectangle: extents must be nonempty");
  DomainSpec d;
  d.kind_ = ShapeKind::rectangle;
  d.dim_ = static_cast<int>(lo.size());
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

DomainSpec DomainSpec::disc(const Vector& center, double radius) {
  require(center.size() == 2, ErrorCode::invalid_argument,
          "disc: center must be 2d");
  require(radius > 0, ErrorCode::invalid_argument, "disc: radius must be > 0");
  DomainSpec d;
  d.kind_ = ShapeKind::disc;
  d.dim_ = 2;
  d.center_ = center;
  d.radius_ = radius;
  return d;
}

DomainSpec DomainSpec::ellipse(const Vector& center, const Vector& semi_axes) {
  require(center.size() == 2 && semi_axes.size() == 2,
          ErrorCode::invalid_argument, "ellipse: center and axes must be 2d");
  require(semi_axes.minCoeff() > 0, ErrorCode::invalid_argument,
          "ellipse: semi-axes must be > 0");
  DomainSpec d;
  d.kind_ = ShapeKind::ellipse;
  d.dim_ = 2;
  d.center_ = center;
  d.semi_ = semi_axes;
  return d;
}

double DomainSpec::diameter() const {
  switch (kind_) {
    case ShapeKind::rectangle:
      return (hi_ - lo_).norm();
    case ShapeKind::disc:
      return 2.0 * radius_;
    case ShapeKind::ellipse:
      return 2.0 * semi_.maxCoeff();
  }
  return 0;
}

Vector DomainSpec::anchor() const {
  return kind_ == ShapeKind::rectangle ? lo_ : center_;
}

bool DomainSpec::inside(const Vector& x) const {
  switch (kind_) {
    case ShapeKind::rectangle:
      for (int i = 0; i < dim_; ++i)
        if (x(i) <= lo_(i) || x(i) >= hi_(i)) return false;
      return true;
    case ShapeKind::disc:
      return (x - center_).norm() < radius_;
    case ShapeKind::ellipse: {
      double q = 0;
      for (int i = 0; i < 2; ++i) {
        const double y = (x(i) - center_(i)) / semi_(i);
        q += y * y;
      }
      return q < 1.0;
    }
  }
  return false;
}

double DomainSpec::exit_fraction(const Vector& x, const Vector& arm) const {
  double t = std::numeric_limits<double>::infinity();
  if (kind_ == ShapeKind::rectangle) {
    for (int i = 0; i < dim_; ++i) {
      if (arm(i) == 0.0) continue;
      const double bound = arm(i) > 0 ? hi_(i) : lo_(i);
      t = std::min(t, (bound - x(i)) / arm(i));
    }
  } else {
    Vector y = x - center_;
    Vector d = arm;
    double r = radius_;
    if (kind_ == ShapeKind::ellipse) {
      y = y.cwiseQuotient(semi_);
      d = d.cwiseQuotient(semi_);
      r = 1.0;
    }
    const double a = d.squaredNorm();
    const double b = y.dot(d);
    const double c0 = y.squaredNorm() - r * r;
    const double disc = b * b - a * c0;
    require(disc >= 0 && a > 0, ErrorCode::invalid_argument,
            "exit fraction: ray misses the boundary");
    t = (-b + std::sqrt(disc)) / a;
  }
  require(t > 0 && t <= 1.0 + 1e-9, ErrorCode::invalid_argument,
          "exit fraction: arm does not leave the domain");
  return std::min(t, 1.0);
}

Vector DomainSpec::outward_normal(const Vector& p) const {
  const double tol = 1e-9 * (1.0 + diameter());
  Vector n = Vector::Zero(dim_);
  switch (kind_) {
    case ShapeKind::rectangle:
      for (int i = 0; i < dim_; ++i) {
        if (std::abs(p(i) - hi_(i)) <= tol) n(i) += 1.0;
        if (std::abs(p(i) - lo_(i)) <= tol) n(i) -= 1.0;
      }
      break;
    case ShapeKind::disc:
      n = p - center_;
      break;
    case ShapeKind::ellipse:
      for (int i = 0; i < 2; ++i)
        n(i) = (p(i) - center_(i)) / (semi_(i) * semi_(i));
      break;
  }
  const double norm = n.norm();
  require(norm > 0, ErrorCode::invalid_argument,
          "outward normal: point is not on the boundary");
  return n / norm;
}

bool DomainSpec::on_boundary(const Vector& p, double tol) const {
  switch (kind_) {
    case ShapeKind::rectangle: {
      bool touches = false;
      for (int i = 0; i < dim_; ++i) {
        if (p(i) < lo_(i) - tol || p(i) > hi_(i) + tol) return false;
        if (std::abs(p(i) - lo_(i)) <= tol || std::abs(p(i) - hi_(i)) <= tol)
          touches = true;
      }
      return touches;
    }
    case ShapeKind::disc:
      return std::abs((p - center_).norm() - radius_) <= tol;
    case ShapeKind::ellipse: {
      double q = 0;
      for (int i = 0; i < 2; ++i) {
        const double y = (p(i) - center_(i)) / semi_(i);
        q += y * y;
      }
      return std::abs(q - 1.0) <= 2.0 * tol / semi_.minCoeff();
    }
  }
  return false;
}

std::vector<Vector> DomainSpec::boundary_samples(int count) const {
  std::vector<Vector> out;
  if (dim_ == 1) {
    out.push_back(lo_);
    out.push_back(hi_);
    return out;
  }
  out.reserve(count);
  if (kind_ == ShapeKind::rectangle) {
    const int per_edge = std::max(2, count / 4);
    for (int e = 0; e < 4; ++e) {
      for (int i = 0; i < per_edge; ++i) {
        const double t = static_cast<double>(i) / per_edge;
        Vector p(2);
        switch (e) {
          case 0: p << lo_(0) + t * (hi_(0) - lo_(0)), lo_(1); break;
          case 1: p << hi_(0), lo_(1) + t * (hi_(1) - lo_(1)); break;
          case 2: p << hi_(0) - t * (hi_(0) - lo_(0)), hi_(1); break;
          default: p << lo_(0), hi_(1) - t * (hi_(1) - lo_(1)); break;
        }
        out.push_back(p);
      }
    }
  } else {
    const Vector a = kind_ == ShapeKind::disc
                         ? Vector::Constant(2, radius_)
                         : semi_;
    for (int i = 0; i < count; ++i) {
      const double phi = 2.0 * M_PI * i / count;
      Vector p(2);
      p << center_(0) + a(0) * std::cos(phi), center_(1) + a(1) * std::sin(phi);
      out.push_back(p);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Boundary data
// ---------------------------------------------------------------------------

BoundaryData psi_zero(int n, int k) {
  BoundaryData b;
  b.n = n;
  b.k = k;
  b.value = [k](const Vector&) { return Vector::Zero(k); };
  b.jacobian = [k, n](const Vector&) { return Matrix::Zero(k, n); };
  b.hessian = [n](const Vector&, int) { return Matrix::Zero(n, n); };
  return b;
}

BoundaryData psi_affine(const Matrix& linear, const Vector& constant) {
  BoundaryData b;
  b.k = static_cast<int>(linear.rows());
  b.n = static_cast<int>(linear.cols());
  require(constant.size() == b.k, ErrorCode::invalid_argument,
          "psi: constant size mismatch");
  const Matrix A = linear;
  const Vector c = constant;
  const int n = b.n;
  b.value = [A, c](const Vector& x) { return Vector(A * x + c); };
  b.jacobian = [A](const Vector&) { return A; };
  b.hessian = [n](const Vector&, int) { return Matrix::Zero(n, n); };
  b.sup_dpsi_boundary = frobenius(A);
  return b;
}

BoundaryData psi_quadratic(const std::vector<Matrix>& quadratic,
                           const Matrix& linear, const Vector& constant,
                           const DomainSpec& spec) {
  BoundaryData b;
  b.k = static_cast<int>(linear.rows());
  b.n = static_cast<int>(linear.cols());
  require(static_cast<int>(quadratic.size()) == b.k,
          ErrorCode::invalid_argument, "psi: quadratic size mismatch");
  for (const Matrix& q : quadratic)
    require(q.rows() == b.n && q.cols() == b.n &&
                (q - q.transpose()).cwiseAbs().maxCoeff() == 0.0,
            ErrorCode::invalid_argument,
            "psi: quadratic coefficients must be symmetric n x n");
  const std::vector<Matrix> Q = quadratic;
  const Matrix A = linear;
  const Vector c = constant;
  const int k = b.k, n = b.n;
  b.value = [Q, A, c, k](const Vector& x) {
    Vector v = A * x + c;
    for (int a = 0; a < k; ++a) v(a) += 0.5 * x.dot(Q[a] * x);
    return v;
  };
  b.jacobian = [Q, A, k, n](const Vector& x) {
    Matrix j(k, n);
    for (int a = 0; a < k; ++a)
      j.row(a) = (Q[a] * x).transpose() + A.row(a);
    return j;
  };
  b.hessian = [Q](const Vector&, int a) { return Q[a]; };
  for (const Matrix& q : Q)
    b.sup_d2psi = std::max(b.sup_d2psi, spectral_norm_sym(q));
  double sup = 0;
  for (const Vector& p : spec.boundary_samples(8192))
    sup = std::max(sup, frobenius(b.jacobian(p)));
  b.sup_dpsi_boundary = sup;
  return b;
}

BoundaryData psi_custom(int n, int k,
                        std::function<Vector(const Vector&)> value,
                        std::function<Matrix(const Vector&)> jacobian,
                        std::function<Matrix(const Vector&, int)> hessian,
                        const DomainSpec& spec) {
  BoundaryData b;
  b.n = n;
  b.k = k;
  b.value = std::move(value);
  b.jacobian = std::move(jacobian);
  b.hessian = std::move(hessian);
  // certify the sup values on a dense probe set
  double sup2 = 0;
  const Vector lo = spec.kind() == ShapeKind::rectangle
                        ? spec.rect_lo()
                        : Vector(spec.center() -
                                 Vector::Constant(2, spec.diameter() / 2));
  const Vector hi = spec.kind() == ShapeKind::rectangle
                        ? spec.rect_hi()
                        : Vector(spec.center() +
                                 Vector::Constant(2, spec.diameter() / 2));
  const int m = n == 1 ? 512 : 96;
  std::vector<int> idx(n, 0);
  while (true) {
    Vector x(n);
    for (int i = 0; i < n; ++i)
      x(i) = lo(i) + (hi(i) - lo(i)) * idx[i] / (m - 1);
    if (spec.inside(x))
      for (int a = 0; a < k; ++a)
        sup2 = std::max(sup2, spectral_norm_sym(b.hessian(x, a)));
    int i = 0;
    while (i < n && ++idx[i] == m) idx[i++] = 0;
    if (i == n) break;
  }
  b.sup_d2psi = sup2;
  double sup1 = 0;
  for (const Vector& p : spec.boundary_samples(8192))
    sup1 = std::max(sup1, frobenius(b.jacobian(p)));
  b.sup_dpsi_boundary = sup1;
  return b;
}

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

Grid discretize_domain(const DomainSpec& spec, double h) {
  require(h > 0, ErrorCode::invalid_argument, "grid: h must be positive");
  const double D = spec.diameter();
  require(h <= D / 2.0, ErrorCode::invalid_argument,
          "grid: resolution too coarse for the domain");

  Grid g;
  g.spec = spec;
  g.h = h;
  g.dim = spec.dim();
  g.families = g.dim == 1 ? 1 : 4;
  g.anchor = spec.anchor();

  // lattice bounds covering the bounding box
  Vector bb_lo(g.dim), bb_hi(g.dim);
  if (spec.kind() == ShapeKind::rectangle) {
    bb_lo = spec.rect_lo();
    bb_hi = spec.rect_hi();
  } else {
    const Vector half = spec.kind() == ShapeKind::disc
                            ? Vector(Vector::Constant(2, spec.radius()))
                            : spec.semi_axes();
    bb_lo = spec.center() - half;
    bb_hi = spec.center() + half;
  }
  for (int a = 0; a < g.dim; ++a) {
    g.base[a] = static_cast<int>(std::floor((bb_lo(a) - g.anchor(a)) / h)) - 1;
    const int top = static_cast<int>(std::ceil((bb_hi(a) - g.anchor(a)) / h)) + 1;
    g.shape[a] = top - g.base[a] + 1;
  }
  if (g.dim == 1) g.shape[1] = 1;

  auto coord = [&](int i, int j) {
    Vector x(g.dim);
    x(0) = g.anchor(0) + (g.base[0] + i) * h;
    if (g.dim == 2) x(1) = g.anchor(1) + (g.base[1] + j) * h;
    return x;
  };

  g.ordinal.assign(static_cast<std::size_t>(g.shape[0]) * g.shape[1], 0);
  for (int j = 0; j < g.shape[1]; ++j) {
    for (int i = 0; i < g.shape[0]; ++i) {
      const Vector x = coord(i, j);
      if (!spec.inside(x)) continue;
      g.ordinal[j * g.shape[0] + i] = static_cast<int>(g.position.size()) + 1;
      g.position.push_back(x);
    }
  }
  require(g.count() > 0, ErrorCode::invalid_argument,
          "grid: no interior nodes at this resolution");

  static const int dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  const int arms = g.count() * g.families * 2;
  g.arm_neighbor.assign(arms, -1);
  g.arm_theta.assign(arms, 1.0);
  g.arm_cut_point.assign(arms, Vector());
  g.cell_volume.assign(g.count(), 0.0);
  g.boundary_adjacent.assign(g.count(), 0);

  int node = 0;
  for (int j = 0; j < g.shape[1]; ++j) {
    for (int i = 0; i < g.shape[0]; ++i) {
      if (g.ordinal[j * g.shape[0] + i] == 0) continue;
      const Vector x = coord(i, j);
      double volume = 1.0;
      for (int fam = 0; fam < g.families; ++fam) {
        double cover = 0.0;
        for (int side = 0; side < 2; ++side) {
          const int sgn = side == 0 ? -1 : 1;
          const int ni = i + sgn * dirs[fam][0];
          const int nj = j + sgn * (g.dim == 2 ? dirs[fam][1] : 0);
          const int a = g.arm_index(node, fam, side);
          int nb = 0;
          if (ni >= 0 && ni < g.shape[0] && nj >= 0 && nj < g.shape[1])
            nb = g.ordinal[nj * g.shape[0] + ni];
          if (nb > 0) {
            g.arm_neighbor[a] = nb - 1;
            g.arm_theta[a] = 1.0;
            if (fam < g.dim) cover += 0.5 * h;
          } else {
            Vector arm = Vector::Zero(g.dim);
            arm(0) = sgn * dirs[fam][0] * h;
            if (g.dim == 2) arm(1) = sgn * dirs[fam][1] * h;
            const double theta = spec.exit_fraction(x, arm);
            g.arm_neighbor[a] = -1;
            g.arm_theta[a] = std::max(theta, kThetaMin);
            g.arm_cut_point[a] = x + theta * arm;
            g.boundary_adjacent[node] = 1;
            if (fam < g.dim) cover += theta * h;
          }
        }
        if (fam < g.dim) volume *= cover;
      }
      g.cell_volume[node] = volume;
      ++node;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Problem setup
// ---------------------------------------------------------------------------

Problem make_problem(const DomainSpec& spec, double h, const BoundaryData& psi,
                     const Vector& w, const std::vector<Vector>& barrier_points) {
  require(psi.n == spec.dim(), ErrorCode::invalid_argument,
          "psi dimension does not match the domain");
  require(w.size() == psi.k, ErrorCode::invalid_argument,
          "drift size does not match psi components");
  Problem pb;
  pb.grid = discretize_domain(spec, h);
  pb.psi = psi;
  pb.w = w;
  pb.k = psi.k;

  const Grid& g = pb.grid;
  const int N = g.count();
  const int k = pb.k;
  pb.psi_interior.resize(static_cast<std::size_t>(N) * k);
  pb.psi_hess.assign(static_cast<std::size_t>(N) * k * 3, 0.0);
  pb.sup_psi.assign(k, 0.0);
  for (int node = 0; node < N; ++node) {
    const Vector v = psi.value(g.position[node]);
    for (int a = 0; a < k; ++a) {
      pb.psi_interior[node * k + a] = v(a);
      pb.sup_psi[a] = std::max(pb.sup_psi[a], std::abs(v(a)));
      const Matrix hess = psi.hessian(g.position[node], a);
      double* slot = &pb.psi_hess[(static_cast<std::size_t>(node) * k + a) * 3];
      slot[0] = hess(0, 0);
      if (g.dim == 2) {
        slot[1] = hess(0, 1);
        slot[2] = hess(1, 1);
      }
    }
  }
  pb.arm_psi.assign(g.arm_theta.size() * k, 0.0);
  for (std::size_t a = 0; a < g.arm_theta.size(); ++a) {
    if (g.arm_neighbor[a] >= 0) continue;
    pb.cut_arms.push_back(static_cast<int>(a));
    const Vector v = psi.value(g.arm_cut_point[a]);
    for (int c = 0; c < k; ++c) {
      pb.arm_psi[a * k + c] = v(c);
      pb.sup_psi[c] = std::max(pb.sup_psi[c], std::abs(v(c)));
    }
  }

  if (barrier_points.empty()) {
    // canonical point: boundary in the +x direction from the anchor side
    Vector p;
    switch (spec.kind()) {
      case ShapeKind::rectangle: {
        p = 0.5 * (spec.rect_lo() + spec.rect_hi());
        p(0) = spec.rect_hi()(0);
        break;
      }
      case ShapeKind::disc:
        p = spec.center();
        p(0) += spec.radius();
        break;
      case ShapeKind::ellipse:
        p = spec.center();
        p(0) += spec.semi_axes()(0);
        break;
    }
    pb.barrier_points.push_back(p);
  } else {
    pb.barrier_points = barrier_points;
  }
  const double tol_bdry = 1e-7 * (1.0 + spec.diameter());
  for (const Vector& p : pb.barrier_points) {
    require(p.size() == g.dim && spec.on_boundary(p, tol_bdry),
            ErrorCode::invalid_argument,
            "barrier point must lie on the domain boundary");
    const Vector n = spec.outward_normal(p);
    pb.barrier_normal.push_back(n);
    std::vector<double> dist(N);
    for (int node = 0; node < N; ++node)
      dist[node] = (p - g.position[node]).dot(n);
    pb.barrier_dist.push_back(std::move(dist));
  }
  return pb;
}

State initial_state(const Problem& problem) {
  State st;
  st.t = 0;
  st.f = problem.psi_interior;
  return st;
}

// ---------------------------------------------------------------------------
// Operator evaluation
// ---------------------------------------------------------------------------

void evaluate(const Problem& pb, const State& st, Workspace& ws) {
  const Grid& g = pb.grid;
  const int N = g.count();
  const int k = pb.k;
  const int dim = g.dim;
  const int F = g.families;
  require(static_cast<int>(st.f.size()) == N * k, ErrorCode::invalid_argument,
          "state size mismatch");

  ws.rhs.resize(static_cast<std::size_t>(N) * k);
  ws.jac.resize(static_cast<std::size_t>(N) * k * dim);
  ws.g_inv.resize(static_cast<std::size_t>(N) * 3);
  ws.sqrt_det.resize(N);
  ws.dissipand.resize(N);

  const double h = g.h;
  const double* f = st.f.data();
  const double* wv = pb.w.data();

  auto chunk = [&](std::size_t lo, std::size_t hi) {
    std::vector<double> d1(static_cast<std::size_t>(2) * k);
    std::vector<double> d2(static_cast<std::size_t>(4) * k);
    std::vector<double> side_vals(static_cast<std::size_t>(2) * k);
    for (std::size_t node = lo; node < hi; ++node) {
      for (int fam = 0; fam < F; ++fam) {
        const double base = fam < dim ? h : h * std::numbers::sqrt2;
        double spacing[2];
        for (int side = 0; side < 2; ++side) {
          const int a = g.arm_index(static_cast<int>(node), fam, side);
          const int nb = g.arm_neighbor[a];
          spacing[side] = g.arm_theta[a] * base;
          const double* src =
              nb >= 0 ? f + static_cast<std::size_t>(nb) * k
                      : pb.arm_psi.data() + static_cast<std::size_t>(a) * k;
          for (int c = 0; c < k; ++c) side_vals[side * k + c] = src[c];
        }
        const double A = spacing[0], B = spacing[1];
        const double denom = A * B * (A + B);
        for (int c = 0; c < k; ++c) {
          const double fm = side_vals[c], fp = side_vals[k + c];
          const double f0 = f[node * k + c];
          d2[fam * k + c] = 2.0 * (A * fp + B * fm - (A + B) * f0) / denom;
          if (fam < dim)
            d1[fam * k + c] =
                (A * A * fp - B * B * fm + (B * B - A * A) * f0) / denom;
        }
      }

      // metric from the axis first derivatives
      double i11 = 1, i12 = 0, i22 = 0, det = 1;
      if (dim == 1) {
        double g11 = 1;
        for (int c = 0; c < k; ++c) g11 += d1[c] * d1[c];
        det = g11;
        i11 = 1.0 / g11;
      } else {
        double g11 = 1, g22 = 1, g12 = 0;
        for (int c = 0; c < k; ++c) {
          g11 += d1[c] * d1[c];
          g22 += d1[k + c] * d1[k + c];
          g12 += d1[c] * d1[k + c];
        }
        det = g11 * g22 - g12 * g12;
        i11 = g22 / det;
        i22 = g11 / det;
        i12 = -g12 / det;
      }
      ws.g_inv[node * 3] = i11;
      ws.g_inv[node * 3 + 1] = i12;
      ws.g_inv[node * 3 + 2] = i22;
      ws.sqrt_det[node] = std::sqrt(det);

      double s_height = 0;
      double phi_sq = 0;
      double c1 = 0, c2 = 0;  // phi . df/dx^i
      for (int c = 0; c < k; ++c) {
        double rhs = i11 * d2[c];
        if (dim == 2)
          rhs += i22 * d2[k + c] + i12 * (d2[2 * k + c] - d2[3 * k + c]);
        rhs += wv[c];
        ws.rhs[node * k + c] = rhs;
        ws.jac[(node * k + c) * dim] = d1[c];
        if (dim == 2) ws.jac[(node * k + c) * dim + 1] = d1[k + c];
        s_height += f[node * k + c] * wv[c];
        phi_sq += rhs * rhs;
        c1 += rhs * d1[c];
        if (dim == 2) c2 += rhs * d1[k + c];
      }
      // |normal part of (0, phi)|^2 = |phi|^2 - c^T g^{-1} c
      double tang = i11 * c1 * c1;
      if (dim == 2) tang += 2.0 * i12 * c1 * c2 + i22 * c2 * c2;
      ws.dissipand[node] = g.cell_volume[node] * ws.sqrt_det[node] *
                           std::exp(-s_height) * (phi_sq - tang);
    }
  };
  parallel_for(0, static_cast<std::size_t>(N), chunk);

  // deterministic reductions
  StepStats s;
  s.min_ginv_eig = std::numeric_limits<double>::infinity();
  s.max_ginv_eig = -std::numeric_limits<double>::infinity();
  double diss = 0;
  for (int node = 0; node < N; ++node) {
    double df2 = 0;
    for (int c = 0; c < k; ++c) {
      s.sup_rhs = std::max(s.sup_rhs, std::abs(ws.rhs[node * k + c]));
      s.sup_f = std::max(s.sup_f, std::abs(f[node * k + c]));
      for (int i = 0; i < dim; ++i) {
        const double v = ws.jac[(node * k + c) * dim + i];
        df2 += v * v;
      }
    }
    s.sup_df_sq = std::max(s.sup_df_sq, df2);
    const double i11 = ws.g_inv[node * 3];
    if (dim == 1) {
      s.min_ginv_eig = std::min(s.min_ginv_eig, i11);
      s.max_ginv_eig = std::max(s.max_ginv_eig, i11);
    } else {
      const double i12 = ws.g_inv[node * 3 + 1];
      const double i22 = ws.g_inv[node * 3 + 2];
      const double mean = 0.5 * (i11 + i22);
      const double rad =
          std::sqrt(0.25 * (i11 - i22) * (i11 - i22) + i12 * i12);
      s.min_ginv_eig = std::min(s.min_ginv_eig, mean - rad);
      s.max_ginv_eig = std::max(s.max_ginv_eig, mean + rad);
    }
    diss += ws.dissipand[node];
  }
  s.dissipation_rate = diss;
  require(std::isfinite(s.sup_rhs), ErrorCode::blow_up,
          "spatial operator produced a non-finite field");
  ws.stats = s;
}

std::vector<double> spatial_operator(const Problem& problem,
                                     const State& state) {
  Workspace ws;
  evaluate(problem, state, ws);
  return ws.rhs;
}

double cfl_timestep(const Problem& problem, double sigma) {
  require(sigma > 0 && sigma <= 1.0, ErrorCode::invalid_argument,
          "cfl: sigma must be in (0, 1]");
  const double n = problem.grid.dim;
  return sigma * problem.grid.h * problem.grid.h / (4.0 * n * n);
}

void step(const Problem& problem, State& state, double dt, Workspace& ws) {
  require(dt > 0, ErrorCode::invalid_argument, "step: dt must be positive");
  evaluate(problem, state, ws);
  const std::size_t total = state.f.size();
  double sup = 0;
  for (std::size_t i = 0; i < total; ++i) {
    state.f[i] += dt * ws.rhs[i];
    sup = std::max(sup, std::abs(state.f[i]));
  }
  state.t += dt;
  double psi_scale = 0;
  for (double v : problem.sup_psi) psi_scale = std::max(psi_scale, v);
  const double w_scale = problem.w.size()
                             ? problem.w.cwiseAbs().maxCoeff()
                             : 0.0;
  const double threshold =
      1e10 * (1.0 + psi_scale + w_scale * (state.t + 1.0));
  require(std::isfinite(sup) && sup <= threshold, ErrorCode::blow_up,
          "flow blew up: field exceeded the stability threshold");
}

// ---------------------------------------------------------------------------
// Monitors
// ---------------------------------------------------------------------------

GradMonitor boundary_gradient_monitor(const Problem& problem,
                                      const Workspace& ws, double tau) {
  const Grid& g = problem.grid;
  const int k = problem.k;
  GradMonitor m;
  for (int node = 0; node < g.count(); ++node) {
    if (!g.boundary_adjacent[node]) continue;
    double df2 = 0;
    for (int c = 0; c < k; ++c)
      for (int i = 0; i < g.dim; ++i) {
        const double v = ws.jac[(static_cast<std::size_t>(node) * k + c) * g.dim + i];
        df2 += v * v;
      }
    m.observed = std::max(m.observed, std::sqrt(df2));
  }
  const double D = g.spec.diameter();
  m.bound = 4.0 * D * (1.0 + tau) * (g.dim * problem.psi.sup_d2psi + 1.0) +
            std::numbers::sqrt2 * problem.psi.sup_dpsi_boundary;
  m.ok = m.observed <= m.bound * (1.0 + 1e-9) + 1e-9;
  return m;
}

MaxPrincipleReport max_principle_monitor(
    const Problem& problem, const State& state,
    const std::vector<double>& running_boundary_sup, double tol_rel) {
  const int k = problem.k;
  const int N = problem.grid.count();
  require(static_cast<int>(running_boundary_sup.size()) == k,
          ErrorCode::invalid_argument, "running boundary sup size mismatch");
  MaxPrincipleReport rep;
  rep.margin = std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c) {
    double lhs_shifted = 0, lhs_plain = 0;
    for (int node = 0; node < N; ++node) {
      const double v = state.f[static_cast<std::size_t>(node) * k + c];
      lhs_shifted = std::max(lhs_shifted, std::abs(v - state.t * problem.w(c)));
      lhs_plain = std::max(lhs_plain, std::abs(v));
    }
    for (int arm : problem.cut_arms) {
      const double v = problem.arm_psi[static_cast<std::size_t>(arm) * k + c];
      lhs_shifted = std::max(lhs_shifted, std::abs(v - state.t * problem.w(c)));
      lhs_plain = std::max(lhs_plain, std::abs(v));
    }
    const double rhs_shifted =
        std::max(problem.sup_psi[c], running_boundary_sup[c]);
    const double rhs_plain =
        problem.sup_psi[c] + 2.0 * std::abs(problem.w(c)) * state.t;
    rep.margin = std::min(rep.margin, rhs_shifted - lhs_shifted);
    rep.margin = std::min(rep.margin, rhs_plain - lhs_plain);
    const double tol1 = tol_rel * (1.0 + rhs_shifted);
    const double tol2 = tol_rel * (1.0 + rhs_plain);
    if (lhs_shifted > rhs_shifted + tol1 || lhs_plain > rhs_plain + tol2)
      rep.ok = false;
  }
  return rep;
}

namespace {

double barrier_mu_k(const Problem& pb, double tau) {
  const double D = pb.grid.spec.diameter();
  return 4.0 * D * (1.0 + tau) * (pb.grid.dim * pb.psi.sup_d2psi + 1.0);
}

// margins of both comparison functions at one state for one barrier point
void barrier_margins(const Problem& pb, const State& st, const Workspace& ws,
                     int bp, double mu_k, BarrierOutcome& out) {
  const Grid& g = pb.grid;
  const int k = pb.k;
  const double D = g.spec.diameter();
  const double K = 1.0 / D;
  const double mu = mu_k * D;
  const Vector& n = pb.barrier_normal[bp];
  const std::vector<double>& dist = pb.barrier_dist[bp];

  for (int node = 0; node < g.count(); ++node) {
    const double d = dist[node];
    const double log_term = mu * std::log1p(K * d);
    const double i11 = ws.g_inv[node * 3];
    const double i12 = ws.g_inv[node * 3 + 1];
    const double i22 = ws.g_inv[node * 3 + 2];
    double quad = i11 * n(0) * n(0);
    if (g.dim == 2) quad += 2.0 * i12 * n(0) * n(1) + i22 * n(1) * n(1);
    const double ratio = 1.0 + K * d;
    const double mu_term = mu * K * K / (ratio * ratio) * quad;
    for (int c = 0; c < k; ++c) {
      const std::size_t fi = static_cast<std::size_t>(node) * k + c;
      const double dev = st.f[fi] - pb.psi_interior[fi];
      out.value_margin_upper =
          std::min(out.value_margin_upper, log_term - dev);
      out.value_margin_lower =
          std::min(out.value_margin_lower, log_term + dev);
      const double* hh = &pb.psi_hess[fi * 3];
      double l_psi = i11 * hh[0];
      if (g.dim == 2) l_psi += 2.0 * i12 * hh[1] + i22 * hh[2];
      out.supersolution_margin_upper = std::min(
          out.supersolution_margin_upper, mu_term - l_psi - pb.w(c));
      out.supersolution_margin_lower = std::min(
          out.supersolution_margin_lower, mu_term + l_psi + pb.w(c));
    }
  }
}

}  // namespace

BarrierOutcome barrier_check(const Problem& problem, const State& state,
                             const Vector& p, int alpha, double tau,
                             double mu_k) {
  const Grid& g = problem.grid;
  require(alpha >= 0 && alpha < problem.k, ErrorCode::invalid_argument,
          "barrier: component out of range");
  const double tol_bdry = 1e-7 * (1.0 + g.spec.diameter());
  require(g.spec.on_boundary(p, tol_bdry), ErrorCode::invalid_argument,
          "barrier: point is not on the domain boundary");

  const double D = g.spec.diameter();
  const double K = 1.0 / D;
  const double auto_mu_k = barrier_mu_k(problem, tau);
  if (mu_k <= 0) mu_k = auto_mu_k;

  BarrierOutcome out;
  // required: mu K^2 / (1+KD)^2 / (1+tau) >= n sup|D^2 psi| + 1
  const double lhs = mu_k * D * K * K / ((1.0 + K * D) * (1.0 + K * D)) /
                     (1.0 + tau);
  const double rhs = g.dim * problem.psi.sup_d2psi + 1.0;
  out.requirement_ok = lhs >= rhs * (1.0 - 1e-12) - 1e-12;
  if (!out.requirement_ok) return out;

  // locate or build the distance cache for this point
  int bp = -1;
  for (std::size_t i = 0; i < problem.barrier_points.size(); ++i)
    if ((problem.barrier_points[i] - p).norm() <= tol_bdry) bp = static_cast<int>(i);
  BarrierOutcome margins;
  margins.value_margin_upper = margins.value_margin_lower =
      std::numeric_limits<double>::infinity();
  margins.supersolution_margin_upper = margins.supersolution_margin_lower =
      std::numeric_limits<double>::infinity();

  Workspace ws;
  evaluate(problem, state, ws);
  if (bp >= 0) {
    barrier_margins(problem, state, ws, bp, mu_k, margins);
  } else {
    // temporary caches for an ad-hoc point
    Problem tmp = problem;
    tmp.barrier_points = {p};
    tmp.barrier_normal = {g.spec.outward_normal(p)};
    std::vector<double> d(g.count());
    for (int node = 0; node < g.count(); ++node)
      d[node] = (p - g.position[node]).dot(tmp.barrier_normal[0]);
    tmp.barrier_dist = {std::move(d)};
    barrier_margins(tmp, state, ws, 0, mu_k, margins);
  }
  out.margins_evaluated = true;
  out.value_margin_upper = margins.value_margin_upper;
  out.value_margin_lower = margins.value_margin_lower;
  out.supersolution_margin_upper = margins.supersolution_margin_upper;
  out.supersolution_margin_lower = margins.supersolution_margin_lower;
  return out;
}

double volume_balance(const Diagnostics& diagnostics) {
  require(!diagnostics.rows.empty(), ErrorCode::invalid_argument,
          "volume balance: no diagnostics records");
  const double v0 = diagnostics.rows.front().area;
  double residual = 0;
  for (const DiagnosticsRow& row : diagnostics.rows)
    residual = std::max(residual, std::abs(row.area - v0 + row.dissipation));
  return residual;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

RunResult run(const Problem& problem, const RunConfig& config) {
  require(config.t_max > 0, ErrorCode::invalid_argument,
          "run: t_max must be positive");
  require(config.tol_steady > 0, ErrorCode::invalid_argument,
          "run: tol_steady must be positive");
  require(config.record_every >= 1, ErrorCode::invalid_argument,
          "run: record_every must be >= 1");
  require(config.dt_scale > 0, ErrorCode::invalid_argument,
          "run: dt_scale must be positive");
  const double dt = cfl_timestep(problem, config.sigma) * config.dt_scale;

  const Grid& g = problem.grid;
  const int k = problem.k;
  const int N = g.count();

  RunResult rr;
  rr.state = initial_state(problem);
  State& st = rr.state;
  Workspace ws;

  double dissipation_cum = 0;
  double area0 = 0;
  std::vector<double> running_bdry(k, 0.0);
  const double inf = std::numeric_limits<double>::infinity();
  rr.barrier.value_margin = inf;
  rr.barrier.supersolution_margin = inf;
  rr.max_principle.margin = inf;
  rr.sandwich_margin = inf;
  double grad_margin = inf;

  auto weighted_area = [&]() {
    double area = 0;
    for (int node = 0; node < N; ++node) {
      double s = 0;
      for (int c = 0; c < k; ++c)
        s += st.f[static_cast<std::size_t>(node) * k + c] * problem.w(c);
      area += g.cell_volume[node] * ws.sqrt_det[node] * std::exp(-s);
    }
    return area;
  };

  auto record = [&](bool first) {
    rr.tau = std::max(rr.tau, ws.stats.sup_df_sq);

    for (int c = 0; c < k; ++c) {
      double s = 0;
      for (int arm : problem.cut_arms)
        s = std::max(s, std::abs(problem.arm_psi[static_cast<std::size_t>(arm) * k + c] -
                                 st.t * problem.w(c)));
      running_bdry[c] = std::max(running_bdry[c], s);
    }

    const MaxPrincipleReport mp =
        max_principle_monitor(problem, st, running_bdry, config.tol_monitor);
    rr.max_principle.margin = std::min(rr.max_principle.margin, mp.margin);
    rr.max_principle.ok = rr.max_principle.ok && mp.ok;

    const GradMonitor gm = boundary_gradient_monitor(problem, ws, rr.tau);
    if (first || gm.observed > rr.boundary_gradient.observed)
      rr.boundary_gradient.observed = gm.observed;
    rr.boundary_gradient.bound = gm.bound;
    rr.boundary_gradient.ok = rr.boundary_gradient.ok && gm.ok;
    grad_margin = std::min(grad_margin, gm.bound - gm.observed);

    const double sandwich = std::min(
        ws.stats.min_ginv_eig - 1.0 / (1.0 + rr.tau),
        1.0 - ws.stats.max_ginv_eig);
    rr.sandwich_margin = std::min(rr.sandwich_margin, sandwich);

    const double mu_k = barrier_mu_k(problem, rr.tau);
    rr.barrier.mu_k = mu_k;
    BarrierOutcome margins;
    margins.value_margin_upper = margins.value_margin_lower = inf;
    margins.supersolution_margin_upper = margins.supersolution_margin_lower = inf;
    for (std::size_t bp = 0; bp < problem.barrier_points.size(); ++bp)
      barrier_margins(problem, st, ws, static_cast<int>(bp), mu_k, margins);
    const double value_margin =
        std::min(margins.value_margin_upper, margins.value_margin_lower);
    const double super_margin = std::min(margins.supersolution_margin_upper,
                                         margins.supersolution_margin_lower);
    rr.barrier.value_margin = std::min(rr.barrier.value_margin, value_margin);
    rr.barrier.supersolution_margin =
        std::min(rr.barrier.supersolution_margin, super_margin);

    DiagnosticsRow row;
    row.t = st.t;
    row.sup_f = ws.stats.sup_f;
    for (int arm : problem.cut_arms)
      for (int c = 0; c < k; ++c)
        row.sup_f = std::max(
            row.sup_f,
            std::abs(problem.arm_psi[static_cast<std::size_t>(arm) * k + c]));
    double fbar = 0;
    for (int node = 0; node < N; ++node)
      for (int c = 0; c < k; ++c)
        fbar = std::max(fbar,
                        std::abs(st.f[static_cast<std::size_t>(node) * k + c] -
                                 st.t * problem.w(c)));
    for (int arm : problem.cut_arms)
      for (int c = 0; c < k; ++c)
        fbar = std::max(fbar,
                        std::abs(problem.arm_psi[static_cast<std::size_t>(arm) * k + c] -
                                 st.t * problem.w(c)));
    row.sup_fbar = fbar;
    row.sup_bdry_grad = gm.observed;
    row.steady_res = ws.stats.sup_rhs;
    row.area = weighted_area();
    if (first) area0 = row.area;
    row.dissipation = dissipation_cum;
    row.barrier_margin = value_margin;
    rr.diagnostics.rows.push_back(row);

    rr.volume_residual = std::max(
        rr.volume_residual, std::abs(row.area - area0 + row.dissipation));

    const bool monitors_ok = mp.ok && gm.ok &&
                             sandwich >= -1e-12 &&
                             value_margin >= -config.tol_barrier &&
                             super_margin >= -config.tol_barrier;
    rr.monitors_ok = rr.monitors_ok && monitors_ok;
    if (config.escalate_violations && !monitors_ok) {
      std::ostringstream msg;
      msg << "monitor violation at t = " << st.t
          << ": max principle margin " << mp.margin << ", gradient margin "
          << gm.bound - gm.observed << ", sandwich margin " << sandwich
          << ", barrier margins " << value_margin << " / " << super_margin;
      fail(ErrorCode::monitor_violation, msg.str());
    }
  };

  long count = 0;
  bool first = true;
  for (;;) {
    evaluate(problem, st, ws);
    const bool at_record = (count % config.record_every == 0);
    const bool steady = ws.stats.sup_rhs < config.tol_steady;
    const bool time_up = st.t >= config.t_max * (1.0 - 1e-12);
    if (at_record || steady || time_up) {
      record(first);
      first = false;
    }
    if (steady || time_up) {
      rr.steady = steady;
      rr.steady_residual = ws.stats.sup_rhs;
      break;
    }
    // advance; evaluate() already filled ws for the current state
    const std::size_t total = st.f.size();
    double sup = 0;
    for (std::size_t i = 0; i < total; ++i) {
      st.f[i] += dt * ws.rhs[i];
      sup = std::max(sup, std::abs(st.f[i]));
    }
    st.t += dt;
    double psi_scale = 0;
    for (double v : problem.sup_psi) psi_scale = std::max(psi_scale, v);
    const double w_scale =
        problem.w.size() ? problem.w.cwiseAbs().maxCoeff() : 0.0;
    const double threshold =
        1e10 * (1.0 + psi_scale + w_scale * (st.t + 1.0));
    require(std::isfinite(sup) && sup <= threshold, ErrorCode::blow_up,
            "flow blew up: field exceeded the stability threshold");
    dissipation_cum += dt * ws.stats.dissipation_rate;
    ++count;
  }
  rr.steps = count;
  rr.barrier.ok = rr.barrier.value_margin >= -config.tol_barrier &&
                  rr.barrier.supersolution_margin >= -config.tol_barrier;
  return rr;
}

SmallDataReport check_small_data_condition(const DomainSpec& spec,
                                           const BoundaryData& psi) {
  SmallDataReport rep;
  rep.value = 8.0 * spec.diameter() * (spec.dim() * psi.sup_d2psi + 1.0) +
              std::numbers::sqrt2 * psi.sup_dpsi_boundary;
  rep.satisfied = rep.value < 1.0;
  return rep;
}

}  // namespace tlab::flow
