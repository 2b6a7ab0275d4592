#include "translatorlab/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace tlab::geom {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

void check_unit(const Vector& W, double tol = 1e-6) {
  require(std::abs(W.norm() - 1.0) <= tol, ErrorCode::invalid_argument,
          "direction W must be a unit vector");
}

}  // namespace

Vector GraphJet::position() const {
  Vector p(ambient_dim());
  p.head(base_dim()) = base;
  p.tail(fiber_dim()) = value;
  return p;
}

Vector GraphJet::tangent(int i) const {
  Vector t = Vector::Zero(ambient_dim());
  t(i) = 1.0;
  t.tail(fiber_dim()) = d1.row(i).transpose();
  return t;
}

Vector GraphJet::second(int i, int j) const {
  Vector s = Vector::Zero(ambient_dim());
  for (int a = 0; a < fiber_dim(); ++a) s(base_dim() + a) = d2[a](i, j);
  return s;
}

void GraphJet::validate() const {
  const int n = base_dim();
  const int k = fiber_dim();
  require(n >= 1 && k >= 1, ErrorCode::invalid_argument, "empty jet");
  require(d1.rows() == n && d1.cols() == k, ErrorCode::invalid_argument,
          "jet d1 shape mismatch");
  require(static_cast<int>(d2.size()) == k, ErrorCode::invalid_argument,
          "jet d2 shape mismatch");
  require(all_finite(base) && all_finite(value) && all_finite(d1),
          ErrorCode::invalid_argument, "non-finite jet");
  for (const Matrix& m : d2) {
    require(m.rows() == n && m.cols() == n, ErrorCode::invalid_argument,
            "jet d2 shape mismatch");
    require(all_finite(m), ErrorCode::invalid_argument, "non-finite jet");
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        require(m(i, j) == m(j, i), ErrorCode::invalid_argument,
                "jet d2 must be symmetric as stored");
  }
}

MetricData induced_metric(const GraphJet& jet) {
  jet.validate();
  const int n = jet.base_dim();
  MetricData out;
  out.g = Matrix::Identity(n, n) + jet.d1 * jet.d1.transpose();
  out.g_inv = out.g.inverse();
  out.sqrt_det = std::sqrt(out.g.determinant());
  return out;
}

BoundsReport metric_bounds_check(const MetricData& metric, double tau,
                                 double tol) {
  require(tau >= 0.0, ErrorCode::invalid_argument,
          "metric bounds: tau must be nonnegative");
  Eigen::SelfAdjointEigenSolver<Matrix> es(metric.g_inv);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  const double lower_bound = 1.0 / (1.0 + tau);
  BoundsReport rep;
  rep.margin = std::min(lo - lower_bound, 1.0 - hi);
  rep.ok = (lo >= lower_bound - tol) && (hi <= 1.0 + tol);
  return rep;
}

Vector mean_curvature_vector(const GraphJet& jet) {
  const MetricData m = induced_metric(jet);
  const int n = jet.base_dim();
  Vector q = Vector::Zero(jet.ambient_dim());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q += m.g_inv(i, j) * jet.second(i, j);
  // subtract the tangential components against the coordinate frame
  Vector tang = Vector::Zero(jet.ambient_dim());
  for (int i = 0; i < n; ++i) {
    const Vector Fi = jet.tangent(i);
    for (int j = 0; j < n; ++j) tang += m.g_inv(i, j) * q.dot(Fi) * jet.tangent(j);
  }
  return q - tang;
}

ShapeData hypersurface_shape(const GraphJet& jet, int orientation) {
  require(jet.fiber_dim() == 1, ErrorCode::unsupported,
          "hypersurface shape requires fiber dimension 1");
  require(orientation == 1 || orientation == -1, ErrorCode::invalid_argument,
          "orientation must be +1 or -1");
  const MetricData m = induced_metric(jet);
  const int n = jet.base_dim();
  const double w2 = 1.0 + jet.d1.col(0).squaredNorm();
  const double inv_w = 1.0 / std::sqrt(w2);

  ShapeData out;
  out.normal = Vector(n + 1);
  out.normal.head(n) = -jet.d1.col(0) * inv_w * orientation;
  out.normal(n) = inv_w * orientation;

  // h_ij = <D_i nu, F_j> = -<nu, F_ij> = -nu_fiber * u_ij
  out.second_fundamental = -out.normal(n) * jet.d2[0];
  out.mean_curvature = (m.g_inv * out.second_fundamental).trace();
  const Matrix a = m.g_inv * out.second_fundamental;
  out.norm_A_sq = (a * a).trace();
  return out;
}

Matrix normal_frame(const GraphJet& jet) {
  jet.validate();
  const int n = jet.base_dim();
  const int k = jet.fiber_dim();
  Matrix frame(n + k, k);
  for (int a = 0; a < k; ++a) {
    Vector v = Vector::Zero(n + k);
    v.head(n) = -jet.d1.col(a);
    v(n + a) = 1.0;
    for (int b = 0; b < a; ++b) v -= v.dot(frame.col(b)) * frame.col(b);
    const double norm = v.norm();
    require(norm > 1e-12, ErrorCode::invalid_argument,
            "degenerate normal frame");
    frame.col(a) = v / norm;
  }
  return frame;
}

Vector soliton_residual(const GraphJet& jet, const Vector& W) {
  check_unit(W);
  require(W.size() == jet.ambient_dim(), ErrorCode::invalid_argument,
          "direction dimension mismatch");
  const MetricData m = induced_metric(jet);
  const int n = jet.base_dim();
  Vector q = Vector::Zero(jet.ambient_dim());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q += m.g_inv(i, j) * jet.second(i, j);
  const Matrix frame = normal_frame(jet);
  Vector res(jet.fiber_dim());
  for (int a = 0; a < jet.fiber_dim(); ++a) {
    const double H_a = -q.dot(frame.col(a));
    res(a) = H_a - frame.col(a).dot(W);
  }
  return res;
}

HeightData height_calculus(const GraphJet& jet, const Vector& W) {
  check_unit(W);
  require(W.size() == jet.ambient_dim(), ErrorCode::invalid_argument,
          "direction dimension mismatch");
  const MetricData m = induced_metric(jet);
  const int n = jet.base_dim();
  HeightData out;
  out.s = jet.position().dot(W);
  Vector c(n);
  for (int i = 0; i < n; ++i) c(i) = W.dot(jet.tangent(i));
  out.grad_s_sq = c.dot(m.g_inv * c);
  out.mean_curv_sq = mean_curvature_vector(jet).squaredNorm();
  out.laplace_s = -out.mean_curv_sq;
  return out;
}

double drift_laplacian_height(const GraphJet& jet, const Vector& W) {
  const HeightData h = height_calculus(jet, W);
  return h.laplace_s - h.grad_s_sq;
}

double hessian_height(const GraphJet& jet, const Vector& W, const Vector& U,
                      const Vector& V, double tangent_tol) {
  check_unit(W);
  const MetricData m = induced_metric(jet);
  const int n = jet.base_dim();

  auto coords = [&](const Vector& v) {
    Vector c(n);
    for (int i = 0; i < n; ++i) c(i) = v.dot(jet.tangent(i));
    return Vector(m.g_inv * c);
  };
  auto check_tangent = [&](const Vector& v, const char* name) {
    const Vector c = coords(v);
    Vector proj = Vector::Zero(jet.ambient_dim());
    for (int i = 0; i < n; ++i) proj += c(i) * jet.tangent(i);
    require((v - proj).norm() <= tangent_tol * (1.0 + v.norm()),
            ErrorCode::invalid_argument,
            std::string(name) + " is not tangent to the graph");
  };
  check_tangent(U, "U");
  check_tangent(V, "V");

  const Vector cu = coords(U);
  const Vector cv = coords(V);
  Vector second = Vector::Zero(jet.ambient_dim());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) second += cu(i) * cv(j) * jet.second(i, j);
  // normal projection of the coordinate second derivative
  const Vector cs = coords(second);
  Vector tang = Vector::Zero(jet.ambient_dim());
  for (int i = 0; i < n; ++i) tang += cs(i) * jet.tangent(i);
  const Vector ii = second - tang;
  return -mean_curvature_vector(jet).dot(ii);
}

// ---------------------------------------------------------------------------
// Patches
// ---------------------------------------------------------------------------

ImmersionJet immersion_from_graph(const GraphJet& jet) {
  const int n = jet.base_dim();
  ImmersionJet out;
  out.position = jet.position();
  out.d1.resize(n);
  for (int i = 0; i < n; ++i) out.d1[i] = jet.tangent(i);
  out.d2.assign(n, std::vector<Vector>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.d2[i][j] = jet.second(i, j);
  return out;
}

namespace {

Vector patch_normal(const std::vector<Vector>& tang, int orientation) {
  const int ambient = static_cast<int>(tang[0].size());
  Vector nu(ambient);
  if (ambient == 2) {
    nu << -tang[0](1), tang[0](0);
  } else if (ambient == 3 && tang.size() == 2) {
    const Vector& a = tang[0];
    const Vector& b = tang[1];
    nu << a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2),
        a(0) * b(1) - a(1) * b(0);
  } else {
    fail(ErrorCode::unsupported, "patch normal needs codimension 1");
  }
  const double norm = nu.norm();
  require(norm > 1e-14, ErrorCode::invalid_argument, "degenerate tangent frame");
  nu /= norm;
  // fix the sign against the fiber (last) axis
  double ref = nu(ambient - 1);
  if (std::abs(ref) < 1e-14) ref = nu(0);
  if (ref * orientation < 0) nu = -nu;
  return nu;
}

}  // namespace

PatchSamples sample_patch(int dim, std::array<double, 2> lo,
                          std::array<double, 2> hi, std::array<double, 2> h,
                          const ImmersionFn& fn, int orientation) {
  require(dim == 1 || dim == 2, ErrorCode::unsupported,
          "patches support 1 or 2 parameters");
  PatchSamples p;
  p.dim = dim;
  p.lo = lo;
  p.hx = h[0];
  p.hy = dim == 2 ? h[1] : 0.0;
  require(p.hx > 0 && (dim == 1 || p.hy > 0), ErrorCode::invalid_argument,
          "patch spacing must be positive");
  // never step past hi when the extent is not an exact multiple of h
  auto nodes = [](double lo_v, double hi_v, double h_v) {
    return static_cast<int>(std::floor((hi_v - lo_v) / h_v * (1.0 + 1e-12))) + 1;
  };
  p.nx = nodes(lo[0], hi[0], p.hx);
  p.ny = dim == 2 ? nodes(lo[1], hi[1], p.hy) : 1;
  require(p.nx >= 3 && (dim == 1 || p.ny >= 3), ErrorCode::insufficient_samples,
          "patch too small for the stencil");

  const std::size_t total = static_cast<std::size_t>(p.nx) * p.ny;
  p.sqrt_det.resize(total);
  p.g_inv.resize(total);
  p.tangents.resize(total);
  p.normal.resize(total);
  p.H.resize(total);
  p.norm_A_sq.resize(total);
  p.position.resize(total);

  for (int j = 0; j < p.ny; ++j) {
    for (int i = 0; i < p.nx; ++i) {
      const double u = lo[0] + i * p.hx;
      const double v = dim == 2 ? lo[1] + j * p.hy : 0.0;
      const ImmersionJet jet = fn(u, v);
      const int idx = p.index(i, j);
      if (p.ambient == 0) p.ambient = static_cast<int>(jet.position.size());

      Matrix g(dim, dim);
      Matrix tang(p.ambient, dim);
      for (int a = 0; a < dim; ++a) {
        tang.col(a) = jet.d1[a];
        for (int b = 0; b < dim; ++b) g(a, b) = jet.d1[a].dot(jet.d1[b]);
      }
      const Vector nu = patch_normal(jet.d1, orientation);
      Matrix hform(dim, dim);
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) hform(a, b) = -nu.dot(jet.d2[a][b]);
      const Matrix g_inv = g.inverse();
      const Matrix shape = g_inv * hform;

      p.sqrt_det[idx] = std::sqrt(g.determinant());
      p.g_inv[idx] = g_inv;
      p.tangents[idx] = tang;
      p.normal[idx] = nu;
      p.H[idx] = shape.trace();
      p.norm_A_sq[idx] = (shape * shape).trace();
      p.position[idx] = jet.position;
    }
  }
  return p;
}

namespace {

// Divergence-form Laplace-Beltrami on interior nodes. Coefficients
// a^{ij} = sqrt(g) g^{ij} averaged to half nodes along the derivative axis;
// mixed terms use centered first differences.
double lb_at(const PatchSamples& p, const std::vector<double>& f, int i, int j) {
  auto a = [&](int ii, int jj, int r, int c) {
    const int idx = p.index(ii, jj);
    return p.sqrt_det[idx] * p.g_inv[idx](r, c);
  };
  const int idx = p.index(i, j);
  double acc = 0.0;

  {  // x-direction
    const double ap = 0.5 * (a(i, j, 0, 0) + a(i + 1, j, 0, 0));
    const double am = 0.5 * (a(i, j, 0, 0) + a(i - 1, j, 0, 0));
    acc += (ap * (f[p.index(i + 1, j)] - f[idx]) -
            am * (f[idx] - f[p.index(i - 1, j)])) /
           (p.hx * p.hx);
  }
  if (p.dim == 2) {
    const double ap = 0.5 * (a(i, j, 1, 1) + a(i, j + 1, 1, 1));
    const double am = 0.5 * (a(i, j, 1, 1) + a(i, j - 1, 1, 1));
    acc += (ap * (f[p.index(i, j + 1)] - f[idx]) -
            am * (f[idx] - f[p.index(i, j - 1)])) /
           (p.hy * p.hy);

    auto dcy = [&](int ii) {
      return (f[p.index(ii, j + 1)] - f[p.index(ii, j - 1)]) / (2.0 * p.hy);
    };
    auto dcx = [&](int jj) {
      return (f[p.index(i + 1, jj)] - f[p.index(i - 1, jj)]) / (2.0 * p.hx);
    };
    acc += (a(i + 1, j, 0, 1) * dcy(i + 1) - a(i - 1, j, 0, 1) * dcy(i - 1)) /
           (2.0 * p.hx);
    acc += (a(i, j + 1, 1, 0) * dcx(j + 1) - a(i, j - 1, 1, 0) * dcx(j - 1)) /
           (2.0 * p.hy);
  }
  return acc / p.sqrt_det[idx];
}

// Ambient gradient of a nodal scalar: g^{ij} d_j(f) X_i, centered d_j.
Vector patch_gradient(const PatchSamples& p, const std::vector<double>& f,
                      int i, int j) {
  const int idx = p.index(i, j);
  Vector df(p.dim);
  df(0) = (f[p.index(i + 1, j)] - f[p.index(i - 1, j)]) / (2.0 * p.hx);
  if (p.dim == 2)
    df(1) = (f[p.index(i, j + 1)] - f[p.index(i, j - 1)]) / (2.0 * p.hy);
  return p.tangents[idx] * (p.g_inv[idx] * df);
}

template <typename Fn>
ResidualField map_interior(const PatchSamples& p, const Fn& fn) {
  ResidualField out;
  out.values.assign(p.size(), 0.0);
  for (int j = 0; j < p.ny; ++j)
    for (int i = 0; i < p.nx; ++i)
      if (p.interior(i, j)) {
        const double v = fn(i, j);
        out.values[p.index(i, j)] = v;
        out.max_abs = std::max(out.max_abs, std::abs(v));
      }
  return out;
}

}  // namespace

ResidualField laplace_beltrami(const PatchSamples& patch,
                               const std::vector<double>& field) {
  require(field.size() == patch.size(), ErrorCode::invalid_argument,
          "field size mismatch");
  return map_interior(patch,
                      [&](int i, int j) { return lb_at(patch, field, i, j); });
}

ResidualField jacobi_normal_residual(const PatchSamples& patch) {
  const int ambient = patch.ambient;
  std::vector<std::vector<double>> nu(ambient);
  for (int c = 0; c < ambient; ++c) {
    nu[c].resize(patch.size());
    for (std::size_t s = 0; s < patch.size(); ++s) nu[c][s] = patch.normal[s](c);
  }
  return map_interior(patch, [&](int i, int j) {
    const int idx = patch.index(i, j);
    const Vector grad_h = patch_gradient(patch, patch.H, i, j);
    Vector res(ambient);
    for (int c = 0; c < ambient; ++c)
      res(c) = lb_at(patch, nu[c], i, j) - grad_h(c) +
               patch.norm_A_sq[idx] * patch.normal[idx](c);
    return res.norm();
  });
}

ResidualField jacobi_scalar_residual(const PatchSamples& patch,
                                     const Vector& e) {
  require(e.size() == patch.ambient, ErrorCode::invalid_argument,
          "direction dimension mismatch");
  std::vector<double> f(patch.size());
  for (std::size_t s = 0; s < patch.size(); ++s) f[s] = patch.normal[s].dot(e);
  return map_interior(patch, [&](int i, int j) {
    const int idx = patch.index(i, j);
    const Vector grad_h = patch_gradient(patch, patch.H, i, j);
    return lb_at(patch, f, i, j) - grad_h.dot(e) +
           patch.norm_A_sq[idx] * f[idx];
  });
}

ResidualField mean_curvature_identity_residual(const PatchSamples& patch,
                                               const Vector& W) {
  require(W.size() == patch.ambient, ErrorCode::invalid_argument,
          "direction dimension mismatch");
  return map_interior(patch, [&](int i, int j) {
    const int idx = patch.index(i, j);
    const Vector grad_h = patch_gradient(patch, patch.H, i, j);
    return lb_at(patch, patch.H, i, j) - W.dot(grad_h) +
           patch.H[idx] * patch.norm_A_sq[idx];
  });
}

}  // namespace tlab::geom
