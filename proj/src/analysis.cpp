#include "translatorlab/analysis.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tlab::analysis {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

double quadrature_factor(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

}  // namespace

WeightedMesh build_weighted_mesh(const SolitonModel& model, const Box& box,
                                 double h) {
  require(h > 0, ErrorCode::invalid_argument, "mesh: h must be positive");
  const Box& dom = model.domain();
  require(box.dim() == dom.dim(), ErrorCode::invalid_argument,
          "mesh: box dimension mismatch");
  for (int i = 0; i < box.dim(); ++i) {
    require(box.lo(i) < box.hi(i), ErrorCode::invalid_argument,
            "mesh: degenerate box");
    require(box.lo(i) >= dom.lo(i) - 1e-12 && box.hi(i) <= dom.hi(i) + 1e-12,
            ErrorCode::invalid_argument, "mesh: box outside the model domain");
  }

  WeightedMesh mesh;
  const int dim = box.dim();
  std::array<double, 2> lo{box.lo(0), dim == 2 ? box.lo(1) : 0.0};
  std::array<double, 2> hi{box.hi(0), dim == 2 ? box.hi(1) : 0.0};
  mesh.patch = geom::sample_patch(dim, lo, hi, {h, h}, model.immersion(), 1);
  mesh.W = model.direction();

  const geom::PatchSamples& p = mesh.patch;
  mesh.s.resize(p.size());
  mesh.weight.resize(p.size());
  mesh.w_tan.resize(p.size() * dim);
  double mass = 0;
  for (int j = 0; j < p.ny; ++j) {
    for (int i = 0; i < p.nx; ++i) {
      const int idx = p.index(i, j);
      mesh.s[idx] = p.position[idx].dot(mesh.W);
      double cell = h * quadrature_factor(i, p.nx);
      if (dim == 2) cell *= h * quadrature_factor(j, p.ny);
      mesh.weight[idx] = cell * p.sqrt_det[idx] * std::exp(-mesh.s[idx]);
      for (int a = 0; a < dim; ++a)
        mesh.w_tan[idx * dim + a] = mesh.W.dot(p.tangents[idx].col(a));
      mass += mesh.weight[idx];
    }
  }
  mesh.total_mass = mass;
  return mesh;
}

// ---------------------------------------------------------------------------
// Discrete forms
// ---------------------------------------------------------------------------

namespace {

struct Forms {
  SparseMatrix a;         // stiffness + mixed - potential
  Eigen::VectorXd b;      // diagonal of the mass form
  std::vector<int> dof;   // node -> dof or -1
  std::vector<int> node;  // dof -> node
};

// b^{ij} = sqrt(g) g^{ij} e^{-S} at a node
double coeff(const WeightedMesh& m, int idx, int r, int c) {
  return m.patch.sqrt_det[idx] * m.patch.g_inv[idx](r, c) *
         std::exp(-m.s[idx]);
}

Forms assemble(const WeightedMesh& mesh) {
  const geom::PatchSamples& p = mesh.patch;
  const int dim = p.dim;
  const double hx = p.hx, hy = dim == 2 ? p.hy : 1.0;

  Forms forms;
  forms.dof.assign(p.size(), -1);
  for (int j = 0; j < p.ny; ++j)
    for (int i = 0; i < p.nx; ++i)
      if (p.interior(i, j)) {
        forms.dof[p.index(i, j)] = static_cast<int>(forms.node.size());
        forms.node.push_back(p.index(i, j));
      }
  require(forms.node.size() >= 1, ErrorCode::insufficient_samples,
          "eigenproblem: no interior nodes");

  const int n_dof = static_cast<int>(forms.node.size());
  std::vector<Triplet> trip;
  auto add = [&](int na, int nb, double v) {
    const int da = forms.dof[na], db = forms.dof[nb];
    if (da < 0 || db < 0 || v == 0.0) return;  // Dirichlet rows eliminated
    trip.emplace_back(da, db, v);
  };

  // diagonal stiffness terms from edges, coefficients at half nodes
  for (int j = 0; j < p.ny; ++j) {
    for (int i = 0; i + 1 < p.nx; ++i) {
      const int q0 = p.index(i, j), q1 = p.index(i + 1, j);
      if (forms.dof[q0] < 0 && forms.dof[q1] < 0) continue;
      const double a_half = 0.5 * (coeff(mesh, q0, 0, 0) + coeff(mesh, q1, 0, 0));
      double vol = hx;
      if (dim == 2) vol *= hy * quadrature_factor(j, p.ny);
      const double w = a_half * vol / (hx * hx);
      add(q0, q0, w);
      add(q1, q1, w);
      add(q0, q1, -w);
      add(q1, q0, -w);
    }
  }
  if (dim == 2) {
    for (int j = 0; j + 1 < p.ny; ++j) {
      for (int i = 0; i < p.nx; ++i) {
        const int q0 = p.index(i, j), q1 = p.index(i, j + 1);
        if (forms.dof[q0] < 0 && forms.dof[q1] < 0) continue;
        const double a_half =
            0.5 * (coeff(mesh, q0, 1, 1) + coeff(mesh, q1, 1, 1));
        const double vol = hy * hx * quadrature_factor(i, p.nx);
        const double w = a_half * vol / (hy * hy);
        add(q0, q0, w);
        add(q1, q1, w);
        add(q0, q1, -w);
        add(q1, q0, -w);
      }
    }
    // mixed terms 2 g^{12} phi_x phi_y at interior nodes, centered stencils
    for (int j = 1; j + 1 < p.ny; ++j) {
      for (int i = 1; i + 1 < p.nx; ++i) {
        const int idx = p.index(i, j);
        const double c = coeff(mesh, idx, 0, 1) * hx * hy / (2.0 * hx * hy);
        if (c == 0.0) continue;
        const int e = p.index(i + 1, j), w_ = p.index(i - 1, j);
        const int n = p.index(i, j + 1), s = p.index(i, j - 1);
        // c (phi_E - phi_W)(phi_N - phi_S); split symmetrically
        const double v = 0.5 * c;
        add(e, n, v);
        add(n, e, v);
        add(w_, s, v);
        add(s, w_, v);
        add(e, s, -v);
        add(s, e, -v);
        add(w_, n, -v);
        add(n, w_, -v);
      }
    }
  }
  // potential and mass
  Eigen::VectorXd b(n_dof);
  for (int d = 0; d < n_dof; ++d) {
    const int idx = forms.node[d];
    b(d) = mesh.weight[idx];
    trip.emplace_back(d, d, -p.norm_A_sq[idx] * mesh.weight[idx]);
  }

  forms.a.resize(n_dof, n_dof);
  forms.a.setFromTriplets(trip.begin(), trip.end());
  forms.b = b;
  return forms;
}

}  // namespace

SpectralResult drift_first_eigenvalue(const WeightedMesh& mesh,
                                      int max_iterations) {
  const geom::PatchSamples& p = mesh.patch;
  require(p.nx >= 5 && (p.dim == 1 || p.ny >= 5), ErrorCode::insufficient_samples,
          "eigenproblem: need at least 3 interior nodes per axis");
  const Forms forms = assemble(mesh);
  const int n_dof = static_cast<int>(forms.node.size());

  double max_pot = 0;
  for (int d = 0; d < n_dof; ++d)
    max_pot = std::max(max_pot, p.norm_A_sq[forms.node[d]]);
  const double shift = -max_pot - 1.0;

  SparseMatrix shifted = forms.a;
  for (int d = 0; d < n_dof; ++d) shifted.coeffRef(d, d) -= shift * forms.b(d);
  Eigen::SimplicialLDLT<SparseMatrix> solver(shifted);
  require(solver.info() == Eigen::Success, ErrorCode::solver_failure,
          "eigenproblem: factorization failed");

  Eigen::VectorXd z = Eigen::VectorXd::Ones(n_dof);
  auto b_norm = [&](const Eigen::VectorXd& v) {
    return std::sqrt(v.cwiseProduct(forms.b).dot(v));
  };
  z /= b_norm(z);

  SpectralResult out;
  double lambda = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= max_iterations; ++iter) {
    Eigen::VectorXd y = solver.solve(forms.b.cwiseProduct(z));
    require(solver.info() == Eigen::Success, ErrorCode::solver_failure,
            "eigenproblem: linear solve failed");
    y /= b_norm(y);
    const double rho = y.dot(forms.a * y) / y.dot(forms.b.cwiseProduct(y));
    const Eigen::VectorXd resid = forms.a * y - rho * forms.b.cwiseProduct(y);
    const double res_norm = resid.norm();
    const double scale = forms.b.cwiseProduct(y).norm();
    z = y;
    lambda = rho;
    out.iterations = iter;
    if (res_norm <= 1e-6 * scale) {
      out.residual = res_norm;
      break;
    }
    if (iter == max_iterations)
      fail(ErrorCode::solver_failure,
           "eigenproblem: inverse iteration did not converge");
  }
  out.lambda1 = lambda;
  out.eigenfield.assign(p.size(), 0.0);
  for (int d = 0; d < n_dof; ++d) out.eigenfield[forms.node[d]] = z(d);
  return out;
}

double rayleigh_quotient(const WeightedMesh& mesh,
                         const std::vector<double>& phi) {
  require(phi.size() == mesh.size(), ErrorCode::invalid_argument,
          "rayleigh: field size mismatch");
  const Forms forms = assemble(mesh);
  const int n_dof = static_cast<int>(forms.node.size());
  Eigen::VectorXd v(n_dof);
  for (int d = 0; d < n_dof; ++d) v(d) = phi[forms.node[d]];
  const double denom = v.cwiseProduct(forms.b).dot(v);
  require(denom > 0, ErrorCode::invalid_argument,
          "rayleigh: test field vanishes");
  return v.dot(forms.a * v) / denom;
}

StabilityReport stability_condition(const WeightedMesh& mesh, double a) {
  require(a > 0, ErrorCode::invalid_argument, "stability: a must be positive");
  StabilityReport rep;
  rep.sup_value = -std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < mesh.size(); ++idx) {
    const double h = mesh.patch.H[idx];
    const double v = a * (a - 1.0) - a * a * h * h + mesh.patch.norm_A_sq[idx];
    rep.sup_value = std::max(rep.sup_value, v);
  }
  rep.satisfied = rep.sup_value <= 1e-12 * (1.0 + a * a);
  return rep;
}

// ---------------------------------------------------------------------------
// Weighted volume growth
// ---------------------------------------------------------------------------

GrowthReport weighted_volume_growth(const SolitonModel& model, double a,
                                    double r0, double r1, double h,
                                    int r_count) {
  require(a > 0, ErrorCode::invalid_argument, "growth: a must be positive");
  require(r0 > 0 && r1 > r0, ErrorCode::invalid_argument,
          "growth: need 0 < R0 < R1");
  require(h > 0 && r_count >= 2, ErrorCode::invalid_argument,
          "growth: invalid sampling");

  const Box& dom = model.domain();
  const int dim = dom.dim();

  // cell-centered sweep with per-cell quadrant subsamples; cells cut by a
  // sphere pick up the sampled fraction automatically
  std::vector<int> cells(dim);
  std::vector<double> hs(dim);
  for (int i = 0; i < dim; ++i) {
    cells[i] = std::max(1, static_cast<int>(std::ceil((dom.hi(i) - dom.lo(i)) / h)));
    hs[i] = (dom.hi(i) - dom.lo(i)) / cells[i];
  }
  const int sub = 2;
  const int sub_total = dim == 1 ? sub : sub * sub;

  std::vector<std::pair<double, double>> samples;  // radius, weight
  double sup_h_sq = 0;
  double edge_min_radius = std::numeric_limits<double>::infinity();

  std::vector<int> idx(dim, 0);
  Vector x(dim);
  while (true) {
    bool edge_cell = false;
    for (int i = 0; i < dim; ++i)
      if (idx[i] == 0 || idx[i] == cells[i] - 1) edge_cell = true;
    for (int sq = 0; sq < sub_total; ++sq) {
      for (int i = 0; i < dim; ++i) {
        const int q = (i == 0) ? sq % sub : sq / sub;
        x(i) = dom.lo(i) + (idx[i] + (q + 0.5) / sub) * hs[i];
      }
      const geom::GraphJet jet = model.jet(x);
      const double rho = jet.position().norm();
      if (edge_cell) edge_min_radius = std::min(edge_min_radius, rho);
      if (rho <= r1) {
        const double h_sq = geom::mean_curvature_vector(jet).squaredNorm();
        sup_h_sq = std::max(sup_h_sq, h_sq);
      }
      const geom::MetricData metric = geom::induced_metric(jet);
      const double s = jet.position().dot(model.direction());
      double vol = 1.0;
      for (int i = 0; i < dim; ++i) vol *= hs[i] / sub;
      samples.emplace_back(rho, std::exp((a - 1.0) * s) * metric.sqrt_det * vol);
    }
    int i = 0;
    while (i < dim && ++idx[i] == cells[i]) idx[i++] = 0;
    if (i == dim) break;
  }

  require(edge_min_radius > r1, ErrorCode::invalid_argument,
          "growth: sampled box does not cover the extrinsic ball "
          "(divergent tail)");
  require(sup_h_sq < (a - 1.0) / a, ErrorCode::invalid_argument,
          "growth: hypothesis sup H^2 < (a-1)/a fails on the sampled region");

  std::sort(samples.begin(), samples.end());
  std::vector<double> radii(samples.size()), prefix(samples.size());
  double acc = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    radii[i] = samples[i].first;
    acc += samples[i].second;
    prefix[i] = acc;
  }
  auto mass_within = [&](double R) {
    const auto it = std::upper_bound(radii.begin(), radii.end(), R);
    if (it == radii.begin()) return 0.0;
    return prefix[static_cast<std::size_t>(it - radii.begin()) - 1];
  };

  GrowthReport rep;
  rep.a = a;
  rep.sup_h_sq = sup_h_sq;
  rep.epsilon = a - 1.0 - a * sup_h_sq;
  const double f0 = mass_within(r0);
  require(f0 > 0, ErrorCode::invalid_argument,
          "growth: empty ball at R0 for this sampling");
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < r_count; ++i) {
    const double R = r0 + (r1 - r0) * i / (r_count - 1);
    GrowthPoint pt;
    pt.R = R;
    pt.f_R = mass_within(R);
    pt.ratio = pt.f_R * std::exp(-rep.epsilon * (R - r0)) / f0;
    rep.min_ratio = std::min(rep.min_ratio, pt.ratio);
    rep.points.push_back(pt);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Divergence identity
// ---------------------------------------------------------------------------

DivergenceReport divergence_identity_check(const WeightedMesh& mesh,
                                           const std::vector<double>& phi) {
  const geom::PatchSamples& p = mesh.patch;
  require(phi.size() == p.size(), ErrorCode::invalid_argument,
          "divergence check: field size mismatch");
  const int dim = p.dim;
  const double hx = p.hx, hy = dim == 2 ? p.hy : 1.0;

  // one-sided second-order first differences at the boundary
  auto dx = [&](const std::vector<double>& f, int i, int j) {
    if (i == 0)
      return (-3.0 * f[p.index(0, j)] + 4.0 * f[p.index(1, j)] -
              f[p.index(2, j)]) /
             (2.0 * hx);
    if (i == p.nx - 1)
      return (3.0 * f[p.index(i, j)] - 4.0 * f[p.index(i - 1, j)] +
              f[p.index(i - 2, j)]) /
             (2.0 * hx);
    return (f[p.index(i + 1, j)] - f[p.index(i - 1, j)]) / (2.0 * hx);
  };
  auto dy = [&](const std::vector<double>& f, int i, int j) {
    if (j == 0)
      return (-3.0 * f[p.index(i, 0)] + 4.0 * f[p.index(i, 1)] -
              f[p.index(i, 2)]) /
             (2.0 * hy);
    if (j == p.ny - 1)
      return (3.0 * f[p.index(i, j)] - 4.0 * f[p.index(i, j - 1)] +
              f[p.index(i, j - 2)]) /
             (2.0 * hy);
    return (f[p.index(i, j + 1)] - f[p.index(i, j - 1)]) / (2.0 * hy);
  };

  // flux components q^i = sqrt(g) g^{ij} e^{-S} d_j phi at every node
  std::vector<double> qx(p.size(), 0.0), qy(p.size(), 0.0);
  for (int j = 0; j < p.ny; ++j) {
    for (int i = 0; i < p.nx; ++i) {
      const int idx = p.index(i, j);
      const double fx = dx(phi, i, j);
      const double fy = dim == 2 ? dy(phi, i, j) : 0.0;
      const double e = std::exp(-mesh.s[idx]);
      const double sd = p.sqrt_det[idx];
      const Matrix& gi = p.g_inv[idx];
      qx[idx] = sd * e * (gi(0, 0) * fx + (dim == 2 ? gi(0, 1) * fy : 0.0));
      if (dim == 2) qy[idx] = sd * e * (gi(1, 0) * fx + gi(1, 1) * fy);
    }
  }

  DivergenceReport rep;
  // interior: L phi dm = div(q) dx
  for (int j = 0; j < p.ny; ++j) {
    for (int i = 0; i < p.nx; ++i) {
      double div = dx(qx, i, j);
      if (dim == 2) div += dy(qy, i, j);
      double cell = hx * quadrature_factor(i, p.nx);
      if (dim == 2) cell *= hy * quadrature_factor(j, p.ny);
      rep.interior += cell * div;
    }
  }
  // boundary flux
  if (dim == 1) {
    rep.boundary = qx[p.index(p.nx - 1, 0)] - qx[p.index(0, 0)];
  } else {
    for (int j = 0; j < p.ny; ++j) {
      const double c = hy * quadrature_factor(j, p.ny);
      rep.boundary += c * qx[p.index(p.nx - 1, j)];
      rep.boundary -= c * qx[p.index(0, j)];
    }
    for (int i = 0; i < p.nx; ++i) {
      const double c = hx * quadrature_factor(i, p.nx);
      rep.boundary += c * qy[p.index(i, p.ny - 1)];
      rep.boundary -= c * qy[p.index(i, 0)];
    }
  }
  rep.residual = std::abs(rep.interior - rep.boundary);
  return rep;
}

// ---------------------------------------------------------------------------
// Planarity hypothesis report
// ---------------------------------------------------------------------------

PlanarityReport planarity_hypothesis_report(const SolitonModel& model,
                                            const Vector& e, double p_power,
                                            const std::vector<double>& r_list,
                                            double h) {
  require(p_power < 0, ErrorCode::invalid_argument,
          "planarity report: p must be negative");
  require(e.size() == model.ambient_dim(), ErrorCode::invalid_argument,
          "planarity report: direction dimension mismatch");
  require(!r_list.empty() && h > 0, ErrorCode::invalid_argument,
          "planarity report: invalid sampling");

  const Box& dom = model.domain();
  const int dim = dom.dim();
  std::array<double, 2> lo{dom.lo(0), dim == 2 ? dom.lo(1) : 0.0};
  std::array<double, 2> hi{dom.hi(0), dim == 2 ? dom.hi(1) : 0.0};
  const geom::PatchSamples patch =
      geom::sample_patch(dim, lo, hi, {h, h}, model.immersion(), 1);

  const double exponent = p_power + 1.0;
  const bool integer_power = std::abs(exponent - std::round(exponent)) == 0.0;

  PlanarityReport rep;
  rep.min_nu_e = std::numeric_limits<double>::infinity();
  rep.max_nu_e = -rep.min_nu_e;
  rep.min_grad_h_e = std::numeric_limits<double>::infinity();
  rep.max_grad_h_e = -rep.min_grad_h_e;

  std::vector<double> f(patch.size()), radius(patch.size()), dv(patch.size());
  for (int j = 0; j < patch.ny; ++j) {
    for (int i = 0; i < patch.nx; ++i) {
      const int idx = patch.index(i, j);
      f[idx] = patch.normal[idx].dot(e);
      radius[idx] = patch.position[idx].norm();
      double cell = patch.hx * quadrature_factor(i, patch.nx);
      if (dim == 2) cell *= patch.hy * quadrature_factor(j, patch.ny);
      dv[idx] = cell * patch.sqrt_det[idx];
      rep.min_nu_e = std::min(rep.min_nu_e, f[idx]);
      rep.max_nu_e = std::max(rep.max_nu_e, f[idx]);
      require(f[idx] > 0 || integer_power, ErrorCode::invalid_argument,
              "planarity report: <nu,e> <= 0 with a non-integer power");
    }
  }
  // sampled range of <grad H, e> on interior nodes
  for (int j = 0; j < patch.ny; ++j) {
    for (int i = 0; i < patch.nx; ++i) {
      if (!patch.interior(i, j)) continue;
      const int idx = patch.index(i, j);
      Vector dh(dim);
      dh(0) = (patch.H[patch.index(i + 1, j)] - patch.H[patch.index(i - 1, j)]) /
              (2.0 * patch.hx);
      if (dim == 2)
        dh(1) = (patch.H[patch.index(i, j + 1)] -
                 patch.H[patch.index(i, j - 1)]) /
                (2.0 * patch.hy);
      const Vector grad =
          patch.tangents[idx] * (patch.g_inv[idx] * dh);
      const double v = grad.dot(e);
      rep.min_grad_h_e = std::min(rep.min_grad_h_e, v);
      rep.max_grad_h_e = std::max(rep.max_grad_h_e, v);
    }
  }

  for (double R : r_list) {
    require(R > 0, ErrorCode::invalid_argument, "planarity report: R must be > 0");
    PlanarityPoint pt;
    pt.R = R;
    double acc = 0;
    for (std::size_t idx = 0; idx < patch.size(); ++idx) {
      if (radius[idx] <= R || radius[idx] > 2.0 * R) continue;
      acc += dv[idx] * std::pow(f[idx], exponent);
    }
    pt.value = acc / (R * R);
    rep.points.push_back(pt);
  }
  return rep;
}

}  // namespace tlab::analysis
