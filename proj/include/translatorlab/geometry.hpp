#ifndef TRANSLATORLAB_GEOMETRY_HPP
#define TRANSLATORLAB_GEOMETRY_HPP

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <vector>

#include "translatorlab/error.hpp"

namespace tlab::geom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Pointwise second-order data of a graph map x -> (x, f(x)),
/// f : R^n -> R^k. Everything else in the kernel derives from this.
struct GraphJet {
  Vector base;              // n base coordinates
  Vector value;             // k fiber values
  Matrix d1;                // n x k, d1(i,a) = df^a/dx^i
  std::vector<Matrix> d2;   // k matrices n x n, d2[a](i,j) symmetric

  int base_dim() const { return static_cast<int>(base.size()); }
  int fiber_dim() const { return static_cast<int>(value.size()); }
  int ambient_dim() const { return base_dim() + fiber_dim(); }

  Vector position() const;          // (x, f(x))
  Vector tangent(int i) const;      // dF/dx^i = (e_i, df/dx^i)
  Vector second(int i, int j) const;  // d2F/dx^i dx^j = (0, d2f)

  // Throws invalid_argument on non-finite entries, shape mismatch,
  // or d2 not symmetric exactly as stored.
  void validate() const;
};

struct MetricData {
  Matrix g;        // I + (d1)(d1)^T contracted over the fiber index
  Matrix g_inv;
  double sqrt_det;
};

/// Hypersurface shape data (fiber dimension 1), orientation fixed by caller.
struct ShapeData {
  Vector normal;              // unit normal, n+1 entries
  Matrix second_fundamental;  // h_ij = <D_i nu, F_j>
  double mean_curvature;      // H = g^{ij} h_ij
  double norm_A_sq;           // |A|^2 = g^{ik} g^{jl} h_ij h_kl
};

/// Calculus of the height S = <X, W> along the translation direction.
struct HeightData {
  double s;
  double grad_s_sq;     // |tangential part of W|^2
  double mean_curv_sq;  // |H_vec|^2
  double laplace_s;     // -|H_vec|^2 under the translator orientation
};

struct BoundsReport {
  bool ok;
  double margin;  // distance to the nearest bound, negative when violated
};

MetricData induced_metric(const GraphJet& jet);

// Checks 1/(1+tau) <= eigenvalues(g_inv) <= 1 up to tol.
BoundsReport metric_bounds_check(const MetricData& metric, double tau,
                                 double tol = 1e-12);

// Normal part of g^{ij} F_ij; zero for affine graphs.
Vector mean_curvature_vector(const GraphJet& jet);

// orientation +1 picks the normal with positive fiber component.
// Satisfies H_vec = -H * normal.
ShapeData hypersurface_shape(const GraphJet& jet, int orientation);

// Orthonormal normal frame, columns nu_alpha. Gram-Schmidt on the
// natural graph normals (-grad f^a, e_a); reduces to the upward unit
// normal when k = 1.
Matrix normal_frame(const GraphJet& jet);

// Componentwise H_alpha - <nu_alpha, W> in the frame above. Only the
// norm is frame-covariant for k > 1.
Vector soliton_residual(const GraphJet& jet, const Vector& W);

HeightData height_calculus(const GraphJet& jet, const Vector& W);

// Drift Laplacian of S: laplace_s - <W^T, grad S> = -(|H_vec|^2 + |W^T|^2),
// identically -1 on a translator with |W| = 1.
double drift_laplacian_height(const GraphJet& jet, const Vector& W);

// Hessian of S on tangent vectors: -<H_vec, II(U,V)>. U, V must be
// tangent within tol (relative), else invalid_argument.
double hessian_height(const GraphJet& jet, const Vector& W, const Vector& U,
                      const Vector& V, double tangent_tol = 1e-8);

// ---------------------------------------------------------------------------
// Sampled patches and discrete identity residuals.
// ---------------------------------------------------------------------------

/// Second-order data of a general immersion u -> X(u) (parameters need not
/// be graph coordinates; used for rotationally symmetric patches).
struct ImmersionJet {
  Vector position;                        // ambient point
  std::vector<Vector> d1;                 // dim tangent vectors
  std::vector<std::vector<Vector>> d2;    // dim x dim second derivatives
};

ImmersionJet immersion_from_graph(const GraphJet& jet);

using ImmersionFn = std::function<ImmersionJet(double, double)>;

/// Hypersurface patch sampled on a uniform structured parameter grid.
/// Interior nodes are those with a full 3x3 (or 3-point) stencil.
struct PatchSamples {
  int dim = 1;                 // 1 or 2 parameters
  int nx = 0, ny = 1;
  double hx = 0, hy = 0;
  std::array<double, 2> lo{0, 0};
  int ambient = 0;

  std::vector<double> sqrt_det;
  std::vector<Matrix> g_inv;     // dim x dim per node
  std::vector<Matrix> tangents;  // ambient x dim per node, columns dX/du^i
  std::vector<Vector> normal;    // unit normal per node
  std::vector<double> H;         // g^{ij} h_ij
  std::vector<double> norm_A_sq;
  std::vector<Vector> position;

  int index(int i, int j) const { return j * nx + i; }
  bool interior(int i, int j) const {
    return i >= 1 && i <= nx - 2 && (dim == 1 || (j >= 1 && j <= ny - 2));
  }
  std::size_t size() const { return sqrt_det.size(); }
};

// Samples a hypersurface immersion over [lo, hi] with spacing h per axis
// (dim inferred from lo/hi count used; hi_y = lo_y for 1D). Requires at
// least 3 nodes per axis, else insufficient_samples.
PatchSamples sample_patch(int dim, std::array<double, 2> lo,
                          std::array<double, 2> hi, std::array<double, 2> h,
                          const ImmersionFn& fn, int orientation);

/// Residual values on interior nodes (zero elsewhere) plus their sup.
struct ResidualField {
  std::vector<double> values;
  double max_abs = 0;
};

// Discrete Laplace-Beltrami (divergence form, half-node averaged
// coefficients sqrt(g) g^{ij}) of a nodal scalar field.
ResidualField laplace_beltrami(const PatchSamples& patch,
                               const std::vector<double>& field);

// Residual of Delta(nu) = grad H - |A|^2 nu, reported as the norm of the
// vector defect per interior node.
ResidualField jacobi_normal_residual(const PatchSamples& patch);

// Scalarized form for f = <nu, e>: Delta f - <grad H, e> + |A|^2 f.
ResidualField jacobi_scalar_residual(const PatchSamples& patch,
                                     const Vector& e);

// Residual of the curvature reaction identity on a translator:
// Delta H - <W^T, grad H> + H |A|^2.
ResidualField mean_curvature_identity_residual(const PatchSamples& patch,
                                               const Vector& W);

}  // namespace tlab::geom

#endif
