#ifndef TRANSLATORLAB_FLOW_HPP
#define TRANSLATORLAB_FLOW_HPP

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "translatorlab/geometry.hpp"

namespace tlab::flow {

using geom::Matrix;
using geom::Vector;

enum class ShapeKind { rectangle, disc, ellipse };

/// Bounded convex domain in R^n (n = 1 or 2).
class DomainSpec {
 public:
  static DomainSpec rectangle(const Vector& lo, const Vector& hi);
  static DomainSpec disc(const Vector& center, double radius);
  static DomainSpec ellipse(const Vector& center, const Vector& semi_axes);

  ShapeKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double diameter() const;
  Vector anchor() const;  // lattice anchor: rectangle corner or center
  bool inside(const Vector& x) const;
  // t in (0, 1] with x + t*arm on the boundary; requires x inside and
  // x + arm outside.
  double exit_fraction(const Vector& x, const Vector& arm) const;
  Vector outward_normal(const Vector& p) const;
  bool on_boundary(const Vector& p, double tol) const;
  std::vector<Vector> boundary_samples(int count) const;

  const Vector& rect_lo() const { return lo_; }
  const Vector& rect_hi() const { return hi_; }
  const Vector& center() const { return center_; }
  double radius() const { return radius_; }
  const Vector& semi_axes() const { return semi_; }

 private:
  DomainSpec() = default;
  ShapeKind kind_ = ShapeKind::rectangle;
  int dim_ = 1;
  Vector lo_, hi_, center_, semi_;
  double radius_ = 0;
};

/// Dirichlet data psi with derivative evaluators and certified sup values.
struct BoundaryData {
  int n = 1;
  int k = 1;
  std::function<Vector(const Vector&)> value;         // psi(x), k entries
  std::function<Matrix(const Vector&)> jacobian;      // k x n
  std::function<Matrix(const Vector&, int)> hessian;  // n x n per component
  double sup_d2psi = 0;           // sup_Omega |D^2 psi| (spectral, max comp)
  double sup_dpsi_boundary = 0;   // sup_boundary |D psi| (Frobenius)
};

BoundaryData psi_zero(int n, int k);
BoundaryData psi_affine(const Matrix& linear, const Vector& constant);
BoundaryData psi_quadratic(const std::vector<Matrix>& quadratic,
                           const Matrix& linear, const Vector& constant,
                           const DomainSpec& spec);
// Arbitrary evaluators; sup values certified by dense probing of spec.
BoundaryData psi_custom(int n, int k,
                        std::function<Vector(const Vector&)> value,
                        std::function<Matrix(const Vector&)> jacobian,
                        std::function<Matrix(const Vector&, int)> hessian,
                        const DomainSpec& spec);

/// Lattice with Shortley-Weller cut arms. Interior nodes carry, per
/// direction family and side, either a regular neighbor or the cut
/// fraction theta and the boundary point.
struct Grid {
  DomainSpec spec = DomainSpec::rectangle(Vector::Constant(1, 0.0),
                                          Vector::Constant(1, 1.0));
  double h = 0;
  int dim = 1;
  int families = 1;  // 1 in 1d; x, y, (1,1), (1,-1) in 2d
  std::array<int, 2> shape{0, 1};
  std::array<int, 2> base{0, 0};
  Vector anchor;

  std::vector<int> ordinal;             // lattice flat -> ordinal+1, 0 = none
  std::vector<Vector> position;         // per interior node
  std::vector<int> arm_neighbor;        // [node*families*2 + fam*2 + side]
  std::vector<double> arm_theta;
  std::vector<Vector> arm_cut_point;    // non-empty only for cut arms
  std::vector<double> cell_volume;      // quadrature weight per node
  std::vector<char> boundary_adjacent;  // any cut arm

  int count() const { return static_cast<int>(position.size()); }
  int arm_index(int node, int fam, int side) const {
    return (node * families + fam) * 2 + side;
  }
};

// Interior nodes are lattice points strictly inside the domain; curved
// pieces get Shortley-Weller cut distances per direction. Fails with a
// resolution error when h is too coarse for the domain.
Grid discretize_domain(const DomainSpec& spec, double h);

/// Grid plus boundary data and drift, with psi cached where the stencils
/// and monitors need it.
struct Problem {
  Grid grid;
  BoundaryData psi;
  Vector w;  // drift (k entries); the ambient direction is (0, w)
  int k = 1;

  std::vector<double> psi_interior;   // node*k, initial data
  std::vector<double> arm_psi;        // arm*k, psi at cut points
  std::vector<int> cut_arms;          // arm indices with a cut
  std::vector<double> sup_psi;        // per component, over nodes + cuts
  std::vector<double> psi_hess;       // node*k*3: h11, h12, h22
  std::vector<Vector> barrier_points;
  std::vector<Vector> barrier_normal;            // outward, per barrier point
  std::vector<std::vector<double>> barrier_dist;  // per point, per node
};

Problem make_problem(const DomainSpec& spec, double h, const BoundaryData& psi,
                     const Vector& w,
                     const std::vector<Vector>& barrier_points = {});

struct State {
  double t = 0;
  std::vector<double> f;  // node*k + alpha
};

State initial_state(const Problem& problem);

struct StepStats {
  double sup_rhs = 0;           // steady residual, max |g^{ij} f_ij + w|
  double sup_df_sq = 0;         // max Frobenius^2 of Df
  double min_ginv_eig = 1;      // over nodes
  double max_ginv_eig = 1;
  double dissipation_rate = 0;  // integral of |v_perp|^2 e^{-S} dv
  double sup_f = 0;
};

/// Reusable per-node evaluation buffers.
struct Workspace {
  std::vector<double> rhs;       // node*k
  std::vector<double> jac;       // node*k*dim
  std::vector<double> g_inv;     // node*3: g11, g12, g22 (g12/g22 unused in 1d)
  std::vector<double> sqrt_det;  // node
  std::vector<double> dissipand;
  StepStats stats;
};

// One evaluation of the quasilinear operator g^{ij} D_ij f + w over the
// interior, with per-node metric data and deterministic reductions.
void evaluate(const Problem& problem, const State& state, Workspace& ws);

std::vector<double> spatial_operator(const Problem& problem,
                                     const State& state);

double cfl_timestep(const Problem& problem, double sigma);

// Explicit Euler update; throws blow_up on non-finite or runaway fields.
void step(const Problem& problem, State& state, double dt, Workspace& ws);

struct DiagnosticsRow {
  double t, sup_f, sup_fbar, sup_bdry_grad, steady_res, area, dissipation,
      barrier_margin;
};

struct Diagnostics {
  std::vector<DiagnosticsRow> rows;
};

struct RunConfig {
  double sigma = 0.5;
  double t_max = 10.0;
  double tol_steady = 1e-8;
  int record_every = 100;
  double dt_scale = 1.0;       // > 1 deliberately violates the CFL bound
  double tol_barrier = 1e-8;
  double tol_monitor = 1e-10;  // relative, max principle
  bool escalate_violations = true;
};

struct GradMonitor {
  double observed = 0, bound = 0;
  bool ok = true;
};

struct MaxPrincipleReport {
  double margin = 0;  // min over components and both inequalities
  bool ok = true;
};

struct BarrierSummary {
  double mu_k = 0;
  double value_margin = 0;          // min over nodes, records, components
  double supersolution_margin = 0;  // same for the discrete (d_t - L) S
  bool ok = true;
};

struct RunResult {
  State state;
  Diagnostics diagnostics;
  long steps = 0;
  bool steady = false;
  double steady_residual = 0;
  double tau = 0;  // running sup |Df|^2
  GradMonitor boundary_gradient;
  MaxPrincipleReport max_principle;
  BarrierSummary barrier;
  double volume_residual = 0;
  double sandwich_margin = 0;  // min over records of the metric bounds margin
  bool monitors_ok = true;
};

RunResult run(const Problem& problem, const RunConfig& config);

// ---------------------------------------------------------------------------
// Standalone checkers
// ---------------------------------------------------------------------------

struct SmallDataReport {
  double value = 0;
  bool satisfied = false;
};

// 8 D (n sup|D^2 psi| + 1) + sqrt(2) sup_boundary |D psi| < 1
SmallDataReport check_small_data_condition(const DomainSpec& spec,
                                           const BoundaryData& psi);

GradMonitor boundary_gradient_monitor(const Problem& problem,
                                      const Workspace& ws, double tau);

// running_boundary_sup: per component, max over past records of
// sup_boundary |psi^a - t w^a| (updated by the caller).
MaxPrincipleReport max_principle_monitor(
    const Problem& problem, const State& state,
    const std::vector<double>& running_boundary_sup, double tol_rel = 1e-10);

struct BarrierOutcome {
  bool requirement_ok = false;  // the mu K^2 constraint holds
  bool margins_evaluated = false;
  double value_margin_upper = 0, value_margin_lower = 0;
  double supersolution_margin_upper = 0, supersolution_margin_lower = 0;
};

// Comparison function mu log(1 + K d_Gamma) -/+ (f^a - psi^a) against the
// supporting hyperplane at boundary point p. mu_k = 0 picks the canonical
// value 4 D (1+tau)(n sup|D^2 psi| + 1); when the stated requirement fails
// for a caller-supplied mu_k the margins are not evaluated.
BarrierOutcome barrier_check(const Problem& problem, const State& state,
                             const Vector& p, int alpha, double tau,
                             double mu_k = 0);

// max over records of |V(t) - V(0) + dissipation(t)|
double volume_balance(const Diagnostics& diagnostics);

}  // namespace tlab::flow

#endif
