#ifndef TRANSLATORLAB_ANALYSIS_HPP
#define TRANSLATORLAB_ANALYSIS_HPP

#include <vector>

#include "translatorlab/geometry.hpp"
#include "translatorlab/solitons.hpp"

namespace tlab::analysis {

using geom::Matrix;
using geom::Vector;
using solitons::Box;
using solitons::SolitonModel;

/// Soliton patch sampled with quadrature weights for dm = e^{-S} dv.
struct WeightedMesh {
  geom::PatchSamples patch;
  Vector W;
  std::vector<double> s;       // height per node
  std::vector<double> weight;  // e^{-S} sqrt(g) * cell volume per node
  std::vector<double> w_tan;   // node*dim: <W, F_i>
  double total_mass = 0;

  int dim() const { return patch.dim; }
  std::size_t size() const { return patch.size(); }
};

WeightedMesh build_weighted_mesh(const SolitonModel& model, const Box& box,
                                 double h);

struct SpectralResult {
  double lambda1 = 0;
  std::vector<double> eigenfield;  // per node, zero on the boundary
  double residual = 0;
  int iterations = 0;
};

// Smallest eigenvalue of the symmetric pencil A phi = lambda B phi,
// A = integral(|grad phi|^2 - |A|^2 phi^2) dm, B = integral(phi^2) dm,
// Dirichlet rows eliminated, shifted inverse iteration.
SpectralResult drift_first_eigenvalue(const WeightedMesh& mesh,
                                      int max_iterations = 500);

// Rayleigh quotient of an explicit nodal test field (zero enforced on the
// boundary), using the same discrete forms as the eigensolver.
double rayleigh_quotient(const WeightedMesh& mesh,
                         const std::vector<double>& phi);

struct StabilityReport {
  double sup_value = 0;  // sup of a(a-1) - a^2 H^2 + |A|^2
  bool satisfied = false;
};

StabilityReport stability_condition(const WeightedMesh& mesh, double a);

struct GrowthPoint {
  double R = 0, f_R = 0, ratio = 0;
};

struct GrowthReport {
  double a = 0;
  double sup_h_sq = 0;   // over the sampled region
  double epsilon = 0;    // a - 1 - a sup H^2
  double min_ratio = 0;  // min over R of f(R) e^{-eps (R-R0)} / f(R0)
  std::vector<GrowthPoint> points;
};

// f(R) = integral of e^{(a-1)S} dv over the extrinsic ball of radius R,
// cells cut by the sphere weighted by sampled fraction.
GrowthReport weighted_volume_growth(const SolitonModel& model, double a,
                                    double r0, double r1, double h,
                                    int r_count = 33);

struct DivergenceReport {
  double interior = 0;  // integral of L phi dm
  double boundary = 0;  // boundary flux integral
  double residual = 0;
};

DivergenceReport divergence_identity_check(const WeightedMesh& mesh,
                                           const std::vector<double>& phi);

struct PlanarityPoint {
  double R = 0;
  double value = 0;  // (1/R^2) integral over T_R of <nu,e>^{p+1} dv
};

struct PlanarityReport {
  std::vector<PlanarityPoint> points;
  double min_nu_e = 0, max_nu_e = 0;
  double min_grad_h_e = 0, max_grad_h_e = 0;
};

// Hypothesis data for the rigidity statement; reports values and sampled
// sign ranges only, no conclusion is drawn.
PlanarityReport planarity_hypothesis_report(const SolitonModel& model,
                                            const Vector& e, double p,
                                            const std::vector<double>& r_list,
                                            double h);

}  // namespace tlab::analysis

#endif
