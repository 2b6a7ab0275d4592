#ifndef TRANSLATORLAB_SOLITONS_HPP
#define TRANSLATORLAB_SOLITONS_HPP

#include <memory>
#include <vector>

#include "translatorlab/geometry.hpp"

namespace tlab::solitons {

using geom::GraphJet;
using geom::Matrix;
using geom::Vector;

enum class Kind { hyperplane, grim_reaper, tilted_grim_reaper, bowl };

/// Tabulated rotationally symmetric profile u(r) of the entire graphical
/// translator in dimension n >= 2, dome side up (u decreasing, u' <= 0).
/// Near the origin the series u = -r^2/(2n) - r^4/(4 n^3 (n+2)) is used;
/// beyond r_series the profile is integrated with classic RK4.
struct BowlProfile {
  int dim = 2;
  double step = 0;
  double r_series = 0;
  std::vector<double> r, u, du, d2u;

  double r_max() const { return r.empty() ? 0.0 : r.back(); }
  void eval(double radius, double* u_out, double* du_out, double* d2u_out) const;
  // Residual of u''/(1+u'^2) + (n-1) u'/r + 1 at an arbitrary radius.
  double ode_residual(double radius) const;
};

BowlProfile bowl_profile(int dim, double r_max, double step);

struct Box {
  Vector lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
};

// Closed-form jets (dome side up). Outside the stated domains these throw.
GraphJet grim_reaper_jet(double x);
GraphJet tilted_grim_reaper_jet(double theta, double x, double y);

/// An analytic translating soliton with jet evaluators, a declared
/// parameter box, and the ambient translation direction.
class SolitonModel {
 public:
  static SolitonModel hyperplane(int dim);
  static SolitonModel grim_reaper();
  static SolitonModel tilted_grim_reaper(double theta);
  static SolitonModel bowl(int dim, double r_max = 10.0, double step = 1e-3);
  static SolitonModel bowl_from_profile(BowlProfile profile);

  Kind kind() const { return kind_; }
  int base_dim() const { return base_dim_; }
  int ambient_dim() const { return base_dim_ + 1; }
  double theta() const { return theta_; }
  const Box& domain() const { return domain_; }
  Vector direction() const;  // ambient unit W
  double residual_tol() const;
  const BowlProfile& profile() const;

  GraphJet jet(const Vector& x) const;
  GraphJet jet1(double x) const;            // 1-parameter models
  GraphJet jet2(double x, double y) const;  // 2-parameter models

  geom::ImmersionFn immersion() const;  // graph coordinates
 private:
  SolitonModel() = default;
  Kind kind_ = Kind::grim_reaper;
  int base_dim_ = 1;
  double theta_ = 0;
  Box domain_;
  std::shared_ptr<const BowlProfile> profile_;
};

struct ScanStep {
  double value;
  Vector location;
};

// inf of |H_vec|^2 over nested expanding windows; sample sets accumulate,
// so the sequence is non-increasing by construction.
std::vector<ScanStep> inf_h_scan(const SolitonModel& model,
                                 const std::vector<Box>& windows,
                                 int samples_per_axis);

struct MinSReport {
  double value;
  Vector location;
  bool on_boundary;
};

MinSReport min_s_window(const SolitonModel& model, const Box& window,
                        int samples_per_axis);

struct VerifyReport {
  double max_soliton_residual = 0;
  double max_pythagoras_defect = 0;     // | |grad S|^2 + |H|^2 - 1 |
  double max_drift_identity_defect = 0;  // | LS + 1 |
  double max_trace_defect = 0;           // | trace hessian S - laplace S |
  Vector worst_location;
  bool pass = false;

  double worst() const;
};

// Runs the pointwise identity suite over a jet family. Throws
// verification_failure (carrying the worst offender) above tol.
VerifyReport verify_jets(const std::function<GraphJet(const Vector&)>& jets,
                         const Vector& W, const Box& box, int samples_per_axis,
                         double tol);

VerifyReport model_verify(const SolitonModel& model, int samples_per_axis,
                          double tol);

}  // namespace tlab::solitons

#endif
