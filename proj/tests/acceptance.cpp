// Acceptance suite: runs every shipped guarantee at its stated tolerance
// and prints one pass/fail line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "translatorlab/analysis.hpp"
#include "translatorlab/flow.hpp"
#include "translatorlab/geometry.hpp"
#include "translatorlab/solitons.hpp"

using namespace tlab;
using geom::Matrix;
using geom::Vector;
using solitons::Box;
using solitons::SolitonModel;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, double seconds,
            const std::string& detail) {
  std::printf("[%s] %2d %-28s (%6.1fs) %s\n", pass ? "PASS" : "FAIL", id,
              name.c_str(), seconds, detail.c_str());
  if (!pass) ++g_failures;
}

template <typename Fn>
void criterion(int id, const std::string& name, const Fn& fn) {
  const auto start = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    pass = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  report(id, name, pass, seconds, detail);
}

Box box1(double lo, double hi) {
  Box b;
  b.lo = Vector::Constant(1, lo);
  b.hi = Vector::Constant(1, hi);
  return b;
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

// shared flow runs for criteria 4-10
struct ReferenceRuns {
  flow::Problem problem_1d;
  flow::RunResult run_1d;
  flow::Problem problem_1d_coarse;
  flow::RunResult run_1d_coarse;
  flow::Problem problem_2d;
  flow::RunResult run_2d;
  bool ok_1d = false, ok_2d = false;
};

ReferenceRuns g_runs;

flow::RunResult run_interval(const flow::Problem& pb) {
  flow::RunConfig cfg;
  cfg.sigma = 0.9;
  cfg.t_max = 40.0;
  cfg.tol_steady = 1e-8;
  cfg.record_every = 2000;
  return flow::run(pb, cfg);
}

}  // namespace

int main() {
  std::printf("translator_lab acceptance suite\n");

  criterion(1, "soliton identity suite", [](std::string& detail) {
    const auto model = SolitonModel::grim_reaper();
    const auto rep = solitons::verify_jets(
        [&](const Vector& x) { return model.jet(x); }, model.direction(),
        model.domain(), 10000, 1e-10);
    detail = fmt("residual %.2e, pythagoras %.2e, drift %.2e",
                 rep.max_soliton_residual, rep.max_pythagoras_defect,
                 rep.max_drift_identity_defect);
    return rep.max_soliton_residual <= 1e-10 &&
           rep.max_pythagoras_defect <= 1e-10 &&
           rep.max_drift_identity_defect <= 1e-10;
  });

  criterion(2, "curvature identity convergence", [](std::string& detail) {
    const auto model = SolitonModel::grim_reaper();
    double jac[2], cur[2];
    int level = 0;
    for (double h : {2e-3, 1e-3}) {
      const auto patch = geom::sample_patch(1, {-1.0, 0.0}, {1.0, 0.0},
                                            {h, h}, model.immersion(), 1);
      jac[level] = geom::jacobi_normal_residual(patch).max_abs;
      cur[level] =
          geom::mean_curvature_identity_residual(patch, model.direction())
              .max_abs;
      ++level;
    }
    const double jacobi_order = std::log2(jac[0] / jac[1]);
    const double curvature_order = std::log2(cur[0] / cur[1]);
    detail = fmt("jacobi order %.3f, curvature order %.3f", jacobi_order,
                 curvature_order);
    return jacobi_order >= 1.9 && curvature_order >= 1.9;
  });

  criterion(3, "bowl profile oracle", [](std::string& detail) {
    const auto profile = solitons::bowl_profile(2, 10.0, 1e-3);
    double worst = 0;
    for (double r = profile.r_series; r <= 10.0; r += 5e-4)
      worst = std::max(worst, std::abs(profile.ode_residual(r)));
    double u, du, d2u;
    profile.eval(0.1, &u, &du, &d2u);
    const double near = std::abs(u + 0.1 * 0.1 / 4.0);
    detail = fmt("ode residual %.2e, near-origin defect %.2e", worst, near);
    return worst <= 1e-8 && near <= 1e-6;
  });

  criterion(4, "flow vs closed form (1d)", [](std::string& detail) {
    const auto spec = flow::DomainSpec::rectangle(Vector::Constant(1, -1),
                                                  Vector::Constant(1, 1));
    g_runs.problem_1d = flow::make_problem(spec, 1.0 / 200.0,
                                           flow::psi_zero(1, 1),
                                           Vector::Constant(1, 1.0));
    g_runs.run_1d = run_interval(g_runs.problem_1d);
    g_runs.problem_1d_coarse = flow::make_problem(spec, 1.0 / 100.0,
                                                  flow::psi_zero(1, 1),
                                                  Vector::Constant(1, 1.0));
    g_runs.run_1d_coarse = run_interval(g_runs.problem_1d_coarse);
    g_runs.ok_1d = true;

    double sup_err = 0, center = 0;
    for (int node = 0; node < g_runs.problem_1d.grid.count(); ++node) {
      const double x = g_runs.problem_1d.grid.position[node](0);
      const double exact = std::log(std::cos(x) / std::cos(1.0));
      sup_err = std::max(sup_err,
                         std::abs(g_runs.run_1d.state.f[node] - exact));
      if (std::abs(x) < 1e-12) center = g_runs.run_1d.state.f[node];
    }
    const double center_err = std::abs(center + std::log(std::cos(1.0)));
    detail = fmt("sup error %.2e, u(0) error %.2e, residual %.2e", sup_err,
                 center_err, g_runs.run_1d.steady_residual);
    return g_runs.run_1d.steady && sup_err <= 5e-4 && center_err <= 5e-4 &&
           g_runs.run_1d.steady_residual < 1e-8;
  });

  criterion(5, "flow vs radial oracle (2d)", [](std::string& detail) {
    const auto spec = flow::DomainSpec::disc(Vector::Zero(2), 0.4);
    g_runs.problem_2d = flow::make_problem(spec, 1.0 / 128.0,
                                           flow::psi_zero(2, 1),
                                           Vector::Constant(1, 1.0));
    flow::RunConfig cfg;
    cfg.sigma = 0.5;
    cfg.t_max = 5.0;
    cfg.tol_steady = 1e-8;
    cfg.record_every = 5000;
    g_runs.run_2d = flow::run(g_runs.problem_2d, cfg);
    g_runs.ok_2d = true;

    const testsupport::RadialProfileOracle oracle(2, 0.5, 1e-5);
    const double shift = oracle.value(0.4);
    double sup_err = 0;
    for (int node = 0; node < g_runs.problem_2d.grid.count(); ++node) {
      const double r = g_runs.problem_2d.grid.position[node].norm();
      sup_err = std::max(sup_err, std::abs(g_runs.run_2d.state.f[node] -
                                           (oracle.value(r) - shift)));
    }
    detail = fmt("sup error %.2e, residual %.2e", sup_err,
                 g_runs.run_2d.steady_residual);
    return g_runs.run_2d.steady && sup_err <= 1e-3;
  });

  criterion(6, "maximum principles", [](std::string& detail) {
    if (!g_runs.ok_1d || !g_runs.ok_2d) {
      detail = "reference runs unavailable";
      return false;
    }
    const double scale_1d = 1.0 + 2.0 * g_runs.run_1d.state.t;
    const double scale_2d = 1.0 + 2.0 * g_runs.run_2d.state.t;
    detail = fmt("margins %.2e (1d), %.2e (2d)",
                 g_runs.run_1d.max_principle.margin,
                 g_runs.run_2d.max_principle.margin);
    return g_runs.run_1d.max_principle.margin >= -1e-10 * scale_1d &&
           g_runs.run_2d.max_principle.margin >= -1e-10 * scale_2d;
  });

  criterion(7, "boundary gradient bound", [](std::string& detail) {
    if (!g_runs.ok_1d || !g_runs.ok_2d) {
      detail = "reference runs unavailable";
      return false;
    }
    const auto& g1 = g_runs.run_1d.boundary_gradient;
    const auto& g2 = g_runs.run_2d.boundary_gradient;
    // for the interval: D = 2, n = 1, psi = 0 -> bound = 8 (1 + tau)
    const double expected = 8.0 * (1.0 + g_runs.run_1d.tau);
    detail = fmt("1d: %.4f <= %.4f (formula %.4f)", g1.observed, g1.bound,
                 expected);
    return g1.ok && g2.ok && g1.observed <= g1.bound &&
           g2.observed <= g2.bound &&
           std::abs(g1.bound - expected) <= 1e-12 * expected;
  });

  criterion(8, "barrier margins", [](std::string& detail) {
    if (!g_runs.ok_1d) {
      detail = "reference run unavailable";
      return false;
    }
    detail = fmt("value %.2e, supersolution %.2e",
                 g_runs.run_1d.barrier.value_margin,
                 g_runs.run_1d.barrier.supersolution_margin);
    return g_runs.run_1d.barrier.value_margin >= -1e-8 &&
           g_runs.run_1d.barrier.supersolution_margin >= -1e-8;
  });

  criterion(9, "smallness checker", [](std::string& detail) {
    const auto small = flow::check_small_data_condition(
        flow::DomainSpec::disc(Vector::Zero(2), 0.025), flow::psi_zero(2, 1));
    const auto large = flow::check_small_data_condition(
        flow::DomainSpec::disc(Vector::Zero(2), 0.1), flow::psi_zero(2, 1));
    detail = fmt("values %.3f / %.3f", small.value, large.value);
    return small.value == 0.4 && small.satisfied && large.value == 1.6 &&
           !large.satisfied;
  });

  criterion(10, "volume balance", [](std::string& detail) {
    if (!g_runs.ok_1d) {
      detail = "reference run unavailable";
      return false;
    }
    const double v0 = g_runs.run_1d.diagnostics.rows.front().area;
    const double fine = flow::volume_balance(g_runs.run_1d.diagnostics);
    const double coarse =
        flow::volume_balance(g_runs.run_1d_coarse.diagnostics);
    detail = fmt("residual %.2e <= %.2e, coarse %.2e", fine, 5e-3 * v0,
                 coarse);
    return fine <= 5e-3 * v0 && fine < coarse;
  });

  criterion(11, "spectral stability", [](std::string& detail) {
    const auto mesh = analysis::build_weighted_mesh(
        SolitonModel::grim_reaper(), box1(-1, 1), 2e-3);
    const auto st = analysis::stability_condition(mesh, 1.0);
    const auto coarse = analysis::drift_first_eigenvalue(mesh);
    const auto fine = analysis::drift_first_eigenvalue(
        analysis::build_weighted_mesh(SolitonModel::grim_reaper(),
                                      box1(-1, 1), 1e-3));
    const double drift = std::abs(fine.lambda1 - coarse.lambda1);
    detail = fmt("sup %.1e, lambda1 %.6f, refinement drift %.2e",
                 st.sup_value, coarse.lambda1, drift);
    return st.satisfied && std::abs(st.sup_value) <= 1e-12 &&
           coarse.lambda1 >= -1e-6 && drift <= 1e-3;
  });

  criterion(12, "weighted volume growth", [](std::string& detail) {
    const auto flat = analysis::weighted_volume_growth(
        SolitonModel::hyperplane(1), 2.0, 1.0, 4.0, 2e-3);
    const auto tilted = analysis::weighted_volume_growth(
        SolitonModel::tilted_grim_reaper(M_PI / 4), 4.0, 2.0, 5.0, 0.02);
    detail = fmt("ratios %.6f (flat, eps %.3f), %.6f (tilted)",
                 flat.min_ratio, flat.epsilon, tilted.min_ratio);
    return flat.epsilon == 1.0 && flat.min_ratio >= 1.0 - 1e-3 &&
           std::abs(tilted.epsilon - 1.0) < 1e-3 &&
           tilted.min_ratio >= 1.0 - 1e-2;
  });

  criterion(13, "divergence identity", [](std::string& detail) {
    const auto mesh = analysis::build_weighted_mesh(
        SolitonModel::grim_reaper(), box1(-1, 1), 1e-3);
    const auto rep = analysis::divergence_identity_check(mesh, mesh.s);
    const double lhs_err = std::abs(rep.interior + 2.0 * std::tan(1.0));
    detail = fmt("interior %.6f, defect %.2e, residual %.2e", rep.interior,
                 lhs_err, rep.residual);
    return lhs_err <= 1e-3 && rep.residual <= 1e-3;
  });

  criterion(14, "scans", [](std::string& detail) {
    const auto model = SolitonModel::grim_reaper();
    std::vector<Box> windows;
    for (int m = 0; m <= 6; ++m) {
      const double d = std::pow(2.0, -m);
      windows.push_back(box1(-M_PI / 2 + d, M_PI / 2 - d));
    }
    const auto steps = solitons::inf_h_scan(model, windows, 801);
    bool monotone = true;
    for (std::size_t m = 1; m < steps.size(); ++m)
      monotone = monotone && steps[m].value <= steps[m - 1].value;

    bool boundary = true;
    boundary &= solitons::min_s_window(model, box1(-1, 1), 501).on_boundary;
    boundary &=
        solitons::min_s_window(SolitonModel::hyperplane(1), box1(-2, 2), 101)
            .on_boundary;
    {
      Box b;
      b.lo = Vector(2);
      b.hi = Vector(2);
      b.lo << -1.2, -1.0;
      b.hi << 1.2, 1.0;
      boundary &= solitons::min_s_window(
                      SolitonModel::tilted_grim_reaper(M_PI / 4), b, 101)
                      .on_boundary;
      const auto bowl = SolitonModel::bowl(2, 6.0, 1e-3);
      Box bb;
      bb.lo = Vector::Constant(2, -1.4);
      bb.hi = Vector::Constant(2, 1.4);
      boundary &= solitons::min_s_window(bowl, bb, 101).on_boundary;
    }
    detail = fmt("final inf %.2e, monotone %.0f, boundary minima %.0f",
                 steps.back().value, monotone ? 1.0 : 0.0,
                 boundary ? 1.0 : 0.0);
    return monotone && steps.back().value <= 1e-3 && boundary;
  });

  std::printf("%d of 14 criteria passed\n", 14 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
