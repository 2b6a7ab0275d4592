#include "translator_lab.h"

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "translatorlab/analysis.hpp"
#include "translatorlab/flow.hpp"
#include "translatorlab/geometry.hpp"
#include "translatorlab/io.hpp"
#include "translatorlab/solitons.hpp"

using tlab::Error;
using tlab::ErrorCode;
using tlab::geom::Matrix;
using tlab::geom::Vector;

struct tl_model {
  tlab::solitons::SolitonModel model;
};

struct tl_flow {
  tlab::flow::Problem problem;
  tlab::flow::RunResult result;
};

struct tl_mesh {
  tlab::analysis::WeightedMesh mesh;
};

namespace {

thread_local std::string g_last_error;

tl_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::verification_failure:
    case ErrorCode::monitor_violation:
      return TL_VIOLATION;
    case ErrorCode::blow_up:
      return TL_BLOWUP;
    default:
      return TL_INVALID;
  }
}

template <typename Fn>
tl_status guarded(Fn&& fn) {
  try {
    fn();
    return TL_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TL_INVALID;
  }
}

tl_status fail_invalid(const char* msg) {
  g_last_error = msg;
  return TL_INVALID;
}

tlab::solitons::SolitonModel build_model(const tl_model_params& p) {
  switch (p.kind) {
    case TL_MODEL_HYPERPLANE:
      return tlab::solitons::SolitonModel::hyperplane(p.dim > 0 ? p.dim : 1);
    case TL_MODEL_GRIM_REAPER:
      return tlab::solitons::SolitonModel::grim_reaper();
    case TL_MODEL_TILTED_GRIM_REAPER:
      return tlab::solitons::SolitonModel::tilted_grim_reaper(p.theta);
    case TL_MODEL_BOWL:
      return tlab::solitons::SolitonModel::bowl(
          p.dim > 0 ? p.dim : 2, p.r_max > 0 ? p.r_max : 10.0,
          p.step > 0 ? p.step : 1e-3);
  }
  tlab::fail(ErrorCode::invalid_argument, "unknown model kind");
}

tlab::solitons::Box build_box(const double* lo, const double* hi, int dim) {
  tlab::solitons::Box box;
  box.lo = Vector(dim);
  box.hi = Vector(dim);
  for (int i = 0; i < dim; ++i) {
    box.lo(i) = lo[i];
    box.hi(i) = hi[i];
  }
  return box;
}

tlab::flow::DomainSpec build_domain(const tl_domain_params& d) {
  switch (d.kind) {
    case TL_DOMAIN_RECTANGLE: {
      tlab::require(d.dim == 1 || d.dim == 2, ErrorCode::invalid_argument,
                    "domain dim must be 1 or 2");
      Vector lo(d.dim), hi(d.dim);
      for (int i = 0; i < d.dim; ++i) {
        lo(i) = d.lo[i];
        hi(i) = d.hi[i];
      }
      return tlab::flow::DomainSpec::rectangle(lo, hi);
    }
    case TL_DOMAIN_DISC: {
      Vector c(2);
      c << d.center[0], d.center[1];
      return tlab::flow::DomainSpec::disc(c, d.radius);
    }
    case TL_DOMAIN_ELLIPSE: {
      Vector c(2), s(2);
      c << d.center[0], d.center[1];
      s << d.semi_axes[0], d.semi_axes[1];
      return tlab::flow::DomainSpec::ellipse(c, s);
    }
  }
  tlab::fail(ErrorCode::invalid_argument, "unknown domain kind");
}

tlab::flow::BoundaryData build_psi(const tl_psi_params& p, int n,
                                   const tlab::flow::DomainSpec& spec) {
  tlab::require(p.k >= 1, ErrorCode::invalid_argument,
                "psi must have at least one component");
  switch (p.kind) {
    case TL_PSI_ZERO:
      return tlab::flow::psi_zero(n, p.k);
    case TL_PSI_AFFINE: {
      Matrix a = Matrix::Zero(p.k, n);
      Vector c = Vector::Zero(p.k);
      if (p.linear)
        for (int r = 0; r < p.k; ++r)
          for (int j = 0; j < n; ++j) a(r, j) = p.linear[r * n + j];
      if (p.constant)
        for (int r = 0; r < p.k; ++r) c(r) = p.constant[r];
      return tlab::flow::psi_affine(a, c);
    }
    case TL_PSI_QUADRATIC: {
      Matrix a = Matrix::Zero(p.k, n);
      Vector c = Vector::Zero(p.k);
      std::vector<Matrix> q(p.k, Matrix::Zero(n, n));
      if (p.linear)
        for (int r = 0; r < p.k; ++r)
          for (int j = 0; j < n; ++j) a(r, j) = p.linear[r * n + j];
      if (p.constant)
        for (int r = 0; r < p.k; ++r) c(r) = p.constant[r];
      if (p.quadratic)
        for (int r = 0; r < p.k; ++r)
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              q[r](i, j) = p.quadratic[(r * n + i) * n + j];
      return tlab::flow::psi_quadratic(q, a, c, spec);
    }
  }
  tlab::fail(ErrorCode::invalid_argument, "unknown psi kind");
}

}  // namespace

extern "C" {

const char* tl_last_error(void) { return g_last_error.c_str(); }

tl_status tl_model_create(const tl_model_params* params, tl_model** out) {
  if (!params || !out) return fail_invalid("null argument");
  return guarded([&] { *out = new tl_model{build_model(*params)}; });
}

void tl_model_destroy(tl_model* model) { delete model; }

tl_status tl_model_domain(const tl_model* model, double* lo, double* hi,
                          int* dim) {
  if (!model || !lo || !hi || !dim) return fail_invalid("null argument");
  return guarded([&] {
    const tlab::solitons::Box& box = model->model.domain();
    *dim = box.dim();
    for (int i = 0; i < box.dim(); ++i) {
      lo[i] = box.lo(i);
      hi[i] = box.hi(i);
    }
  });
}

tl_status tl_model_verify(const tl_model* model, int samples_per_axis,
                          double tol, tl_verify_report* out) {
  if (!model || !out) return fail_invalid("null argument");
  tl_status bad = TL_OK;
  const tl_status st = guarded([&] {
    try {
      const tlab::solitons::VerifyReport rep =
          tlab::solitons::model_verify(model->model, samples_per_axis, tol);
      *out = {rep.max_soliton_residual, rep.max_pythagoras_defect,
              rep.max_drift_identity_defect, rep.max_trace_defect, 1};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::verification_failure) throw;
      // re-run without the throw to fill the report
      const tlab::solitons::VerifyReport rep = tlab::solitons::verify_jets(
          [&](const Vector& x) { return model->model.jet(x); },
          model->model.direction(), model->model.domain(), samples_per_axis,
          tol);
      *out = {rep.max_soliton_residual, rep.max_pythagoras_defect,
              rep.max_drift_identity_defect, rep.max_trace_defect, 0};
      g_last_error = e.what();
      bad = TL_VIOLATION;
    }
  });
  return st != TL_OK ? st : bad;
}

tl_status tl_model_write_profile_csv(const tl_model* model, const char* path) {
  if (!model || !path) return fail_invalid("null argument");
  return guarded(
      [&] { tlab::io::write_bowl_csv(path, model->model.profile()); });
}

tl_status tl_model_create_from_profile_csv(const char* path, int dim,
                                           tl_model** out) {
  if (!path || !out) return fail_invalid("null argument");
  return guarded([&] {
    *out = new tl_model{tlab::solitons::SolitonModel::bowl_from_profile(
        tlab::io::read_bowl_csv(path, dim))};
  });
}

tl_status tl_model_inf_h_scan(const tl_model* model, int windows,
                              int samples_per_axis, double* values) {
  if (!model || !values) return fail_invalid("null argument");
  return guarded([&] {
    tlab::require(windows >= 1, ErrorCode::invalid_argument,
                  "need at least one window");
    const tlab::solitons::Box& dom = model->model.domain();
    std::vector<tlab::solitons::Box> boxes;
    for (int m = 0; m < windows; ++m) {
      tlab::solitons::Box b;
      b.lo = Vector(dom.dim());
      b.hi = Vector(dom.dim());
      for (int i = 0; i < dom.dim(); ++i) {
        const double half = 0.5 * (dom.hi(i) - dom.lo(i));
        const double margin = half * std::pow(2.0, -m - 1);
        b.lo(i) = dom.lo(i) + margin;
        b.hi(i) = dom.hi(i) - margin;
      }
      boxes.push_back(b);
    }
    const std::vector<tlab::solitons::ScanStep> steps =
        tlab::solitons::inf_h_scan(model->model, boxes, samples_per_axis);
    for (int m = 0; m < windows; ++m) values[m] = steps[m].value;
  });
}

tl_status tl_model_min_s(const tl_model* model, const double* lo,
                         const double* hi, int samples_per_axis,
                         tl_min_s_report* out) {
  if (!model || !lo || !hi || !out) return fail_invalid("null argument");
  return guarded([&] {
    const tlab::solitons::MinSReport rep = tlab::solitons::min_s_window(
        model->model, build_box(lo, hi, model->model.base_dim()),
        samples_per_axis);
    out->value = rep.value;
    out->location[0] = rep.location(0);
    out->location[1] = rep.location.size() > 1 ? rep.location(1) : 0.0;
    out->on_boundary = rep.on_boundary ? 1 : 0;
  });
}

tl_status tl_identity_suite(const tl_model* model, const double* lo,
                            const double* hi, double h, int samples_per_axis,
                            double tol, double min_order,
                            tl_identity_report* out) {
  if (!model || !lo || !hi || !out) return fail_invalid("null argument");
  tl_status bad = TL_OK;
  const tl_status st = guarded([&] {
    const int dim = model->model.base_dim();
    const tlab::solitons::VerifyReport rep = tlab::solitons::verify_jets(
        [&](const Vector& x) { return model->model.jet(x); },
        model->model.direction(), build_box(lo, hi, dim), samples_per_axis,
        tol);
    out->pointwise = {rep.max_soliton_residual, rep.max_pythagoras_defect,
                      rep.max_drift_identity_defect, rep.max_trace_defect,
                      rep.pass ? 1 : 0};

    const Vector w = model->model.direction();
    std::array<double, 2> plo{lo[0], dim == 2 ? lo[1] : 0.0};
    std::array<double, 2> phi{hi[0], dim == 2 ? hi[1] : 0.0};
    double jac[2], cur[2];
    for (int level = 0; level < 2; ++level) {
      const double hh = level == 0 ? h : h / 2.0;
      const tlab::geom::PatchSamples patch = tlab::geom::sample_patch(
          dim, plo, phi, {hh, hh}, model->model.immersion(), 1);
      jac[level] = tlab::geom::jacobi_normal_residual(patch).max_abs;
      cur[level] =
          tlab::geom::mean_curvature_identity_residual(patch, w).max_abs;
    }
    out->jacobi_order = std::log2(jac[0] / jac[1]);
    out->curvature_order = std::log2(cur[0] / cur[1]);
    out->jacobi_residual = jac[1];
    out->curvature_residual = cur[1];
    out->pass = out->pointwise.pass && out->jacobi_order >= min_order &&
                out->curvature_order >= min_order;
    if (!out->pass) {
      g_last_error = "identity suite failed";
      bad = TL_VIOLATION;
    }
  });
  return st != TL_OK ? st : bad;
}

/* ------------------------------------------------------------------ */

tl_status tl_flow_run(const tl_flow_params* params, tl_flow** out) {
  if (!params || !out) return fail_invalid("null argument");
  return guarded([&] {
    const tlab::flow::DomainSpec spec = build_domain(params->domain);
    const tlab::flow::BoundaryData psi =
        build_psi(params->psi, spec.dim(), spec);
    tlab::require(params->w != nullptr, ErrorCode::invalid_argument,
                  "drift vector w is required");
    Vector w(psi.k);
    for (int c = 0; c < psi.k; ++c) w(c) = params->w[c];
    std::vector<Vector> barrier_points;
    if (params->barrier_point) {
      Vector p(spec.dim());
      for (int i = 0; i < spec.dim(); ++i) p(i) = params->barrier_point[i];
      barrier_points.push_back(p);
    }
    const tlab::flow::Problem problem =
        tlab::flow::make_problem(spec, params->h, psi, w, barrier_points);
    tlab::flow::RunConfig cfg;
    cfg.sigma = params->sigma > 0 ? params->sigma : 0.5;
    cfg.t_max = params->t_max;
    cfg.tol_steady = params->tol_steady > 0 ? params->tol_steady : 1e-8;
    cfg.record_every = params->record_every > 0 ? params->record_every : 100;
    cfg.dt_scale = params->dt_scale > 0 ? params->dt_scale : 1.0;
    cfg.tol_barrier = params->tol_barrier > 0 ? params->tol_barrier : 1e-8;
    cfg.escalate_violations = params->escalate_violations != 0;
    tlab::flow::RunResult result = tlab::flow::run(problem, cfg);
    *out = new tl_flow{problem, std::move(result)};
  });
}

void tl_flow_destroy(tl_flow* flow) { delete flow; }

tl_status tl_flow_summary_get(const tl_flow* flow, tl_flow_summary* out) {
  if (!flow || !out) return fail_invalid("null argument");
  const tlab::flow::RunResult& r = flow->result;
  out->final_time = r.state.t;
  out->steps = r.steps;
  out->steady = r.steady ? 1 : 0;
  out->steady_residual = r.steady_residual;
  out->tau = r.tau;
  out->boundary_grad_observed = r.boundary_gradient.observed;
  out->boundary_grad_bound = r.boundary_gradient.bound;
  out->max_principle_margin = r.max_principle.margin;
  out->barrier_mu_k = r.barrier.mu_k;
  out->barrier_value_margin = r.barrier.value_margin;
  out->barrier_supersolution_margin = r.barrier.supersolution_margin;
  out->sandwich_margin = r.sandwich_margin;
  out->volume_residual = r.volume_residual;
  out->area_initial =
      r.diagnostics.rows.empty() ? 0.0 : r.diagnostics.rows.front().area;
  out->area_final =
      r.diagnostics.rows.empty() ? 0.0 : r.diagnostics.rows.back().area;
  out->monitors_ok = r.monitors_ok ? 1 : 0;
  return TL_OK;
}

tl_status tl_flow_write_diagnostics_csv(const tl_flow* flow, const char* path) {
  if (!flow || !path) return fail_invalid("null argument");
  return guarded(
      [&] { tlab::io::write_diagnostics_csv(path, flow->result.diagnostics); });
}

tl_status tl_flow_write_snapshot(const tl_flow* flow, const char* path) {
  if (!flow || !path) return fail_invalid("null argument");
  return guarded(
      [&] { tlab::io::write_snapshot(path, flow->problem, flow->result.state); });
}

tl_status tl_check_small_data(const tl_domain_params* domain,
                              const tl_psi_params* psi, double* value,
                              int* satisfied) {
  if (!domain || !psi || !value || !satisfied)
    return fail_invalid("null argument");
  return guarded([&] {
    const tlab::flow::DomainSpec spec = build_domain(*domain);
    const tlab::flow::BoundaryData data = build_psi(*psi, spec.dim(), spec);
    const tlab::flow::SmallDataReport rep =
        tlab::flow::check_small_data_condition(spec, data);
    *value = rep.value;
    *satisfied = rep.satisfied ? 1 : 0;
  });
}

/* ------------------------------------------------------------------ */

tl_status tl_mesh_create(const tl_model* model, const double* lo,
                         const double* hi, double h, tl_mesh** out) {
  if (!model || !lo || !hi || !out) return fail_invalid("null argument");
  return guarded([&] {
    *out = new tl_mesh{tlab::analysis::build_weighted_mesh(
        model->model, build_box(lo, hi, model->model.base_dim()), h)};
  });
}

void tl_mesh_destroy(tl_mesh* mesh) { delete mesh; }

tl_status tl_mesh_mass(const tl_mesh* mesh, double* out) {
  if (!mesh || !out) return fail_invalid("null argument");
  *out = mesh->mesh.total_mass;
  return TL_OK;
}

tl_status tl_mesh_lambda1(const tl_mesh* mesh, tl_spectral* out) {
  if (!mesh || !out) return fail_invalid("null argument");
  return guarded([&] {
    const tlab::analysis::SpectralResult r =
        tlab::analysis::drift_first_eigenvalue(mesh->mesh);
    out->lambda1 = r.lambda1;
    out->residual = r.residual;
    out->iterations = r.iterations;
  });
}

tl_status tl_mesh_stability(const tl_mesh* mesh, double a, double* sup_value,
                            int* satisfied) {
  if (!mesh || !sup_value || !satisfied) return fail_invalid("null argument");
  return guarded([&] {
    const tlab::analysis::StabilityReport r =
        tlab::analysis::stability_condition(mesh->mesh, a);
    *sup_value = r.sup_value;
    *satisfied = r.satisfied ? 1 : 0;
  });
}

tl_status tl_mesh_divergence_check(const tl_mesh* mesh, double* interior,
                                   double* boundary) {
  if (!mesh || !interior || !boundary) return fail_invalid("null argument");
  return guarded([&] {
    const tlab::analysis::DivergenceReport r =
        tlab::analysis::divergence_identity_check(mesh->mesh, mesh->mesh.s);
    *interior = r.interior;
    *boundary = r.boundary;
  });
}

tl_status tl_spectrum_write_csv(const tl_mesh* mesh, const double* a_values,
                                int count, const char* path) {
  if (!mesh || !a_values || !path || count < 1)
    return fail_invalid("null argument");
  return guarded([&] {
    const tlab::analysis::SpectralResult spec =
        tlab::analysis::drift_first_eigenvalue(mesh->mesh);
    std::vector<tlab::io::SpectrumRow> rows;
    for (int i = 0; i < count; ++i) {
      const tlab::analysis::StabilityReport st =
          tlab::analysis::stability_condition(mesh->mesh, a_values[i]);
      rows.push_back({a_values[i], st.sup_value, spec.lambda1});
    }
    tlab::io::write_spectrum_csv(path, rows);
  });
}

tl_status tl_volume_growth(const tl_model* model, double a, double r0,
                           double r1, double h, const char* csv_path,
                           tl_growth_report* out) {
  if (!model || !out) return fail_invalid("null argument");
  return guarded([&] {
    const tlab::analysis::GrowthReport rep =
        tlab::analysis::weighted_volume_growth(model->model, a, r0, r1, h);
    if (csv_path) tlab::io::write_growth_csv(csv_path, rep);
    out->epsilon = rep.epsilon;
    out->sup_h_sq = rep.sup_h_sq;
    out->min_ratio = rep.min_ratio;
  });
}

}  // extern "C"
