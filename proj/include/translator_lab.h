/* translator_lab: C API for the translating-soliton laboratory.
 *
 * All functions return tl_status; on failure tl_last_error() carries a
 * message. Handles are opaque and must be released with the matching
 * destroy function. Status values double as CLI exit codes.
 */
#ifndef TRANSLATOR_LAB_H
#define TRANSLATOR_LAB_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tl_status {
  TL_OK = 0,
  TL_VIOLATION = 1, /* monitor or verification failure */
  TL_INVALID = 2,   /* bad arguments, config, or I/O */
  TL_BLOWUP = 3     /* flow left the stability regime */
} tl_status;

/* Message for the most recent failure on this thread. */
const char* tl_last_error(void);

/* ------------------------------------------------------------------ */
/* Soliton models                                                      */
/* ------------------------------------------------------------------ */

typedef struct tl_model tl_model;

typedef enum tl_model_kind {
  TL_MODEL_HYPERPLANE = 0,
  TL_MODEL_GRIM_REAPER = 1,
  TL_MODEL_TILTED_GRIM_REAPER = 2,
  TL_MODEL_BOWL = 3
} tl_model_kind;

typedef struct tl_model_params {
  tl_model_kind kind;
  int dim;      /* hyperplane / bowl base dimension */
  double theta; /* tilted grim reaper, radians in [0, pi/2) */
  double r_max; /* bowl profile extent (0 -> 10) */
  double step;  /* bowl profile step (0 -> 1e-3) */
} tl_model_params;

tl_status tl_model_create(const tl_model_params* params, tl_model** out);
void tl_model_destroy(tl_model* model);

/* Declared parameter box of the model; lo/hi must hold dim doubles. */
tl_status tl_model_domain(const tl_model* model, double* lo, double* hi,
                          int* dim);

typedef struct tl_verify_report {
  double max_soliton_residual;
  double max_pythagoras_defect;
  double max_drift_identity_defect;
  double max_trace_defect;
  int pass;
} tl_verify_report;

/* Pointwise identity suite over the declared domain. Returns
 * TL_VIOLATION (with the report filled) when a defect exceeds tol. */
tl_status tl_model_verify(const tl_model* model, int samples_per_axis,
                          double tol, tl_verify_report* out);

/* Bowl profile export/import (header r,u,du,d2u). */
tl_status tl_model_write_profile_csv(const tl_model* model, const char* path);
tl_status tl_model_create_from_profile_csv(const char* path, int dim,
                                           tl_model** out);

/* inf |H|^2 over nested windows shrinking toward the domain by
 * 2^-m per step; values must hold `windows` doubles. */
tl_status tl_model_inf_h_scan(const tl_model* model, int windows,
                              int samples_per_axis, double* values);

typedef struct tl_min_s_report {
  double value;
  double location[2];
  int on_boundary;
} tl_min_s_report;

tl_status tl_model_min_s(const tl_model* model, const double* lo,
                         const double* hi, int samples_per_axis,
                         tl_min_s_report* out);

typedef struct tl_identity_report {
  tl_verify_report pointwise;
  double jacobi_order;         /* observed order of Delta nu identity */
  double curvature_order;      /* observed order of the Delta H identity */
  double jacobi_residual;      /* at the finer grid */
  double curvature_residual;
  int pass;
} tl_identity_report;

/* Pointwise suite plus discrete identity convergence between h and h/2
 * on [lo, hi] (dim doubles each). */
tl_status tl_identity_suite(const tl_model* model, const double* lo,
                            const double* hi, double h, int samples_per_axis,
                            double tol, double min_order,
                            tl_identity_report* out);

/* ------------------------------------------------------------------ */
/* Graphical flow                                                      */
/* ------------------------------------------------------------------ */

typedef enum tl_domain_kind {
  TL_DOMAIN_RECTANGLE = 0,
  TL_DOMAIN_DISC = 1,
  TL_DOMAIN_ELLIPSE = 2
} tl_domain_kind;

typedef struct tl_domain_params {
  tl_domain_kind kind;
  int dim; /* 1 or 2; discs and ellipses require 2 */
  double lo[2], hi[2];
  double center[2];
  double radius;
  double semi_axes[2];
} tl_domain_params;

typedef enum tl_psi_kind {
  TL_PSI_ZERO = 0,
  TL_PSI_AFFINE = 1,
  TL_PSI_QUADRATIC = 2
} tl_psi_kind;

typedef struct tl_psi_params {
  tl_psi_kind kind;
  int k;                   /* number of components */
  const double* linear;    /* k x dim row-major, NULL for zero */
  const double* constant;  /* k, NULL for zero */
  const double* quadratic; /* k x dim x dim row-major, NULL for zero */
} tl_psi_params;

typedef struct tl_flow_params {
  tl_domain_params domain;
  tl_psi_params psi;
  const double* w; /* k drift components */
  double h;
  double sigma;       /* CFL safety in (0, 1] */
  double t_max;
  double tol_steady;
  int record_every;
  double dt_scale;    /* 1 = CFL step; larger is deliberately unstable */
  double tol_barrier;
  const double* barrier_point; /* dim doubles or NULL for the default */
  int escalate_violations;     /* nonzero: monitor violations fail the run */
} tl_flow_params;

typedef struct tl_flow tl_flow;

typedef struct tl_flow_summary {
  double final_time;
  long steps;
  int steady;
  double steady_residual;
  double tau; /* running sup |Df|^2 */
  double boundary_grad_observed;
  double boundary_grad_bound;
  double max_principle_margin;
  double barrier_mu_k;
  double barrier_value_margin;
  double barrier_supersolution_margin;
  double sandwich_margin;
  double volume_residual;
  double area_initial;
  double area_final;
  int monitors_ok;
} tl_flow_summary;

tl_status tl_flow_run(const tl_flow_params* params, tl_flow** out);
void tl_flow_destroy(tl_flow* flow);
tl_status tl_flow_summary_get(const tl_flow* flow, tl_flow_summary* out);
tl_status tl_flow_write_diagnostics_csv(const tl_flow* flow, const char* path);
/* CSV x,f1..fk in 1d; VTK STRUCTURED_POINTS in 2d. */
tl_status tl_flow_write_snapshot(const tl_flow* flow, const char* path);

/* 8 D (n sup|D^2 psi| + 1) + sqrt(2) sup_bdry |D psi|, and whether < 1. */
tl_status tl_check_small_data(const tl_domain_params* domain,
                              const tl_psi_params* psi, double* value,
                              int* satisfied);

/* ------------------------------------------------------------------ */
/* Weighted-measure analysis                                           */
/* ------------------------------------------------------------------ */

typedef struct tl_mesh tl_mesh;

tl_status tl_mesh_create(const tl_model* model, const double* lo,
                         const double* hi, double h, tl_mesh** out);
void tl_mesh_destroy(tl_mesh* mesh);
tl_status tl_mesh_mass(const tl_mesh* mesh, double* out);

typedef struct tl_spectral {
  double lambda1;
  double residual;
  int iterations;
} tl_spectral;

tl_status tl_mesh_lambda1(const tl_mesh* mesh, tl_spectral* out);
tl_status tl_mesh_stability(const tl_mesh* mesh, double a, double* sup_value,
                            int* satisfied);
/* Divergence identity with phi = S: fills both sides of the balance. */
tl_status tl_mesh_divergence_check(const tl_mesh* mesh, double* interior,
                                   double* boundary);
tl_status tl_spectrum_write_csv(const tl_mesh* mesh, const double* a_values,
                                int count, const char* path);

typedef struct tl_growth_report {
  double epsilon;
  double sup_h_sq;
  double min_ratio;
} tl_growth_report;

tl_status tl_volume_growth(const tl_model* model, double a, double r0,
                           double r1, double h, const char* csv_path,
                           tl_growth_report* out);

#ifdef __cplusplus
}
#endif

#endif /* TRANSLATOR_LAB_H */
