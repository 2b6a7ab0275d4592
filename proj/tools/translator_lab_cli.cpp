// Command-line front end for the translator laboratory. Parses the run
// configuration (JSON file plus flag overrides), dispatches through the C
// API, and writes the declared output files.
//
// Exit codes: 0 success, 1 monitor/verification violation, 2 invalid
// config or I/O error, 3 blow-up.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "translator_lab.h"

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

void check_keys(const json& obj, const std::string& where,
                const std::vector<std::string>& allowed) {
  if (!obj.is_object()) bad_key(where, "must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const std::string& k : allowed) ok = ok || k == item.key();
    if (!ok) bad_key(where.empty() ? item.key() : where + "." + item.key(),
                     "unknown key");
  }
}

double get_number(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) bad_key(key, "must be a number");
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) bad_key(key, "must be an integer");
  return obj[key].get<int>();
}

std::vector<double> get_array(const json& obj, const std::string& key,
                              std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_array()) bad_key(key, "must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : obj[key]) {
    if (!v.is_number()) bad_key(key, "must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::string get_string(const json& obj, const std::string& key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) bad_key(key, "must be a string");
  return obj[key].get<std::string>();
}

tl_status check(tl_status st, const char* what) {
  if (st != TL_OK) {
    std::cerr << what << ": " << tl_last_error() << "\n";
  }
  return st;
}

// ---------------------------------------------------------------------
// Model construction
// ---------------------------------------------------------------------

struct ModelHandle {
  tl_model* ptr = nullptr;
  ~ModelHandle() { tl_model_destroy(ptr); }
};

void build_model(const json& cfg, ModelHandle& model) {
  if (!cfg.contains("model")) bad_key("model", "missing required key");
  const json& m = cfg["model"];
  check_keys(m, "model", {"kind", "theta", "dim", "r_max", "step",
                          "profile_csv"});
  const std::string kind = get_string(m, "kind", "");
  if (m.contains("profile_csv")) {
    const int dim = get_int(m, "dim", 2);
    const std::string path = get_string(m, "profile_csv", "");
    if (check(tl_model_create_from_profile_csv(path.c_str(), dim, &model.ptr),
              "model") != TL_OK)
      bad_key("model.profile_csv", "cannot load profile");
    return;
  }
  tl_model_params p{};
  if (kind == "hyperplane") {
    p.kind = TL_MODEL_HYPERPLANE;
  } else if (kind == "grim_reaper") {
    p.kind = TL_MODEL_GRIM_REAPER;
  } else if (kind == "tilted_grim_reaper") {
    p.kind = TL_MODEL_TILTED_GRIM_REAPER;
  } else if (kind == "bowl") {
    p.kind = TL_MODEL_BOWL;
  } else {
    bad_key("model.kind", "must be one of hyperplane, grim_reaper, "
                          "tilted_grim_reaper, bowl");
  }
  p.dim = get_int(m, "dim", p.kind == TL_MODEL_HYPERPLANE ? 1 : 2);
  p.theta = get_number(m, "theta", 0.0);
  if (p.theta < 0 || p.theta >= kPi / 2)
    bad_key("model.theta", "must lie in [0, pi/2)");
  p.r_max = get_number(m, "r_max", 10.0);
  p.step = get_number(m, "step", 1e-3);
  if (tl_model_create(&p, &model.ptr) != TL_OK)
    bad_key("model", tl_last_error());
}

void read_box(const json& cfg, int dim, double* lo, double* hi) {
  if (!cfg.contains("box")) bad_key("box", "missing required key");
  check_keys(cfg["box"], "box", {"lo", "hi"});
  const std::vector<double> l = get_array(cfg["box"], "lo", {});
  const std::vector<double> h = get_array(cfg["box"], "hi", {});
  if (static_cast<int>(l.size()) != dim || static_cast<int>(h.size()) != dim)
    bad_key("box", "lo/hi must each hold " + std::to_string(dim) + " numbers");
  for (int i = 0; i < dim; ++i) {
    lo[i] = l[i];
    hi[i] = h[i];
    if (!(lo[i] < hi[i])) bad_key("box", "lo must be below hi");
  }
}

// ---------------------------------------------------------------------
// Domain and boundary data
// ---------------------------------------------------------------------

struct PsiStorage {
  std::vector<double> linear, constant, quadratic;
  tl_psi_params params{};
};

tl_domain_params read_domain(const json& cfg) {
  if (!cfg.contains("domain")) bad_key("domain", "missing required key");
  const json& d = cfg["domain"];
  check_keys(d, "domain",
             {"shape", "lo", "hi", "center", "radius", "semi_axes"});
  tl_domain_params out{};
  const std::string shape = get_string(d, "shape", "");
  if (shape == "rectangle") {
    out.kind = TL_DOMAIN_RECTANGLE;
    const std::vector<double> lo = get_array(d, "lo", {});
    const std::vector<double> hi = get_array(d, "hi", {});
    if (lo.empty() || lo.size() > 2 || lo.size() != hi.size())
      bad_key("domain.lo", "rectangle needs matching 1d or 2d lo/hi");
    out.dim = static_cast<int>(lo.size());
    for (int i = 0; i < out.dim; ++i) {
      out.lo[i] = lo[i];
      out.hi[i] = hi[i];
      if (!(lo[i] < hi[i])) bad_key("domain.hi", "must exceed lo");
    }
  } else if (shape == "disc" || shape == "ellipse") {
    out.dim = 2;
    const std::vector<double> c = get_array(d, "center", {0.0, 0.0});
    if (c.size() != 2) bad_key("domain.center", "must hold 2 numbers");
    out.center[0] = c[0];
    out.center[1] = c[1];
    if (shape == "disc") {
      out.kind = TL_DOMAIN_DISC;
      out.radius = get_number(d, "radius", 0.0);
      if (out.radius <= 0) bad_key("domain.radius", "must be positive");
    } else {
      out.kind = TL_DOMAIN_ELLIPSE;
      const std::vector<double> s = get_array(d, "semi_axes", {});
      if (s.size() != 2 || s[0] <= 0 || s[1] <= 0)
        bad_key("domain.semi_axes", "must hold 2 positive numbers");
      out.semi_axes[0] = s[0];
      out.semi_axes[1] = s[1];
    }
  } else {
    bad_key("domain.shape", "must be rectangle, disc, or ellipse");
  }
  return out;
}

void read_psi(const json& cfg, int dim, PsiStorage& psi) {
  json p = json::object();
  if (cfg.contains("psi")) p = cfg["psi"];
  check_keys(p, "psi", {"kind", "k", "linear", "constant", "quadratic"});
  const std::string kind = get_string(p, "kind", "zero");
  const int k = get_int(p, "k", 1);
  if (k < 1) bad_key("psi.k", "must be >= 1");
  psi.params.k = k;
  if (kind == "zero") {
    psi.params.kind = TL_PSI_ZERO;
    return;
  }
  psi.linear = get_array(p, "linear", std::vector<double>(k * dim, 0.0));
  psi.constant = get_array(p, "constant", std::vector<double>(k, 0.0));
  if (static_cast<int>(psi.linear.size()) != k * dim)
    bad_key("psi.linear", "must hold k*dim numbers");
  if (static_cast<int>(psi.constant.size()) != k)
    bad_key("psi.constant", "must hold k numbers");
  psi.params.linear = psi.linear.data();
  psi.params.constant = psi.constant.data();
  if (kind == "affine") {
    psi.params.kind = TL_PSI_AFFINE;
  } else if (kind == "quadratic") {
    psi.params.kind = TL_PSI_QUADRATIC;
    psi.quadratic =
        get_array(p, "quadratic", std::vector<double>(k * dim * dim, 0.0));
    if (static_cast<int>(psi.quadratic.size()) != k * dim * dim)
      bad_key("psi.quadratic", "must hold k*dim*dim numbers");
    psi.params.quadratic = psi.quadratic.data();
  } else {
    bad_key("psi.kind", "must be zero, affine, or quadratic");
  }
}

std::string out_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

std::string output_name(const json& cfg, const std::string& key,
                        const std::string& fallback) {
  if (!cfg.contains("outputs")) return fallback;
  return get_string(cfg["outputs"], key, fallback);
}

// ---------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------

int cmd_flow_run(const json& cfg, const std::string& out_dir, bool check_only) {
  check_keys(cfg, "",
             {"command", "domain", "psi", "w", "h", "sigma", "t_max",
              "tol_steady", "record_every", "dt_scale", "tol_barrier",
              "barrier_point", "escalate", "outputs"});
  const tl_domain_params domain = read_domain(cfg);
  PsiStorage psi;
  read_psi(cfg, domain.dim, psi);

  if (check_only) {
    double value = 0;
    int ok = 0;
    if (check(tl_check_small_data(&domain, &psi.params, &value, &ok),
              "flow-check") != TL_OK)
      return TL_INVALID;
    std::printf("small-data value: %.12g\n", value);
    std::printf(ok ? "condition satisfied\n" : "condition not satisfied\n");
    return 0;
  }

  tl_flow_params fp{};
  fp.domain = domain;
  fp.psi = psi.params;
  std::vector<double> w =
      get_array(cfg, "w", std::vector<double>(psi.params.k, 0.0));
  if (static_cast<int>(w.size()) != psi.params.k)
    bad_key("w", "must hold k numbers");
  fp.w = w.data();
  fp.h = get_number(cfg, "h", 0.01);
  if (fp.h <= 0) bad_key("h", "must be positive");
  fp.sigma = get_number(cfg, "sigma", 0.5);
  if (fp.sigma <= 0 || fp.sigma > 1) bad_key("sigma", "must lie in (0, 1]");
  fp.t_max = get_number(cfg, "t_max", 10.0);
  if (fp.t_max <= 0) bad_key("t_max", "must be positive");
  fp.tol_steady = get_number(cfg, "tol_steady", 1e-8);
  if (fp.tol_steady <= 0) bad_key("tol_steady", "must be positive");
  fp.record_every = get_int(cfg, "record_every", 100);
  if (fp.record_every < 1) bad_key("record_every", "must be >= 1");
  fp.dt_scale = get_number(cfg, "dt_scale", 1.0);
  if (fp.dt_scale <= 0) bad_key("dt_scale", "must be positive");
  fp.tol_barrier = get_number(cfg, "tol_barrier", 1e-8);
  fp.escalate_violations = get_int(cfg, "escalate", 0);
  std::vector<double> barrier;
  if (cfg.contains("barrier_point")) {
    barrier = get_array(cfg, "barrier_point", {});
    if (static_cast<int>(barrier.size()) != domain.dim)
      bad_key("barrier_point", "must hold dim numbers");
    fp.barrier_point = barrier.data();
  }

  tl_flow* flow = nullptr;
  const tl_status st = tl_flow_run(&fp, &flow);
  if (st != TL_OK) {
    std::cerr << "flow-run: " << tl_last_error() << "\n";
    return st;
  }
  tl_flow_summary s{};
  tl_flow_summary_get(flow, &s);
  std::printf("final time: %.12g after %ld steps (%s)\n", s.final_time,
              s.steps, s.steady ? "steady" : "t_max reached");
  std::printf("steady residual: %.3e\n", s.steady_residual);
  std::printf("tau (sup |Df|^2): %.6g\n", s.tau);
  std::printf("boundary gradient: observed %.6g <= bound %.6g\n",
              s.boundary_grad_observed, s.boundary_grad_bound);
  std::printf("max principle margin: %.3e\n", s.max_principle_margin);
  std::printf("barrier margins: value %.3e, supersolution %.3e (muK %.6g)\n",
              s.barrier_value_margin, s.barrier_supersolution_margin,
              s.barrier_mu_k);
  std::printf("volume balance residual: %.3e\n", s.volume_residual);
  std::printf("monitors: %s\n", s.monitors_ok ? "ok" : "VIOLATED");

  int rc = 0;
  const std::string diag =
      out_path(out_dir, output_name(cfg, "diagnostics", "diagnostics.csv"));
  if (check(tl_flow_write_diagnostics_csv(flow, diag.c_str()), "diagnostics") !=
      TL_OK)
    rc = TL_INVALID;
  const std::string snap = out_path(
      out_dir,
      output_name(cfg, "snapshot", domain.dim == 1 ? "field.csv" : "field.vtk"));
  if (rc == 0 &&
      check(tl_flow_write_snapshot(flow, snap.c_str()), "snapshot") != TL_OK)
    rc = TL_INVALID;
  tl_flow_destroy(flow);
  if (rc != 0) return rc;
  return s.monitors_ok ? 0 : TL_VIOLATION;
}

int cmd_soliton_verify(const json& cfg, const std::string& out_dir) {
  check_keys(cfg, "", {"command", "model", "samples", "tol", "outputs"});
  ModelHandle model;
  build_model(cfg, model);
  int dim = 0;
  double lo[2], hi[2];
  tl_model_domain(model.ptr, lo, hi, &dim);
  const int samples = get_int(cfg, "samples", 10000);
  if (samples < 2) bad_key("samples", "must be >= 2");
  const int per_axis =
      dim == 1 ? samples
               : std::max(2, static_cast<int>(std::ceil(std::sqrt(samples))));
  const double tol = get_number(cfg, "tol", 1e-8);
  if (tol <= 0) bad_key("tol", "must be positive");

  tl_verify_report rep{};
  const tl_status st = tl_model_verify(model.ptr, per_axis, tol, &rep);
  if (st != TL_OK && st != TL_VIOLATION) {
    std::cerr << "soliton-verify: " << tl_last_error() << "\n";
    return st;
  }
  std::printf("max soliton residual:  %.3e\n", rep.max_soliton_residual);
  std::printf("max pythagoras defect: %.3e\n", rep.max_pythagoras_defect);
  std::printf("max drift identity:    %.3e\n", rep.max_drift_identity_defect);
  std::printf("max hessian trace:     %.3e\n", rep.max_trace_defect);
  std::printf("verdict: %s (tol %.1e)\n", rep.pass ? "pass" : "FAIL", tol);

  if (cfg.contains("outputs") && cfg["outputs"].contains("profile")) {
    const std::string path =
        out_path(out_dir, get_string(cfg["outputs"], "profile", ""));
    if (check(tl_model_write_profile_csv(model.ptr, path.c_str()),
              "profile export") != TL_OK)
      return TL_INVALID;
  }
  return rep.pass ? 0 : TL_VIOLATION;
}

int cmd_spectrum(const json& cfg, const std::string& out_dir) {
  check_keys(cfg, "", {"command", "model", "box", "h", "a", "a_list",
                       "outputs"});
  ModelHandle model;
  build_model(cfg, model);
  int dim = 0;
  double dlo[2], dhi[2];
  tl_model_domain(model.ptr, dlo, dhi, &dim);
  double lo[2], hi[2];
  read_box(cfg, dim, lo, hi);
  const double h = get_number(cfg, "h", 0.01);
  if (h <= 0) bad_key("h", "must be positive");

  std::vector<double> a_values = get_array(cfg, "a_list", {});
  if (a_values.empty()) a_values.push_back(get_number(cfg, "a", 1.0));
  for (double a : a_values)
    if (a <= 0) bad_key("a", "must be positive");

  tl_mesh* mesh = nullptr;
  if (check(tl_mesh_create(model.ptr, lo, hi, h, &mesh), "spectrum") != TL_OK)
    return TL_INVALID;
  tl_spectral spec{};
  if (check(tl_mesh_lambda1(mesh, &spec), "spectrum") != TL_OK) {
    tl_mesh_destroy(mesh);
    return TL_INVALID;
  }
  std::printf("lambda1: %.12g (residual %.3e, %d iterations)\n", spec.lambda1,
              spec.residual, spec.iterations);
  for (double a : a_values) {
    double sup = 0;
    int ok = 0;
    tl_mesh_stability(mesh, a, &sup, &ok);
    std::printf("a = %.6g: sup a(a-1) - a^2 H^2 + |A|^2 = %.6g (%s)\n", a, sup,
                ok ? "stable" : "not certified");
  }
  const std::string path =
      out_path(out_dir, output_name(cfg, "spectrum", "spectrum.csv"));
  const tl_status st = tl_spectrum_write_csv(mesh, a_values.data(),
                                             static_cast<int>(a_values.size()),
                                             path.c_str());
  tl_mesh_destroy(mesh);
  return check(st, "spectrum export") == TL_OK ? 0 : TL_INVALID;
}

int cmd_volume_growth(const json& cfg, const std::string& out_dir) {
  check_keys(cfg, "", {"command", "model", "a", "r0", "r1", "h", "tol",
                       "outputs"});
  ModelHandle model;
  build_model(cfg, model);
  const double a = get_number(cfg, "a", 2.0);
  if (a <= 0) bad_key("a", "must be positive");
  const double r0 = get_number(cfg, "r0", 1.0);
  const double r1 = get_number(cfg, "r1", 4.0);
  if (!(r0 > 0 && r1 > r0)) bad_key("r0", "need 0 < r0 < r1");
  const double h = get_number(cfg, "h", 0.02);
  if (h <= 0) bad_key("h", "must be positive");
  const double tol = get_number(cfg, "tol", 1e-2);

  const std::string path =
      out_path(out_dir, output_name(cfg, "growth", "growth.csv"));
  tl_growth_report rep{};
  if (check(tl_volume_growth(model.ptr, a, r0, r1, h, path.c_str(), &rep),
            "volume-growth") != TL_OK)
    return TL_INVALID;
  std::printf("sup H^2 (sampled): %.6g\n", rep.sup_h_sq);
  std::printf("epsilon: %.6g\n", rep.epsilon);
  std::printf("min ratio f(R) e^{-eps(R-R0)} / f(R0): %.9g\n", rep.min_ratio);
  if (rep.min_ratio < 1.0 - tol) {
    std::printf("growth bound violated beyond tolerance %.1e\n", tol);
    return TL_VIOLATION;
  }
  return 0;
}

int cmd_identity_suite(const json& cfg, const std::string& out_dir) {
  check_keys(cfg, "", {"command", "model", "box", "h", "samples", "tol",
                       "min_order", "outputs"});
  ModelHandle model;
  build_model(cfg, model);
  int dim = 0;
  double dlo[2], dhi[2];
  tl_model_domain(model.ptr, dlo, dhi, &dim);
  double lo[2], hi[2];
  read_box(cfg, dim, lo, hi);
  const double h = get_number(cfg, "h", 2e-3);
  if (h <= 0) bad_key("h", "must be positive");
  const int samples = get_int(cfg, "samples", 10000);
  const int per_axis =
      dim == 1 ? samples
               : std::max(2, static_cast<int>(std::ceil(std::sqrt(samples))));
  const double tol = get_number(cfg, "tol", 1e-8);
  const double min_order = get_number(cfg, "min_order", 1.9);

  tl_identity_report rep{};
  const tl_status st = tl_identity_suite(model.ptr, lo, hi, h, per_axis, tol,
                                         min_order, &rep);
  if (st != TL_OK && st != TL_VIOLATION) {
    std::cerr << "identity-suite: " << tl_last_error() << "\n";
    return st;
  }
  std::string report;
  char line[256];
  std::snprintf(line, sizeof(line), "pointwise suite: residual %.3e, "
                "pythagoras %.3e, drift %.3e, trace %.3e\n",
                rep.pointwise.max_soliton_residual,
                rep.pointwise.max_pythagoras_defect,
                rep.pointwise.max_drift_identity_defect,
                rep.pointwise.max_trace_defect);
  report += line;
  std::snprintf(line, sizeof(line),
                "jacobi identity: order %.3f, residual %.3e\n",
                rep.jacobi_order, rep.jacobi_residual);
  report += line;
  std::snprintf(line, sizeof(line),
                "curvature identity: order %.3f, residual %.3e\n",
                rep.curvature_order, rep.curvature_residual);
  report += line;
  std::snprintf(line, sizeof(line), "verdict: %s\n",
                rep.pass ? "pass" : "FAIL");
  report += line;
  std::fputs(report.c_str(), stdout);

  const std::string path =
      out_path(out_dir, output_name(cfg, "report", "identity_report.txt"));
  std::ofstream out(path);
  if (!out.is_open()) {
    std::cerr << "identity-suite: cannot write " << path << "\n";
    return TL_INVALID;
  }
  out << report;
  return rep.pass ? 0 : TL_VIOLATION;
}

int dispatch(const std::string& command, const json& cfg,
             const std::string& out_dir) {
  if (command == "flow-run") return cmd_flow_run(cfg, out_dir, false);
  if (command == "flow-check") {
    check_keys(cfg, "", {"command", "domain", "psi"});
    return cmd_flow_run(cfg, out_dir, true);
  }
  if (command == "soliton-verify") return cmd_soliton_verify(cfg, out_dir);
  if (command == "spectrum") return cmd_spectrum(cfg, out_dir);
  if (command == "volume-growth") return cmd_volume_growth(cfg, out_dir);
  if (command == "identity-suite") return cmd_identity_suite(cfg, out_dir);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"translator_lab: translating soliton laboratory"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--set", overrides,
                 "override a top-level config key, e.g. --set h=0.005");

  const std::vector<std::string> commands = {
      "flow-run",       "flow-check",    "soliton-verify",
      "spectrum",       "volume-growth", "identity-suite"};
  for (const std::string& name : commands) app.add_subcommand(name, "");

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in.is_open()) {
        std::cerr << "cannot open config: " << config_path << "\n";
        return TL_INVALID;
      }
      try {
        in >> cfg;
      } catch (const std::exception& e) {
        std::cerr << "config parse error: " << e.what() << "\n";
        return TL_INVALID;
      }
    }
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw ConfigError("override '" + kv + "' must look like key=value");
      const std::string key = kv.substr(0, eq);
      const std::string value = kv.substr(eq + 1);
      try {
        cfg[key] = json::parse(value);
      } catch (const std::exception&) {
        cfg[key] = value;  // plain string
      }
    }

    std::string command;
    for (const auto* sub : app.get_subcommands()) command = sub->get_name();
    if (command.empty()) command = get_string(cfg, "command", "");
    if (command.empty())
      throw ConfigError("no command given (subcommand or config 'command')");
    cfg["command"] = command;
    return dispatch(command, cfg, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return TL_INVALID;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return TL_INVALID;
  }
}
