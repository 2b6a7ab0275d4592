#include "translatorlab/solitons.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tlab::solitons {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDomainMargin = 5e-3;  // keep sec^2 moderate near the strip edge

double series_c2(int n) { return -1.0 / (2.0 * n); }
double series_c4(int n) {
  return -1.0 / (4.0 * std::pow(static_cast<double>(n), 3) * (n + 2));
}

}  // namespace

GraphJet grim_reaper_jet(double x) {
  require(std::abs(x) < kPi / 2.0 - 1e-9, ErrorCode::invalid_argument,
          "grim reaper: x outside (-pi/2, pi/2)");
  GraphJet jet;
  jet.base = Vector::Constant(1, x);
  const double c = std::cos(x);
  jet.value = Vector::Constant(1, std::log(c));
  jet.d1 = Matrix::Constant(1, 1, -std::tan(x));
  jet.d2 = {Matrix::Constant(1, 1, -1.0 / (c * c))};
  return jet;
}

GraphJet tilted_grim_reaper_jet(double theta, double x, double y) {
  require(theta >= 0.0 && theta < kPi / 2.0, ErrorCode::invalid_argument,
          "tilted grim reaper: theta outside [0, pi/2)");
  const double c = std::cos(theta);
  require(std::abs(x * c) < kPi / 2.0 - 1e-9, ErrorCode::invalid_argument,
          "tilted grim reaper: x cos(theta) outside (-pi/2, pi/2)");
  GraphJet jet;
  jet.base = Vector(2);
  jet.base << x, y;
  const double cx = std::cos(x * c);
  jet.value = Vector::Constant(1, std::log(cx) / (c * c) - y * std::tan(theta));
  jet.d1 = Matrix(2, 1);
  jet.d1 << -std::tan(x * c) / c, -std::tan(theta);
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = -1.0 / (cx * cx);
  jet.d2 = {h};
  return jet;
}

BowlProfile bowl_profile(int dim, double r_max, double step) {
  require(dim >= 2, ErrorCode::invalid_argument, "bowl: dimension must be >= 2");
  require(r_max > 0 && step > 0, ErrorCode::invalid_argument,
          "bowl: r_max and step must be positive");
  require(step <= 1e-3 * r_max, ErrorCode::invalid_argument,
          "bowl: step too large for the requested accuracy");

  BowlProfile p;
  p.dim = dim;
  p.step = step;
  const int n_nodes = static_cast<int>(std::round(r_max / step)) + 1;
  const int i_series = 10;
  p.r_series = i_series * step;
  p.r.resize(n_nodes);
  p.u.resize(n_nodes);
  p.du.resize(n_nodes);
  p.d2u.resize(n_nodes);

  const double c2 = series_c2(dim);
  const double c4 = series_c4(dim);
  for (int i = 0; i <= i_series; ++i) {
    const double r = i * step;
    p.r[i] = r;
    p.u[i] = c2 * r * r + c4 * r * r * r * r;
    p.du[i] = 2.0 * c2 * r + 4.0 * c4 * r * r * r;
    p.d2u[i] = 2.0 * c2 + 12.0 * c4 * r * r;
  }

  auto rhs = [dim](double r, double v) {
    return -(1.0 + v * v) * (1.0 + (dim - 1) * v / r);
  };
  double u = p.u[i_series];
  double v = p.du[i_series];
  for (int i = i_series; i + 1 < n_nodes; ++i) {
    const double r = i * step;
    const double k1u = v, k1v = rhs(r, v);
    const double k2u = v + 0.5 * step * k1v, k2v = rhs(r + 0.5 * step, k2u);
    const double k3u = v + 0.5 * step * k2v, k3v = rhs(r + 0.5 * step, k3u);
    const double k4u = v + step * k3v, k4v = rhs(r + step, k4u);
    u += step / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v += step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    require(std::isfinite(u) && std::isfinite(v) && v <= 0.0,
            ErrorCode::solver_failure, "bowl: profile integration failed");
    p.r[i + 1] = r + step;
    p.u[i + 1] = u;
    p.du[i + 1] = v;
    p.d2u[i + 1] = rhs(r + step, v);
  }
  return p;
}

void BowlProfile::eval(double radius, double* u_out, double* du_out,
                       double* d2u_out) const {
  require(radius >= 0.0 && radius <= r_max() + 1e-12,
          ErrorCode::invalid_argument, "bowl: radius outside the profile table");
  if (radius <= r_series) {
    const double c2 = series_c2(dim);
    const double c4 = series_c4(dim);
    const double r2 = radius * radius;
    if (u_out) *u_out = c2 * r2 + c4 * r2 * r2;
    if (du_out) *du_out = 2.0 * c2 * radius + 4.0 * c4 * r2 * radius;
    if (d2u_out) *d2u_out = 2.0 * c2 + 12.0 * c4 * r2;
    return;
  }
  const int cells = static_cast<int>(r.size()) - 1;
  int i = static_cast<int>(radius / step);
  i = std::clamp(i, 0, cells - 1);
  const double t = (radius - r[i]) / step;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  // cubic Hermite on (u, u') and (u', u''); u'' from the derivative of the
  // latter so all three stay consistent between nodes
  if (u_out)
    *u_out = h00 * u[i] + h10 * step * du[i] + h01 * u[i + 1] +
             h11 * step * du[i + 1];
  if (du_out)
    *du_out = h00 * du[i] + h10 * step * d2u[i] + h01 * du[i + 1] +
              h11 * step * d2u[i + 1];
  if (d2u_out) {
    const double g00 = 6 * t2 - 6 * t, g10 = 3 * t2 - 4 * t + 1;
    const double g01 = -6 * t2 + 6 * t, g11 = 3 * t2 - 2 * t;
    *d2u_out = (g00 * du[i] + g10 * step * d2u[i] + g01 * du[i + 1] +
                g11 * step * d2u[i + 1]) /
               step;
  }
}

double BowlProfile::ode_residual(double radius) const {
  double uu, v, a;
  eval(radius, &uu, &v, &a);
  double v_over_r;
  if (radius < 1e-9) {
    v_over_r = 2.0 * series_c2(dim) + 4.0 * series_c4(dim) * radius * radius;
  } else {
    v_over_r = v / radius;
  }
  return a / (1.0 + v * v) + (dim - 1) * v_over_r + 1.0;
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

SolitonModel SolitonModel::hyperplane(int dim) {
  require(dim >= 1, ErrorCode::invalid_argument, "hyperplane: dim must be >= 1");
  SolitonModel m;
  m.kind_ = Kind::hyperplane;
  m.base_dim_ = dim;
  m.domain_.lo = Vector::Constant(dim, -6.0);
  m.domain_.hi = Vector::Constant(dim, 6.0);
  return m;
}

SolitonModel SolitonModel::grim_reaper() {
  SolitonModel m;
  m.kind_ = Kind::grim_reaper;
  m.base_dim_ = 1;
  const double b = kPi / 2.0 - kDomainMargin;
  m.domain_.lo = Vector::Constant(1, -b);
  m.domain_.hi = Vector::Constant(1, b);
  return m;
}

SolitonModel SolitonModel::tilted_grim_reaper(double theta) {
  require(theta >= 0.0 && theta < kPi / 2.0, ErrorCode::invalid_argument,
          "tilted grim reaper: theta outside [0, pi/2)");
  SolitonModel m;
  m.kind_ = Kind::tilted_grim_reaper;
  m.base_dim_ = 2;
  m.theta_ = theta;
  const double bx = (kPi / 2.0 - kDomainMargin) / std::cos(theta);
  m.domain_.lo = Vector(2);
  m.domain_.hi = Vector(2);
  m.domain_.lo << -bx, -6.0;
  m.domain_.hi << bx, 6.0;
  return m;
}

SolitonModel SolitonModel::bowl(int dim, double r_max, double step) {
  return bowl_from_profile(bowl_profile(dim, r_max, step));
}

SolitonModel SolitonModel::bowl_from_profile(BowlProfile profile) {
  SolitonModel m;
  m.kind_ = Kind::bowl;
  m.base_dim_ = profile.dim;
  const double b = 0.995 * profile.r_max() / std::sqrt(profile.dim);
  m.domain_.lo = Vector::Constant(profile.dim, -b);
  m.domain_.hi = Vector::Constant(profile.dim, b);
  m.profile_ = std::make_shared<BowlProfile>(std::move(profile));
  return m;
}

Vector SolitonModel::direction() const {
  Vector w = Vector::Zero(ambient_dim());
  if (kind_ == Kind::hyperplane) {
    w(base_dim_ - 1) = 1.0;  // tangent direction: the plane contains W
  } else {
    w(base_dim_) = 1.0;  // fiber axis
  }
  return w;
}

double SolitonModel::residual_tol() const {
  return kind_ == Kind::bowl ? 1e-6 : 1e-8;
}

const BowlProfile& SolitonModel::profile() const {
  require(profile_ != nullptr, ErrorCode::invalid_argument,
          "model has no tabulated profile");
  return *profile_;
}

GraphJet SolitonModel::jet(const Vector& x) const {
  require(x.size() == base_dim_, ErrorCode::invalid_argument,
          "model jet: parameter dimension mismatch");
  switch (kind_) {
    case Kind::hyperplane: {
      GraphJet j;
      j.base = x;
      j.value = Vector::Zero(1);
      j.d1 = Matrix::Zero(base_dim_, 1);
      j.d2 = {Matrix::Zero(base_dim_, base_dim_)};
      return j;
    }
    case Kind::grim_reaper:
      return grim_reaper_jet(x(0));
    case Kind::tilted_grim_reaper:
      return tilted_grim_reaper_jet(theta_, x(0), x(1));
    case Kind::bowl: {
      const BowlProfile& p = *profile_;
      const int n = base_dim_;
      const double r = x.norm();
      double u, du, d2u;
      p.eval(r, &u, &du, &d2u);
      GraphJet j;
      j.base = x;
      j.value = Vector::Constant(1, u);
      j.d1 = Matrix::Zero(n, 1);
      Matrix hess(n, n);
      if (r < 1e-9) {
        hess = (2.0 * series_c2(n)) * Matrix::Identity(n, n);
      } else {
        const Vector e = x / r;
        j.d1.col(0) = du * e;
        // entry by entry, mirrored, so d2 is symmetric bit for bit
        const double radial = du / r;
        for (int a = 0; a < n; ++a) {
          hess(a, a) = d2u * e(a) * e(a) + radial * (1.0 - e(a) * e(a));
          for (int b = a + 1; b < n; ++b) {
            const double v = (d2u - radial) * e(a) * e(b);
            hess(a, b) = v;
            hess(b, a) = v;
          }
        }
      }
      j.d2 = {hess};
      return j;
    }
  }
  fail(ErrorCode::invalid_argument, "unknown model kind");
}

GraphJet SolitonModel::jet1(double x) const {
  return jet(Vector::Constant(1, x));
}

GraphJet SolitonModel::jet2(double x, double y) const {
  Vector p(2);
  p << x, y;
  return jet(p);
}

geom::ImmersionFn SolitonModel::immersion() const {
  const SolitonModel copy = *this;
  return [copy](double u, double v) {
    Vector p(copy.base_dim());
    p(0) = u;
    if (copy.base_dim() == 2) p(1) = v;
    return geom::immersion_from_graph(copy.jet(p));
  };
}

// ---------------------------------------------------------------------------
// Scans
// ---------------------------------------------------------------------------

namespace {

void check_box_inside(const Box& box, const Box& domain) {
  require(box.dim() == domain.dim(), ErrorCode::invalid_argument,
          "window dimension mismatch");
  for (int i = 0; i < box.dim(); ++i) {
    require(box.lo(i) < box.hi(i), ErrorCode::invalid_argument, "empty window");
    require(box.lo(i) >= domain.lo(i) - 1e-12 &&
                box.hi(i) <= domain.hi(i) + 1e-12,
            ErrorCode::invalid_argument, "window outside the model domain");
  }
}

template <typename Visit>
void scan_box(const Box& box, int samples_per_axis, const Visit& visit) {
  const int n = box.dim();
  const int m = samples_per_axis;
  std::vector<int> idx(n, 0);
  Vector x(n);
  while (true) {
    for (int a = 0; a < n; ++a) {
      const double t = m == 1 ? 0.5 : static_cast<double>(idx[a]) / (m - 1);
      x(a) = box.lo(a) + t * (box.hi(a) - box.lo(a));
    }
    bool on_edge = false;
    for (int a = 0; a < n; ++a)
      if (idx[a] == 0 || idx[a] == m - 1) on_edge = true;
    visit(x, on_edge);
    int a = 0;
    while (a < n && ++idx[a] == m) idx[a++] = 0;
    if (a == n) break;
  }
}

}  // namespace

std::vector<ScanStep> inf_h_scan(const SolitonModel& model,
                                 const std::vector<Box>& windows,
                                 int samples_per_axis) {
  require(!windows.empty(), ErrorCode::invalid_argument, "no scan windows");
  require(samples_per_axis >= 2, ErrorCode::invalid_argument,
          "scan needs at least 2 samples per axis");
  for (std::size_t m = 0; m < windows.size(); ++m) {
    check_box_inside(windows[m], model.domain());
    if (m > 0) {
      for (int i = 0; i < windows[m].dim(); ++i)
        require(windows[m].lo(i) <= windows[m - 1].lo(i) + 1e-12 &&
                    windows[m].hi(i) >= windows[m - 1].hi(i) - 1e-12,
                ErrorCode::invalid_argument, "scan windows must be nested");
    }
  }

  std::vector<ScanStep> out;
  double best = std::numeric_limits<double>::infinity();
  Vector best_loc;
  for (const Box& window : windows) {
    scan_box(window, samples_per_axis, [&](const Vector& x, bool) {
      const double h2 =
          geom::mean_curvature_vector(model.jet(x)).squaredNorm();
      if (h2 < best) {
        best = h2;
        best_loc = x;
      }
    });
    out.push_back({best, best_loc});
  }
  return out;
}

MinSReport min_s_window(const SolitonModel& model, const Box& window,
                        int samples_per_axis) {
  check_box_inside(window, model.domain());
  require(samples_per_axis >= 2, ErrorCode::invalid_argument,
          "scan needs at least 2 samples per axis");
  const Vector W = model.direction();
  MinSReport rep;
  rep.value = std::numeric_limits<double>::infinity();
  rep.on_boundary = false;
  scan_box(window, samples_per_axis, [&](const Vector& x, bool on_edge) {
    const double s = model.jet(x).position().dot(W);
    if (s < rep.value) {
      rep.value = s;
      rep.location = x;
      rep.on_boundary = on_edge;
    }
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

double VerifyReport::worst() const {
  return std::max(std::max(max_soliton_residual, max_pythagoras_defect),
                  std::max(max_drift_identity_defect, max_trace_defect));
}

VerifyReport verify_jets(const std::function<GraphJet(const Vector&)>& jets,
                         const Vector& W, const Box& box, int samples_per_axis,
                         double tol) {
  require(samples_per_axis >= 2, ErrorCode::invalid_argument,
          "verification needs at least 2 samples per axis");
  VerifyReport rep;
  rep.worst_location = box.lo;

  scan_box(box, samples_per_axis, [&](const Vector& x, bool) {
    const GraphJet jet = jets(x);
    const geom::MetricData metric = geom::induced_metric(jet);
    const int n = jet.base_dim();

    const double res = geom::soliton_residual(jet, W).lpNorm<Eigen::Infinity>();
    const geom::HeightData hd = geom::height_calculus(jet, W);
    const double pyth = std::abs(hd.grad_s_sq + hd.mean_curv_sq - 1.0);
    const double drift = std::abs(geom::drift_laplacian_height(jet, W) + 1.0);
    double trace = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        trace += metric.g_inv(i, j) *
                 geom::hessian_height(jet, W, jet.tangent(i), jet.tangent(j));
    const double trace_defect = std::abs(trace - hd.laplace_s);

    const double local =
        std::max(std::max(res, pyth), std::max(drift, trace_defect));
    if (local > rep.worst()) rep.worst_location = x;
    rep.max_soliton_residual = std::max(rep.max_soliton_residual, res);
    rep.max_pythagoras_defect = std::max(rep.max_pythagoras_defect, pyth);
    rep.max_drift_identity_defect = std::max(rep.max_drift_identity_defect, drift);
    rep.max_trace_defect = std::max(rep.max_trace_defect, trace_defect);
  });

  rep.pass = rep.worst() <= tol;
  return rep;
}

VerifyReport model_verify(const SolitonModel& model, int samples_per_axis,
                          double tol) {
  VerifyReport rep = verify_jets(
      [&model](const Vector& x) { return model.jet(x); }, model.direction(),
      model.domain(), samples_per_axis, tol);
  if (!rep.pass) {
    std::ostringstream msg;
    msg << "model verification failed: worst defect " << rep.worst()
        << " > tol " << tol << " near (";
    for (int i = 0; i < rep.worst_location.size(); ++i) {
      if (i) msg << ", ";
      msg << rep.worst_location(i);
    }
    msg << "); soliton residual " << rep.max_soliton_residual
        << ", pythagoras " << rep.max_pythagoras_defect << ", drift identity "
        << rep.max_drift_identity_defect << ", hessian trace "
        << rep.max_trace_defect;
    fail(ErrorCode::verification_failure, msg.str());
  }
  return rep;
}

}  // namespace tlab::solitons
