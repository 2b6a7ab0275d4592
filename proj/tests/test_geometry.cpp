#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "translatorlab/geometry.hpp"
#include "translatorlab/solitons.hpp"

using namespace tlab;
using geom::GraphJet;
using geom::Matrix;
using geom::Vector;
using testsupport::circle_jet;
using testsupport::jet_1d;
using testsupport::line_jet;
using testsupport::parabola_jet;

namespace {

Vector e2() {
  Vector w(2);
  w << 0, 1;
  return w;
}

GraphJet grim(double x) { return solitons::grim_reaper_jet(x); }

}  // namespace

TEST_CASE("induced metric") {
  SUBCASE("flat graph") {
    const auto m = geom::induced_metric(jet_1d(0.3, 0, 0, 0));
    CHECK(m.g(0, 0) == 1.0);
    CHECK(m.g_inv(0, 0) == 1.0);
    CHECK(m.sqrt_det == 1.0);
  }
  SUBCASE("grim reaper at pi/4") {
    const auto m = geom::induced_metric(grim(M_PI / 4));
    CHECK(m.g(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(m.g_inv(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(m.sqrt_det == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  }
  SUBCASE("two sheets in codimension two") {
    GraphJet j;
    j.base = Vector::Zero(2);
    j.value = Vector::Zero(2);
    j.d1 = Matrix::Identity(2, 2);
    j.d2 = {Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
    const auto m = geom::induced_metric(j);
    CHECK((m.g - 2.0 * Matrix::Identity(2, 2)).norm() == 0.0);
    CHECK(m.sqrt_det == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("non-finite input rejected") {
    GraphJet j = jet_1d(0, 0, 0, 0);
    j.d1(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(geom::induced_metric(j), Error);
  }
  SUBCASE("asymmetric d2 rejected") {
    GraphJet j;
    j.base = Vector::Zero(2);
    j.value = Vector::Zero(1);
    j.d1 = Matrix::Zero(2, 1);
    Matrix m(2, 2);
    m << 0, 1, 2, 0;
    j.d2 = {m};
    CHECK_THROWS_AS(geom::induced_metric(j), Error);
  }
}

TEST_CASE("metric bounds check") {
  SUBCASE("flat graph, tau 0") {
    const auto rep = geom::metric_bounds_check(
        geom::induced_metric(jet_1d(0, 0, 0, 0)), 0.0);
    CHECK(rep.ok);
    CHECK(rep.margin == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("grim reaper pi/4 sits on the lower bound at tau 1") {
    const auto rep =
        geom::metric_bounds_check(geom::induced_metric(grim(M_PI / 4)), 1.0);
    CHECK(rep.ok);
    CHECK(std::abs(rep.margin) < 1e-12);
  }
  SUBCASE("grim reaper pi/3 violates tau 1") {
    const auto rep =
        geom::metric_bounds_check(geom::induced_metric(grim(M_PI / 3)), 1.0);
    CHECK_FALSE(rep.ok);
    CHECK(rep.margin == doctest::Approx(-0.25).epsilon(1e-12));
  }
  SUBCASE("negative tau rejected") {
    CHECK_THROWS_AS(geom::metric_bounds_check(
                        geom::induced_metric(jet_1d(0, 0, 0, 0)), -1.0),
                    Error);
  }
}

TEST_CASE("mean curvature vector") {
  SUBCASE("affine graph") {
    CHECK(geom::mean_curvature_vector(line_jet(0.7, 2.0)).norm() == 0.0);
  }
  SUBCASE("grim reaper tip") {
    const Vector h = geom::mean_curvature_vector(grim(0));
    CHECK(h(0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(h(1) == doctest::Approx(-1.0).epsilon(1e-14));
  }
  SUBCASE("grim reaper norm is cos x") {
    CHECK(geom::mean_curvature_vector(grim(M_PI / 4)).norm() ==
          doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-13));
    CHECK(geom::mean_curvature_vector(grim(M_PI / 3)).norm() ==
          doctest::Approx(0.5).epsilon(1e-13));
  }
}

TEST_CASE("hypersurface shape") {
  SUBCASE("flat") {
    const auto s = geom::hypersurface_shape(jet_1d(0, 0, 0, 0), 1);
    CHECK(s.mean_curvature == 0.0);
    CHECK(s.norm_A_sq == 0.0);
    CHECK(s.normal(1) == 1.0);
  }
  SUBCASE("grim reaper tip") {
    const auto s = geom::hypersurface_shape(grim(0), 1);
    CHECK(s.normal(0) == doctest::Approx(0.0));
    CHECK(s.normal(1) == doctest::Approx(1.0));
    CHECK(s.mean_curvature == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.norm_A_sq == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("parabola at the apex") {
    const auto s = geom::hypersurface_shape(parabola_jet(0), 1);
    CHECK(s.mean_curvature == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s.norm_A_sq == doctest::Approx(4.0).epsilon(1e-14));
  }
  SUBCASE("consistency with the curvature vector") {
    for (double x : {-1.1, -0.3, 0.2, 0.9}) {
      const auto s = geom::hypersurface_shape(grim(x), 1);
      const Vector h = geom::mean_curvature_vector(grim(x));
      CHECK((h + s.mean_curvature * s.normal).norm() < 1e-13);
    }
  }
  SUBCASE("codimension two rejected") {
    GraphJet j;
    j.base = Vector::Zero(1);
    j.value = Vector::Zero(2);
    j.d1 = Matrix::Zero(1, 2);
    j.d2 = {Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
    CHECK_THROWS_AS(geom::hypersurface_shape(j, 1), Error);
  }
}

TEST_CASE("soliton residual") {
  SUBCASE("plane containing the direction") {
    Vector w(2);
    w << 1, 0;  // tangent to the flat graph
    const Vector r = geom::soliton_residual(jet_1d(0.4, 0, 0, 0), w);
    CHECK(r.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("grim reaper solves the equation") {
    for (double x : {-1.5, -0.9, 0.0, 0.4, 1.2}) {
      const Vector r = geom::soliton_residual(grim(x), e2());
      CHECK(r.cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("parabola misses by one at the apex") {
    const Vector r = geom::soliton_residual(parabola_jet(0), e2());
    CHECK(r(0) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("non-unit direction rejected") {
    Vector w(2);
    w << 0, 2;
    CHECK_THROWS_AS(geom::soliton_residual(grim(0), w), Error);
  }
}

TEST_CASE("height calculus") {
  SUBCASE("flat graph with tangent direction") {
    Vector w(2);
    w << 1, 0;
    const auto h = geom::height_calculus(jet_1d(0.3, 0, 0, 0), w);
    CHECK(h.s == doctest::Approx(0.3));
    CHECK(h.grad_s_sq == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(h.laplace_s == 0.0);
  }
  SUBCASE("grim reaper tip") {
    const auto h = geom::height_calculus(grim(0), e2());
    CHECK(h.grad_s_sq == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(h.laplace_s == doctest::Approx(-1.0).epsilon(1e-14));
  }
  SUBCASE("grim reaper at pi/3") {
    const auto h = geom::height_calculus(grim(M_PI / 3), e2());
    CHECK(h.grad_s_sq == doctest::Approx(0.75).epsilon(1e-13));
    CHECK(h.laplace_s == doctest::Approx(-0.25).epsilon(1e-13));
  }
  SUBCASE("drift laplacian is -1 on the soliton") {
    for (double x : {-1.2, -0.5, 0.0, 0.8, 1.4})
      CHECK(geom::drift_laplacian_height(grim(x), e2()) ==
            doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("hessian of the height") {
  SUBCASE("flat graph vanishes") {
    Vector w(2), u(2);
    w << 1, 0;
    u << 1, 0;
    CHECK(geom::hessian_height(jet_1d(0, 0, 0, 0), w, u, u) == 0.0);
  }
  SUBCASE("grim reaper tip, unit tangent") {
    Vector u(2);
    u << 1, 0;
    CHECK(geom::hessian_height(grim(0), e2(), u, u) ==
          doctest::Approx(-1.0).epsilon(1e-14));
  }
  SUBCASE("grim reaper pi/3, unit tangent") {
    const GraphJet j = grim(M_PI / 3);
    Vector u = j.tangent(0);
    u /= u.norm();
    CHECK(geom::hessian_height(j, e2(), u, u) ==
          doctest::Approx(-0.25).epsilon(1e-12));
  }
  SUBCASE("trace recovers the laplacian") {
    for (double x : {-1.0, 0.1, 0.9}) {
      const GraphJet j = grim(x);
      const auto m = geom::induced_metric(j);
      double trace = 0;
      for (int a = 0; a < 1; ++a)
        trace += m.g_inv(0, 0) *
                 geom::hessian_height(j, e2(), j.tangent(0), j.tangent(0));
      CHECK(trace ==
            doctest::Approx(geom::height_calculus(j, e2()).laplace_s)
                .epsilon(1e-10));
    }
  }
  SUBCASE("non-tangent argument rejected") {
    Vector u(2);
    u << 0, 1;  // normal at the tip
    CHECK_THROWS_AS(geom::hessian_height(grim(0), e2(), u, u), Error);
  }
}

// ---------------------------------------------------------------------------
// Discrete identities on sampled patches
// ---------------------------------------------------------------------------

namespace {

geom::PatchSamples grim_patch(double h, double lo = -1.0, double hi = 1.0) {
  return geom::sample_patch(
      1, {lo, 0}, {hi, 0}, {h, h},
      [](double x, double) {
        return geom::immersion_from_graph(solitons::grim_reaper_jet(x));
      },
      1);
}

}  // namespace

TEST_CASE("laplace-beltrami of the height on the grim reaper") {
  // Delta S = -H^2 with S = log cos x
  const auto patch = grim_patch(1e-3);
  std::vector<double> s(patch.size());
  for (std::size_t i = 0; i < patch.size(); ++i)
    s[i] = patch.position[i](1);
  const auto lb = geom::laplace_beltrami(patch, s);
  double worst = 0;
  for (int i = 1; i + 1 < patch.nx; ++i) {
    const double h2 = patch.H[i] * patch.H[i];
    worst = std::max(worst, std::abs(lb.values[i] + h2));
  }
  CHECK(worst < 2e-6);
}

TEST_CASE("jacobi identity residual") {
  SUBCASE("straight line vanishes identically") {
    const auto patch = geom::sample_patch(
        1, {-1, 0}, {1, 0}, {0.01, 0.01},
        [](double x, double) {
          return geom::immersion_from_graph(testsupport::line_jet(x, 0.5));
        },
        1);
    CHECK(geom::jacobi_normal_residual(patch).max_abs == 0.0);
  }
  SUBCASE("unit circle arc satisfies the identity") {
    const auto patch = geom::sample_patch(
        1, {-0.5, 0}, {0.5, 0}, {1e-3, 1e-3},
        [](double x, double) {
          return geom::immersion_from_graph(testsupport::circle_jet(x));
        },
        1);
    // H = 1 and |A|^2 = 1 pointwise up to rounding
    CHECK(patch.H[patch.nx / 2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(patch.norm_A_sq[patch.nx / 2] ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(geom::jacobi_normal_residual(patch).max_abs < 1e-6);
  }
  SUBCASE("second order on the grim reaper") {
    const double c = geom::jacobi_normal_residual(grim_patch(2e-3)).max_abs;
    const double f = geom::jacobi_normal_residual(grim_patch(1e-3)).max_abs;
    CHECK(c / f >= 3.6);
  }
  SUBCASE("scalarized form") {
    const auto patch = grim_patch(1e-3);
    Vector e(2);
    e << 0, 1;
    CHECK(geom::jacobi_scalar_residual(patch, e).max_abs < 1e-6);
  }
}

TEST_CASE("curvature reaction identity residual") {
  SUBCASE("hyperplane vanishes") {
    const auto model = solitons::SolitonModel::hyperplane(1);
    const auto patch = geom::sample_patch(
        1, {-1, 0}, {1, 0}, {0.01, 0.01}, model.immersion(), 1);
    CHECK(geom::mean_curvature_identity_residual(patch, model.direction())
              .max_abs == 0.0);
  }
  SUBCASE("grim reaper at h = 1e-3") {
    const auto r =
        geom::mean_curvature_identity_residual(grim_patch(1e-3),
                                               Vector(e2()));
    CHECK(r.max_abs <= 1e-4);
  }
  SUBCASE("bowl on an angular strip, r in [0.1, 5]") {
    const auto model = solitons::SolitonModel::bowl(2, 6.0, 1e-3);
    const auto& profile = model.profile();
    auto immersion = [&profile](double r, double phi) {
      double u, du, d2u;
      profile.eval(r, &u, &du, &d2u);
      const double c = std::cos(phi), s = std::sin(phi);
      geom::ImmersionJet jet;
      jet.position = Vector(3);
      jet.position << r * c, r * s, u;
      jet.d1.resize(2);
      jet.d1[0] = Vector(3);
      jet.d1[0] << c, s, du;
      jet.d1[1] = Vector(3);
      jet.d1[1] << -r * s, r * c, 0;
      jet.d2.assign(2, std::vector<Vector>(2, Vector(3)));
      jet.d2[0][0] << 0, 0, d2u;
      jet.d2[0][1] << -s, c, 0;
      jet.d2[1][0] = jet.d2[0][1];
      jet.d2[1][1] << -r * c, -r * s, 0;
      return jet;
    };
    const double h = 1e-3;
    const auto patch =
        geom::sample_patch(2, {0.1, 0.0}, {5.0, 4 * h}, {h, h}, immersion, 1);
    Vector w(3);
    w << 0, 0, 1;
    CHECK(geom::mean_curvature_identity_residual(patch, w).max_abs <= 1e-3);
  }
  SUBCASE("too few samples rejected") {
    CHECK_THROWS_AS(grim_patch(1.5), Error);
  }
}

// ---------------------------------------------------------------------------
// Properties on random jets
// ---------------------------------------------------------------------------

TEST_CASE("random jet properties") {
  std::mt19937 rng(20240817);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 2;
    const int k = 1 + (trial / 2) % 2;
    const GraphJet j = testsupport::random_jet(rng, n, k);
    const auto m = geom::induced_metric(j);

    // inverse is an inverse and the volume never shrinks
    CHECK((m.g * m.g_inv - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK(m.sqrt_det >= 1.0 - 1e-12);

    // eigenvalues of g_inv within [1/(1+|d1|^2), 1]
    CHECK(geom::metric_bounds_check(m, j.d1.squaredNorm(), 1e-10).ok);

    if (k == 1) {
      const auto s = geom::hypersurface_shape(j, 1);
      CHECK(s.normal.norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(s.norm_A_sq >=
            s.mean_curvature * s.mean_curvature / n - 1e-12);
      CHECK(std::abs((m.g_inv * s.second_fundamental).trace() -
                     s.mean_curvature) < 1e-12);
    }

    // trace of the height hessian matches the height laplacian
    Vector w = Vector::Zero(n + k);
    w(n + k - 1) = 1.0;
    double trace = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        trace += m.g_inv(a, b) *
                 geom::hessian_height(j, w, j.tangent(a), j.tangent(b));
    const auto hd = geom::height_calculus(j, w);
    CHECK(std::abs(trace - hd.laplace_s) < 1e-10 * (1 + std::abs(trace)));

    // normal frame is orthonormal and orthogonal to the tangents
    const Matrix frame = geom::normal_frame(j);
    CHECK((frame.transpose() * frame - Matrix::Identity(k, k))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < k; ++c)
        CHECK(std::abs(frame.col(c).dot(j.tangent(a))) < 1e-12);
  }
}
