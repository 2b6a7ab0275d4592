#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "translatorlab/flow.hpp"
#include "translatorlab/io.hpp"

using namespace tlab;
using flow::BoundaryData;
using flow::DomainSpec;
using flow::Grid;
using flow::Problem;
using flow::RunConfig;
using flow::RunResult;
using flow::State;
using geom::Matrix;
using geom::Vector;

namespace {

Vector vec1(double x) { return Vector::Constant(1, x); }

Vector vec2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

DomainSpec unit_interval() { return DomainSpec::rectangle(vec1(-1), vec1(1)); }

// the 1d steady translator shifted to vanish at x = +-1
BoundaryData steady_profile_psi(const DomainSpec& spec) {
  return flow::psi_custom(
      1, 1,
      [](const Vector& x) {
        return Vector::Constant(
            1, std::log(std::cos(x(0)) / std::cos(1.0)));
      },
      [](const Vector& x) {
        return Matrix::Constant(1, 1, -std::tan(x(0)));
      },
      [](const Vector& x, int) {
        const double c = std::cos(x(0));
        return Matrix::Constant(1, 1, -1.0 / (c * c));
      },
      spec);
}

Problem reference_problem(double h) {
  return flow::make_problem(unit_interval(), h, flow::psi_zero(1, 1),
                            vec1(1.0));
}

RunResult reference_run(double h, double sigma = 0.9) {
  RunConfig cfg;
  cfg.sigma = sigma;
  cfg.t_max = 40.0;
  cfg.record_every = 500;
  return flow::run(reference_problem(h), cfg);
}

double steady_error(const RunResult& rr, const Problem& pb) {
  double worst = 0;
  for (int node = 0; node < pb.grid.count(); ++node) {
    const double x = pb.grid.position[node](0);
    const double exact = std::log(std::cos(x) / std::cos(1.0));
    worst = std::max(worst, std::abs(rr.state.f[node] - exact));
  }
  return worst;
}

}  // namespace

TEST_CASE("domain specs") {
  SUBCASE("diameters") {
    CHECK(unit_interval().diameter() == doctest::Approx(2.0));
    CHECK(DomainSpec::rectangle(vec2(0, 0), vec2(1, 1)).diameter() ==
          doctest::Approx(std::sqrt(2.0)));
    CHECK(DomainSpec::disc(vec2(0, 0), 0.4).diameter() == doctest::Approx(0.8));
    CHECK(DomainSpec::ellipse(vec2(0, 0), vec2(2, 1)).diameter() ==
          doctest::Approx(4.0));
  }
  SUBCASE("invalid shapes rejected") {
    CHECK_THROWS_AS(DomainSpec::rectangle(vec1(1), vec1(-1)), Error);
    CHECK_THROWS_AS(DomainSpec::disc(vec2(0, 0), 0.0), Error);
    CHECK_THROWS_AS(DomainSpec::ellipse(vec2(0, 0), vec2(1, 0)), Error);
  }
}

TEST_CASE("domain discretization") {
  SUBCASE("unit square at h = 0.25 has 9 interior nodes") {
    const Grid g = flow::discretize_domain(
        DomainSpec::rectangle(vec2(0, 0), vec2(1, 1)), 0.25);
    CHECK(g.count() == 9);
  }
  SUBCASE("disc interior nodes match brute-force lattice enumeration") {
    const DomainSpec spec = DomainSpec::disc(vec2(0, 0), 0.5);
    const double h = 0.25;
    int expected = 0;
    for (int i = -10; i <= 10; ++i)
      for (int j = -10; j <= 10; ++j)
        if (std::hypot(i * h, j * h) < 0.5) ++expected;
    CHECK(expected == 9);  // includes the four diagonal neighbors
    CHECK(flow::discretize_domain(spec, h).count() == expected);
  }
  SUBCASE("resolution error when h is as large as the domain") {
    CHECK_THROWS_AS(flow::discretize_domain(unit_interval(), 2.0), Error);
  }
  SUBCASE("every interior node has a complete stencil") {
    const Grid g =
        flow::discretize_domain(DomainSpec::disc(vec2(0.1, -0.2), 0.37), 0.05);
    for (int node = 0; node < g.count(); ++node)
      for (int fam = 0; fam < g.families; ++fam)
        for (int side = 0; side < 2; ++side) {
          const int a = g.arm_index(node, fam, side);
          const bool regular = g.arm_neighbor[a] >= 0;
          CHECK((regular || g.arm_cut_point[a].size() == 2));
          CHECK(g.arm_theta[a] > 0);
          CHECK(g.arm_theta[a] <= 1.0);
        }
  }
}

TEST_CASE("spatial operator") {
  SUBCASE("affine data with zero drift is steady") {
    const DomainSpec spec = unit_interval();
    const auto psi = flow::psi_affine(Matrix::Constant(1, 1, 0.7),
                                      Vector::Constant(1, -0.2));
    const Problem pb = flow::make_problem(spec, 0.1, psi, vec1(0.0));
    const State st = flow::initial_state(pb);
    // zero up to the eps/h^2 cancellation floor of the stencils
    for (double v : flow::spatial_operator(pb, st)) CHECK(std::abs(v) < 1e-12);
  }
  SUBCASE("quadratic data reproduces the closed form") {
    // f = x^2/2: value 1/(1+x^2) + w at every interior node
    const DomainSpec spec = unit_interval();
    const auto psi = flow::psi_quadratic({Matrix::Constant(1, 1, 1.0)},
                                         Matrix::Zero(1, 1), Vector::Zero(1),
                                         spec);
    const Problem pb = flow::make_problem(spec, 0.05, psi, vec1(0.5));
    const State st = flow::initial_state(pb);
    const auto rhs = flow::spatial_operator(pb, st);
    for (int node = 0; node < pb.grid.count(); ++node) {
      const double x = pb.grid.position[node](0);
      CHECK(rhs[node] ==
            doctest::Approx(1.0 / (1.0 + x * x) + 0.5).epsilon(1e-10));
    }
  }
  SUBCASE("steady translator profile has second-order residual") {
    double res[2];
    int level = 0;
    for (double h : {0.02, 0.01}) {
      const DomainSpec spec = unit_interval();
      const Problem pb =
          flow::make_problem(spec, h, steady_profile_psi(spec), vec1(1.0));
      flow::Workspace ws;
      flow::evaluate(pb, flow::initial_state(pb), ws);
      res[level++] = ws.stats.sup_rhs;
    }
    CHECK(res[0] < 5e-3);
    CHECK(res[0] / res[1] >= 3.6);
  }
}

TEST_CASE("cfl timestep") {
  const Problem pb1 = reference_problem(0.01);
  CHECK(flow::cfl_timestep(pb1, 1.0) == doctest::Approx(2.5e-5).epsilon(1e-14));
  const Problem pb2 = flow::make_problem(DomainSpec::disc(vec2(0, 0), 0.4),
                                         0.01, flow::psi_zero(2, 1), vec1(1.0));
  CHECK(flow::cfl_timestep(pb2, 0.5) ==
        doctest::Approx(3.125e-6).epsilon(1e-14));
  CHECK_THROWS_AS(flow::cfl_timestep(pb1, 0.0), Error);
  CHECK_THROWS_AS(flow::cfl_timestep(pb1, 1.5), Error);
}

TEST_CASE("explicit step") {
  SUBCASE("affine data does not move") {
    const auto psi = flow::psi_affine(Matrix::Constant(1, 1, 0.3),
                                      Vector::Constant(1, 0.1));
    const Problem pb = flow::make_problem(unit_interval(), 0.1, psi, vec1(0.0));
    State st = flow::initial_state(pb);
    const State before = st;
    flow::Workspace ws;
    const double dt = flow::cfl_timestep(pb, 0.5);
    flow::step(pb, st, dt, ws);
    for (std::size_t i = 0; i < st.f.size(); ++i)
      CHECK(std::abs(st.f[i] - before.f[i]) <= dt * 1e-12);
  }
  SUBCASE("first step from zero data is dt * w on the interior") {
    const Problem pb = reference_problem(0.1);
    State st = flow::initial_state(pb);
    flow::Workspace ws;
    const double dt = flow::cfl_timestep(pb, 0.5);
    flow::step(pb, st, dt, ws);
    for (double v : st.f) CHECK(v == doctest::Approx(dt).epsilon(1e-14));
    CHECK(st.t == dt);
  }
  SUBCASE("near-steady data barely moves") {
    const DomainSpec spec = unit_interval();
    const double h = 0.01;
    const Problem pb =
        flow::make_problem(spec, h, steady_profile_psi(spec), vec1(1.0));
    State st = flow::initial_state(pb);
    const State before = st;
    flow::Workspace ws;
    const double dt = flow::cfl_timestep(pb, 0.5);
    flow::step(pb, st, dt, ws);
    double moved = 0;
    for (std::size_t i = 0; i < st.f.size(); ++i)
      moved = std::max(moved, std::abs(st.f[i] - before.f[i]));
    CHECK(moved <= 50.0 * h * h * dt);
  }
  SUBCASE("dt at 100x the stability limit blows up within 100 steps") {
    const Problem pb = reference_problem(0.02);
    State st = flow::initial_state(pb);
    flow::Workspace ws;
    const double dt = 100.0 * flow::cfl_timestep(pb, 1.0);
    int steps = 0;
    bool blew_up = false;
    try {
      for (; steps < 100; ++steps) flow::step(pb, st, dt, ws);
    } catch (const Error& e) {
      blew_up = e.code() == ErrorCode::blow_up;
    }
    CHECK(blew_up);
    CHECK(steps < 100);
  }
}

TEST_CASE("reference run against the closed form") {
  const Problem pb = reference_problem(0.02);
  const RunResult rr = reference_run(0.02);

  SUBCASE("steady and accurate") {
    CHECK(rr.steady);
    CHECK(rr.steady_residual < 1e-8);
    CHECK(steady_error(rr, pb) < 2e-4);
  }
  SUBCASE("second-order steady error") {
    const double coarse = steady_error(reference_run(0.04),
                                       reference_problem(0.04));
    const double fine = steady_error(rr, pb);
    CHECK(coarse / fine >= 3.6);
  }
  SUBCASE("monitors hold at every record") {
    CHECK(rr.monitors_ok);
    CHECK(rr.max_principle.ok);
    CHECK(rr.max_principle.margin >= -1e-10 * (1 + 2 * rr.state.t));
    CHECK(rr.boundary_gradient.ok);
    CHECK(rr.boundary_gradient.observed <= rr.boundary_gradient.bound);
    CHECK(rr.sandwich_margin >= -1e-12);
    CHECK(rr.barrier.value_margin >= -1e-8);
    CHECK(rr.barrier.supersolution_margin >= -1e-8);
  }
  SUBCASE("shifted field stays below t") {
    for (const auto& row : rr.diagnostics.rows)
      CHECK(row.sup_fbar <= row.t + 1e-10 * (1 + row.t));
  }
  SUBCASE("diagnostics complete and monotone in time") {
    REQUIRE(rr.diagnostics.rows.size() >= 3);
    for (std::size_t i = 1; i < rr.diagnostics.rows.size(); ++i)
      CHECK(rr.diagnostics.rows[i].t > rr.diagnostics.rows[i - 1].t);
    CHECK(rr.diagnostics.rows.front().t == 0.0);
  }
  SUBCASE("determinism: identical config, identical diagnostics") {
    const RunResult again = reference_run(0.02);
    REQUIRE(again.diagnostics.rows.size() == rr.diagnostics.rows.size());
    for (std::size_t i = 0; i < rr.diagnostics.rows.size(); ++i) {
      CHECK(again.diagnostics.rows[i].t == rr.diagnostics.rows[i].t);
      CHECK(again.diagnostics.rows[i].sup_f == rr.diagnostics.rows[i].sup_f);
      CHECK(again.diagnostics.rows[i].area == rr.diagnostics.rows[i].area);
      CHECK(again.diagnostics.rows[i].dissipation ==
            rr.diagnostics.rows[i].dissipation);
    }
  }
}

TEST_CASE("steady at t = 0 for affine data without drift") {
  const auto psi = flow::psi_affine(Matrix::Constant(1, 1, 0.4),
                                    Vector::Constant(1, 0.0));
  const Problem pb = flow::make_problem(unit_interval(), 0.05, psi, vec1(0.0));
  RunConfig cfg;
  cfg.t_max = 1.0;
  const RunResult rr = flow::run(pb, cfg);
  CHECK(rr.steady);
  CHECK(rr.steps == 0);
  CHECK(rr.state.t == 0.0);
  CHECK(rr.state.f == flow::initial_state(pb).f);
}

TEST_CASE("maximum principle monitor flags a corrupted state") {
  const Problem pb = reference_problem(0.1);
  State st = flow::initial_state(pb);
  st.t = 0.5;
  st.f.assign(st.f.size(), 100.0);
  const auto rep =
      flow::max_principle_monitor(pb, st, std::vector<double>(1, 0.5));
  CHECK_FALSE(rep.ok);
  CHECK(rep.margin < -1.0);
}

TEST_CASE("run escalates monitor violations") {
  // an impossible barrier tolerance turns the healthy run into a violation
  const Problem pb = reference_problem(0.1);
  RunConfig cfg;
  cfg.t_max = 0.5;
  cfg.tol_barrier = -1.0;  // any positive margin still fails a negative tol
  bool violated = false;
  try {
    flow::run(pb, cfg);
  } catch (const Error& e) {
    violated = e.code() == ErrorCode::monitor_violation;
  }
  CHECK(violated);
}

TEST_CASE("boundary gradient bound formula") {
  // disc of diameter 1, psi with pinned sup values
  BoundaryData psi = flow::psi_zero(2, 1);
  const Problem pb = flow::make_problem(DomainSpec::disc(vec2(0, 0), 0.5), 0.05,
                                        psi, vec1(1.0));
  flow::Workspace ws;
  flow::evaluate(pb, flow::initial_state(pb), ws);
  SUBCASE("zero data, tau zero") {
    const auto m = flow::boundary_gradient_monitor(pb, ws, 0.0);
    CHECK(m.bound == doctest::Approx(4.0).epsilon(1e-14));
  }
  SUBCASE("stated sup values") {
    Problem pb2 = pb;
    pb2.psi.sup_d2psi = 0.5;
    pb2.psi.sup_dpsi_boundary = 0.1;
    const auto m = flow::boundary_gradient_monitor(pb2, ws, 1.0);
    CHECK(m.bound ==
          doctest::Approx(16.0 + std::sqrt(2.0) * 0.1).epsilon(1e-14));
  }
}

TEST_CASE("barrier comparison function") {
  const Problem pb = reference_problem(0.05);
  const State st = flow::initial_state(pb);
  const Vector p = vec1(1.0);

  SUBCASE("at the initial time both barriers are nonnegative") {
    const auto out = flow::barrier_check(pb, st, p, 0, 0.0);
    CHECK(out.requirement_ok);
    CHECK(out.margins_evaluated);
    CHECK(out.value_margin_upper > 0.0);
    CHECK(out.value_margin_lower > 0.0);
    CHECK(out.supersolution_margin_upper >= -1e-12);
    CHECK(out.supersolution_margin_lower >= -1e-12);
  }
  SUBCASE("halving mu K fails the requirement without evaluating margins") {
    const double auto_mu_k = 4.0 * 2.0 * (1.0 + 0.0) * (1.0 * 0.0 + 1.0);
    const auto out = flow::barrier_check(pb, st, p, 0, 0.0, auto_mu_k / 2);
    CHECK_FALSE(out.requirement_ok);
    CHECK_FALSE(out.margins_evaluated);
  }
  SUBCASE("point off the boundary rejected") {
    CHECK_THROWS_AS(flow::barrier_check(pb, st, vec1(0.5), 0, 0.0), Error);
  }
}

TEST_CASE("small data condition") {
  SUBCASE("tiny disc") {
    const auto rep = flow::check_small_data_condition(
        DomainSpec::disc(vec2(0, 0), 0.025), flow::psi_zero(2, 1));
    CHECK(rep.value == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(rep.satisfied);
  }
  SUBCASE("small but not small enough") {
    const auto rep = flow::check_small_data_condition(
        DomainSpec::disc(vec2(0, 0), 0.1), flow::psi_zero(2, 1));
    CHECK(rep.value == doctest::Approx(1.6).epsilon(1e-14));
    CHECK_FALSE(rep.satisfied);
  }
  SUBCASE("boundary data contributes") {
    BoundaryData psi = flow::psi_zero(2, 1);
    psi.sup_d2psi = 1.0;
    psi.sup_dpsi_boundary = 0.1;
    const auto rep = flow::check_small_data_condition(
        DomainSpec::disc(vec2(0, 0), 0.025), psi);
    CHECK(rep.value ==
          doctest::Approx(8 * 0.05 * 3 + std::sqrt(2.0) * 0.1).epsilon(1e-14));
    CHECK_FALSE(rep.satisfied);
  }
}

TEST_CASE("volume balance") {
  SUBCASE("steady translator data dissipates nothing") {
    const DomainSpec spec = unit_interval();
    const Problem pb =
        flow::make_problem(spec, 0.01, steady_profile_psi(spec), vec1(1.0));
    RunConfig cfg;
    cfg.t_max = 20.0 * flow::cfl_timestep(pb, cfg.sigma);
    cfg.tol_steady = 1e-15;  // force a few steps
    cfg.record_every = 5;
    const RunResult rr = flow::run(pb, cfg);
    CHECK(flow::volume_balance(rr.diagnostics) <= 1e-8);
  }
  SUBCASE("reference run balances and improves under refinement") {
    const RunResult coarse = reference_run(0.04);
    const RunResult fine = reference_run(0.02);
    const double v0 = fine.diagnostics.rows.front().area;
    CHECK(flow::volume_balance(fine.diagnostics) <= 5e-3 * v0);
    CHECK(flow::volume_balance(fine.diagnostics) <
          flow::volume_balance(coarse.diagnostics));
  }
  SUBCASE("area shrinks under mean curvature flow") {
    // w = 0, nontrivial data: weighted volume is plain area, nonincreasing
    const auto psi = flow::psi_quadratic({Matrix::Constant(1, 1, -1.0)},
                                         Matrix::Zero(1, 1),
                                         Vector::Constant(1, 0.5),
                                         unit_interval());
    const Problem pb = flow::make_problem(unit_interval(), 0.02, psi, vec1(0.0));
    RunConfig cfg;
    cfg.t_max = 0.2;
    cfg.record_every = 200;
    const RunResult rr = flow::run(pb, cfg);
    for (std::size_t i = 1; i < rr.diagnostics.rows.size(); ++i)
      CHECK(rr.diagnostics.rows[i].area <=
            rr.diagnostics.rows[i - 1].area + 1e-12);
  }
}

TEST_CASE("two-component flow matches the aligned closed form") {
  // f = v phi(x) with v = w/|w| and phi = log(cos(|w|x)/cos(|w|))/|w|
  // solves g^{ij} f_ij + w = 0 on (-1, 1) with zero boundary data
  Vector w(2);
  w << 1.0, 0.5;
  const double wn = w.norm();
  const Problem pb =
      flow::make_problem(unit_interval(), 0.02, flow::psi_zero(1, 2), w);
  RunConfig cfg;
  cfg.sigma = 0.9;
  cfg.t_max = 40.0;
  cfg.record_every = 2000;
  const RunResult rr = flow::run(pb, cfg);
  REQUIRE(rr.steady);
  double worst = 0;
  for (int node = 0; node < pb.grid.count(); ++node) {
    const double x = pb.grid.position[node](0);
    const double phi = std::log(std::cos(wn * x) / std::cos(wn)) / wn;
    for (int c = 0; c < 2; ++c)
      worst = std::max(worst,
                       std::abs(rr.state.f[node * 2 + c] - phi * w(c) / wn));
  }
  CHECK(worst < 5e-4);
  CHECK(rr.monitors_ok);
}

TEST_CASE("ellipse domain runs clean") {
  const DomainSpec spec = DomainSpec::ellipse(vec2(0.05, -0.02), vec2(0.3, 0.2));
  const Problem pb =
      flow::make_problem(spec, 0.025, flow::psi_zero(2, 1), vec1(1.0));
  RunConfig cfg;
  cfg.t_max = 1.0;
  cfg.record_every = 1000;
  const RunResult rr = flow::run(pb, cfg);
  CHECK(rr.steady);
  CHECK(rr.monitors_ok);
  CHECK(rr.barrier.value_margin >= -1e-8);
  // the steady graph bulges up and stays below the 1d profile bound
  CHECK(rr.diagnostics.rows.back().sup_f > 0.0);
  CHECK(rr.diagnostics.rows.back().sup_f < 0.2);
}

TEST_CASE("disc flow matches the radial oracle at coarse resolution") {
  const DomainSpec spec = DomainSpec::disc(vec2(0, 0), 0.4);
  const Problem pb = flow::make_problem(spec, 0.025, flow::psi_zero(2, 1),
                                        vec1(1.0));
  RunConfig cfg;
  cfg.t_max = 2.0;
  cfg.record_every = 2000;
  const RunResult rr = flow::run(pb, cfg);
  CHECK(rr.steady);

  const testsupport::RadialProfileOracle oracle(2, 0.5, 1e-5);
  const double shift = oracle.value(0.4);
  double worst = 0;
  for (int node = 0; node < pb.grid.count(); ++node) {
    const double r = pb.grid.position[node].norm();
    worst = std::max(worst,
                     std::abs(rr.state.f[node] - (oracle.value(r) - shift)));
  }
  CHECK(worst < 5e-4);
  CHECK(rr.monitors_ok);
}
