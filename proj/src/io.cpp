#include "translatorlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "translatorlab/error.hpp"

namespace tlab::io {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  require(out.is_open(), ErrorCode::io_failure,
          "cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  require(in.is_open(), ErrorCode::io_failure,
          "cannot open for reading: " + path);
  return in;
}

std::vector<double> split_row(const std::string& line, std::size_t expected,
                              const std::string& path) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  require(out.size() == expected, ErrorCode::io_failure,
          "malformed CSV row in " + path);
  return out;
}

constexpr const char* kDiagnosticsHeader =
    "t,sup_f,sup_fbar,sup_bdry_grad,steady_res,area,dissipation,"
    "barrier_margin";

}  // namespace

void write_diagnostics_csv(const std::string& path,
                           const flow::Diagnostics& diagnostics) {
  std::ofstream out = open_out(path);
  out << kDiagnosticsHeader << "\n";
  for (const flow::DiagnosticsRow& r : diagnostics.rows) {
    out << fmt(r.t) << ',' << fmt(r.sup_f) << ',' << fmt(r.sup_fbar) << ','
        << fmt(r.sup_bdry_grad) << ',' << fmt(r.steady_res) << ','
        << fmt(r.area) << ',' << fmt(r.dissipation) << ','
        << fmt(r.barrier_margin) << "\n";
  }
  require(out.good(), ErrorCode::io_failure, "write failed: " + path);
}

flow::Diagnostics read_diagnostics_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  require(std::getline(in, line) && line == kDiagnosticsHeader,
          ErrorCode::io_failure, "unexpected diagnostics header in " + path);
  flow::Diagnostics d;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<double> v = split_row(line, 8, path);
    d.rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
  }
  return d;
}

void write_snapshot(const std::string& path, const flow::Problem& problem,
                    const flow::State& state) {
  const flow::Grid& g = problem.grid;
  const int k = problem.k;
  require(static_cast<int>(state.f.size()) == g.count() * k,
          ErrorCode::invalid_argument, "snapshot: state size mismatch");

  auto value_at = [&](int i, int j, int c) {
    const int ord = g.ordinal[j * g.shape[0] + i];
    if (ord > 0) return state.f[static_cast<std::size_t>(ord - 1) * k + c];
    geom::Vector x(g.dim);
    x(0) = g.anchor(0) + (g.base[0] + i) * g.h;
    if (g.dim == 2) x(1) = g.anchor(1) + (g.base[1] + j) * g.h;
    return problem.psi.value(x)(c);
  };

  std::ofstream out = open_out(path);
  if (g.dim == 1) {
    out << "x";
    for (int c = 0; c < k; ++c) out << ",f" << c + 1;
    out << "\n";
    for (int i = 0; i < g.shape[0]; ++i) {
      out << fmt(g.anchor(0) + (g.base[0] + i) * g.h);
      for (int c = 0; c < k; ++c) out << ',' << fmt(value_at(i, 0, c));
      out << "\n";
    }
  } else {
    const long points = static_cast<long>(g.shape[0]) * g.shape[1];
    out << "# vtk DataFile Version 3.0\n";
    out << "translator flow snapshot t=" << fmt(state.t) << "\n";
    out << "ASCII\n";
    out << "DATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << g.shape[0] << ' ' << g.shape[1] << " 1\n";
    out << "ORIGIN " << fmt(g.anchor(0) + g.base[0] * g.h) << ' '
        << fmt(g.anchor(1) + g.base[1] * g.h) << " 0\n";
    out << "SPACING " << fmt(g.h) << ' ' << fmt(g.h) << " 1\n";
    out << "POINT_DATA " << points << "\n";
    for (int c = 0; c < k; ++c) {
      out << "SCALARS f" << c + 1 << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (int j = 0; j < g.shape[1]; ++j)
        for (int i = 0; i < g.shape[0]; ++i)
          out << fmt(value_at(i, j, c)) << "\n";
    }
  }
  require(out.good(), ErrorCode::io_failure, "write failed: " + path);
}

void write_bowl_csv(const std::string& path,
                    const solitons::BowlProfile& profile) {
  std::ofstream out = open_out(path);
  out << "r,u,du,d2u\n";
  for (std::size_t i = 0; i < profile.r.size(); ++i)
    out << fmt(profile.r[i]) << ',' << fmt(profile.u[i]) << ','
        << fmt(profile.du[i]) << ',' << fmt(profile.d2u[i]) << "\n";
  require(out.good(), ErrorCode::io_failure, "write failed: " + path);
}

solitons::BowlProfile read_bowl_csv(const std::string& path, int dim) {
  std::ifstream in = open_in(path);
  std::string line;
  require(std::getline(in, line) && line == "r,u,du,d2u",
          ErrorCode::io_failure, "unexpected profile header in " + path);
  solitons::BowlProfile p;
  p.dim = dim;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<double> v = split_row(line, 4, path);
    p.r.push_back(v[0]);
    p.u.push_back(v[1]);
    p.du.push_back(v[2]);
    p.d2u.push_back(v[3]);
  }
  require(p.r.size() >= 12, ErrorCode::io_failure,
          "profile table too short in " + path);
  p.step = p.r[1] - p.r[0];
  p.r_series = 10 * p.step;
  return p;
}

void write_growth_csv(const std::string& path,
                      const analysis::GrowthReport& report) {
  std::ofstream out = open_out(path);
  out << "R,f_R,ratio\n";
  for (const analysis::GrowthPoint& pt : report.points)
    out << fmt(pt.R) << ',' << fmt(pt.f_R) << ',' << fmt(pt.ratio) << "\n";
  require(out.good(), ErrorCode::io_failure, "write failed: " + path);
}

void write_spectrum_csv(const std::string& path,
                        const std::vector<SpectrumRow>& rows) {
  std::ofstream out = open_out(path);
  out << "a,sup_value,lambda1\n";
  for (const SpectrumRow& r : rows)
    out << fmt(r.a) << ',' << fmt(r.sup_value) << ',' << fmt(r.lambda1) << "\n";
  require(out.good(), ErrorCode::io_failure, "write failed: " + path);
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out = open_out(path);
  out << content;
  require(out.good(), ErrorCode::io_failure, "write failed: " + path);
}

}  // namespace tlab::io
