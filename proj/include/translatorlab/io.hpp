#ifndef TRANSLATORLAB_IO_HPP
#define TRANSLATORLAB_IO_HPP

#include <string>
#include <vector>

#include "translatorlab/analysis.hpp"
#include "translatorlab/flow.hpp"
#include "translatorlab/solitons.hpp"

namespace tlab::io {

// Diagnostics CSV, exact header:
// t,sup_f,sup_fbar,sup_bdry_grad,steady_res,area,dissipation,barrier_margin
void write_diagnostics_csv(const std::string& path,
                           const flow::Diagnostics& diagnostics);
flow::Diagnostics read_diagnostics_csv(const std::string& path);

// Field snapshot: CSV x,f1..fk in 1d, VTK legacy ASCII STRUCTURED_POINTS
// (one scalar field per component) in 2d. Non-interior lattice nodes carry
// the boundary data values.
void write_snapshot(const std::string& path, const flow::Problem& problem,
                    const flow::State& state);

// Bowl profile table, exact header r,u,du,d2u.
void write_bowl_csv(const std::string& path,
                    const solitons::BowlProfile& profile);
solitons::BowlProfile read_bowl_csv(const std::string& path, int dim);

// Growth report CSV, header R,f_R,ratio.
void write_growth_csv(const std::string& path,
                      const analysis::GrowthReport& report);

struct SpectrumRow {
  double a = 0, sup_value = 0, lambda1 = 0;
};

// Spectral sweep CSV, header a,sup_value,lambda1.
void write_spectrum_csv(const std::string& path,
                        const std::vector<SpectrumRow>& rows);

void write_text(const std::string& path, const std::string& content);

}  // namespace tlab::io

#endif
