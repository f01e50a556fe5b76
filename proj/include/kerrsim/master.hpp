#pragma once

#include <optional>
#include <vector>

#include "kerrsim/fock.hpp"
#include "kerrsim/model.hpp"

namespace kerrsim {

struct MasterConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  std::vector<double> record_times;
  int dim = 2;

  void validate() const;
};

// d rho/dt = -i[H(t), rho] + sum_i (L_i rho L_i^+ - {L_i^+ L_i, rho}/2).
DensityMatrix liouvillian_apply(const DensityMatrix& rho, const SystemParams& p, double t);

struct MasterRecord {
  double time = 0.0;
  DensityMatrix rho;
};

struct MasterRun {
  std::vector<MasterRecord> records;
  // Largest trace correction applied in a single step (before renormalizing).
  double max_trace_drift = 0.0;
};

// Classic RK4 with fixed step. Each step re-symmetrizes rho and renormalizes the
// trace; a per-step trace drift above 1e-6 raises StepTooLarge.
MasterRun run_master(const SystemParams& p, const MasterConfig& cfg, const DensityMatrix& initial);

struct RhoStats {
  double n_mean = 0.0;
  double n2_mean = 0.0;
  double variance = 0.0;
  std::optional<double> q;  // empty when n_mean < 1e-12
};

RhoStats rho_stats(const DensityMatrix& rho);

}  // namespace kerrsim
