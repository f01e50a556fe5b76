#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kerrsim/fock.hpp"
#include "kerrsim/model.hpp"
#include "kerrsim/qsd.hpp"

namespace kerrsim {

struct EnsembleConfig {
  int m = 1;
  std::uint64_t base_seed = 0;
  int workers = 1;
  std::vector<double> accumulate_rho_at;  // must be record times of the trajectory config

  void validate() const;
};

// Seed of trajectory `index`: splitmix64 of base_seed + (index + 1) * 0x9E3779B97F4A7C15.
std::uint64_t trajectory_seed(std::uint64_t base_seed, std::uint64_t index);

struct EnsembleStats {
  std::vector<double> times;
  std::vector<double> n_mean;    // M(<n>)
  std::vector<double> var_rho;   // M(<n^2>) - M(<n>)^2
  std::vector<double> var_traj;  // M(<n^2> - <n>^2)
  std::vector<double> q_rho;     // NaN where undefined
  std::vector<double> q_traj;
  std::vector<double> stderr_n;  // standard error of n_mean
  std::vector<double> stderr_q_rho;  // delta-method standard error of q_rho
  std::map<double, DensityMatrix> rho_snapshots;
  int m = 0;
};

// Runs m trajectories from the vacuum. Results do not depend on the worker count.
EnsembleStats run_ensemble(const SystemParams& p, const TrajectoryConfig& tcfg,
                           const EnsembleConfig& ecfg);
// Same, from an arbitrary initial state.
EnsembleStats run_ensemble(const SystemParams& p, const TrajectoryConfig& tcfg,
                           const EnsembleConfig& ecfg, const FockVector& initial);

struct MandelQ {
  double value = 0.0;
  bool defined = false;         // false when n_mean < 1e-12
  bool below_minus_one = false;  // numerical violation of Q >= -1
};

// (variance - n_mean) / n_mean. Throws InvalidParameter for negative inputs.
MandelQ mandel_q(double n_mean, double variance);

// Average of |psi><psi| over the snapshots.
DensityMatrix accumulate_rho(std::span<const FockVector> snapshots);

struct OutputFieldParams {
  double gamma_abs = 1.0;
  double detector_eff = 1.0;
  double count_window = 0.0;

  void validate() const;
};

struct OutputFieldStats {
  std::vector<double> n_out;
  std::vector<double> q_i;
  std::optional<std::string> warning;
};

OutputFieldStats output_field_stats(const EnsembleStats& stats, const OutputFieldParams& ofp,
                                    const SystemParams& p);

struct QExtrema {
  double q_min = 0.0;
  double t_min = 0.0;
  double q_max = 0.0;
  double t_max = 0.0;
};

// Extrema of `q` over the last full modulation period [t_last - 2pi/delta, t_last],
// which must start at or after `transient`. Ties go to the earlier time.
QExtrema find_extrema(std::span<const double> times, std::span<const double> q,
                      const SystemParams& p, double transient = 5.0);
QExtrema find_extrema(const EnsembleStats& stats, const SystemParams& p, double transient = 5.0);

// Order-fixed pairwise summation.
double pairwise_sum(std::span<const double> values);

}  // namespace kerrsim
