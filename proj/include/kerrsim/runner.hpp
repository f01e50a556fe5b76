#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kerrsim/classical.hpp"
#include "kerrsim/config.hpp"
#include "kerrsim/ensemble.hpp"
#include "kerrsim/master.hpp"
#include "kerrsim/wigner.hpp"

namespace kerrsim {

// Command-line overrides applied on top of a parsed configuration.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
};

// Name of the environment variable that overrides the worker count.
inline constexpr const char* kWorkersEnv = "KERRSIM_WORKERS";

// Applies overrides; the environment variable sits between the file and the
// command line. Throws ConfigError for a malformed variable.
RunConfig apply_overrides(RunConfig cfg, const RunOverrides& o);

// Trajectory settings with every "auto" resolved.
struct ResolvedTrajectory {
  TrajectoryConfig config;
  double n_peak_estimate = 0.0;
  FockVector initial{2};
};

// dim from the classical peak occupation, dt from the scheme's rate bound,
// shrunk so the record interval holds a whole number of steps. Snapshot
// phases become the latest phase + k 2pi/delta inside [0, t_end].
ResolvedTrajectory resolve_trajectory(const SystemParams& p, const TrajectorySection& t,
                                      const std::vector<double>& snapshot_phases);

EnsembleStats run_qsd(const SystemParams& p, const TrajectorySection& t, const EnsembleSection& e,
                      nlohmann::json* meta = nullptr);

struct ResolvedMaster {
  MasterConfig config;
  DensityMatrix initial{2};
  std::vector<double> snapshot_times;
};

ResolvedMaster resolve_master(const SystemParams& p, const MasterSection& m);

// Step size for the master equation RK4 at the given truncation.
double master_default_dt(const SystemParams& p, int dim);

// Master-equation records in the ensemble layout (zero standard errors,
// both variance columns equal).
EnsembleStats master_as_stats(const MasterRun& run);

struct SweepRow {
  double param = 0.0;
  double q_min = 0.0;
  double t_min = 0.0;
  double q_max = 0.0;
  int dim = 0;
};

std::vector<SweepRow> sweep_omega2(const RunConfig& base, const std::vector<double>& grid);
std::vector<SweepRow> sweep_noise(const RunConfig& base, const std::vector<double>& grid);

struct ScaleReport {
  double lambda = 1.0;
  SystemParams base;
  SystemParams scaled;
  std::vector<double> times;
  std::vector<double> q_base;
  std::vector<double> q_scaled;
  double max_abs_diff_last_period = 0.0;
  double max_abs_diff = 0.0;
  std::optional<double> classical_max_rel_error;
};

ScaleReport scale_check(const RunConfig& base, double lambda);

struct WignerSnapshot {
  double time = 0.0;
  DensityMatrix rho{2};
  WignerGrid grid;
  double integral = 0.0;
};

struct RunResult {
  Mode mode = Mode::qsd;
  std::optional<EnsembleStats> stats;
  std::optional<OutputFieldStats> output_field;
  std::vector<WignerSnapshot> wigner;
  std::vector<std::pair<double, DensityMatrix>> rho_snapshots;
  std::vector<ClassicalSample> classical;
  std::optional<LyapunovResult> lyapunov;
  std::vector<DuffingSample> duffing;
  double duffing_omega1 = 0.0;
  std::optional<PoincareSet> poincare;
  std::vector<SweepRow> sweep;
  std::optional<ScaleReport> scale;
  // Resolved settings (dimensions, steps, seeds) for run_meta.json.
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::string> warnings;
};

RunResult execute(const RunConfig& cfg);

// Writes the result files into cfg.output.dir. Everything except the wall
// time in run_meta.json is a function of the configuration alone.
void emit_outputs(const RunResult& r, const RunConfig& cfg, double wall_seconds);

}  // namespace kerrsim
