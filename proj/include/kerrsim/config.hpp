#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kerrsim/ensemble.hpp"
#include "kerrsim/model.hpp"
#include "kerrsim/qsd.hpp"

namespace kerrsim {

enum class Mode { qsd, master, classical, duffing, poincare, wigner, sweep_omega2, sweep_noise, scale_check };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view name);

// Optional numeric fields that accept "auto" are empty when automatic.
struct TrajectorySection {
  std::optional<double> dt;
  double t_end = 20.0;
  double record_interval = 0.05;
  std::optional<int> dim;
  double tail_threshold = 1e-6;
  QsdScheme scheme = QsdScheme::exponential_rk4;
  int noise_substeps = 1;
  int max_refinement = 8;
  // Start state: vacuum unless a coherent amplitude is given.
  std::optional<cplx> initial_alpha;

  bool operator==(const TrajectorySection&) const = default;
};

struct EnsembleSection {
  int m = 100;
  std::uint64_t base_seed = 1;
  int workers = 1;
  // Offsets within the modulation period; each resolves to the latest
  // offset + k 2pi/delta inside the run.
  std::vector<double> snapshot_phases;

  bool operator==(const EnsembleSection&) const = default;
};

struct MasterSection {
  std::optional<double> dt;
  double t_end = 10.0;
  double record_interval = 0.05;
  std::optional<int> dim;
  std::optional<cplx> initial_alpha;
  // Offsets within the modulation period, as for ensembles.
  std::vector<double> snapshot_phases;

  bool operator==(const MasterSection&) const = default;
};

struct ClassicalSection {
  cplx alpha0{};
  double t_end = 60.0;
  std::optional<double> dt;
  double record_interval = 0.05;
  bool lyapunov = false;
  double lyapunov_time = 1000.0;

  bool operator==(const ClassicalSection&) const = default;
};

struct DuffingSection {
  double omega0 = 1000.0;
  double omega1 = 1000.0;
  double omega2 = 1005.0;
  double gamma_abs = 1.0;
  double chi_abs = 0.0;
  double drive1 = 0.0;
  double drive2 = 0.0;
  double e0 = 0.0;
  double edot0 = 0.0;
  double t_end = 30.0;
  std::optional<double> dt;
  double record_interval = 0.05;

  bool operator==(const DuffingSection&) const = default;
};

struct PoincareSection {
  cplx alpha0{};
  double phase = 0.0;
  int n_points = 20000;
  int n_skip = 50;
  std::optional<double> dt;

  bool operator==(const PoincareSection&) const = default;
};

struct WignerSection {
  int n_r = 256;
  int n_theta = 180;
  std::optional<double> r_max;
  // Density matrix source: "qsd" (ensemble snapshots) or "master".
  std::string source = "qsd";

  bool operator==(const WignerSection&) const = default;
};

struct SweepSection {
  std::vector<double> grid;
  double transient = 5.0;
  // Which variance convention feeds Q_min: "rho" or "traj".
  std::string estimator = "rho";

  bool operator==(const SweepSection&) const = default;
};

struct ScaleSection {
  double lambda = 1.4142135623730951;
  // Replaces the transformed detuning of the scaled run when given.
  std::optional<double> scaled_detuning;
  double transient = 5.0;
  std::string estimator = "rho";
  bool classical = true;

  bool operator==(const ScaleSection&) const = default;
};

struct OutputFieldSection {
  double detector_eff = 1.0;
  double count_window = 0.0;

  bool operator==(const OutputFieldSection&) const = default;
};

struct OutputSection {
  std::string dir = "out";
  bool csv = true;
  bool json = true;

  bool operator==(const OutputSection&) const = default;
};

struct RunConfig {
  Mode mode = Mode::qsd;
  SystemParams params;
  std::optional<TrajectorySection> trajectory;
  std::optional<EnsembleSection> ensemble;
  std::optional<MasterSection> master;
  std::optional<ClassicalSection> classical;
  std::optional<DuffingSection> duffing;
  std::optional<PoincareSection> poincare;
  std::optional<WignerSection> wigner;
  std::optional<SweepSection> sweep;
  std::optional<ScaleSection> scale;
  std::optional<OutputFieldSection> output_field;
  OutputSection output;

  // Range checks and presence of the sections the mode needs.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

// Raises ConfigError (or InvalidParameter) naming the key at fault.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace kerrsim
