#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "kerrsim/fock.hpp"
#include "kerrsim/model.hpp"

namespace kerrsim {

enum class QsdScheme {
  // Plain Euler-Maruyama on the full drift, then renormalization.
  euler_maruyama,
  // Integrating-factor RK4: the diagonal generator (Kerr, detuning and the
  // diagonal damping) is propagated exactly, the drive and the state-dependent
  // drift by classical RK4, and the noise enters as an Ito Euler increment
  // at the start of the step. Then renormalization.
  exponential_rk4,
};

std::string_view to_string(QsdScheme s);
QsdScheme qsd_scheme_from_string(std::string_view name);

struct TrajectoryConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  std::vector<double> record_times;   // sorted, within [0, t_end], multiples of dt
  std::vector<double> snapshot_times;  // subset of record_times where amplitudes are kept
  int dim = 2;
  std::uint64_t seed = 0;
  double tail_threshold = 1e-6;
  QsdScheme scheme = QsdScheme::exponential_rk4;
  // Each step sums this many Wiener increments of dt/noise_substeps. A run at
  // (dt, 2) and one at (dt/2, 1) with the same seed share the Brownian path.
  int noise_substeps = 1;
  // A step whose increment reaches the 0.3 limit is retaken as two half steps
  // on the same Brownian path (bridge-sampled midpoint), up to this many
  // halvings. 0 turns the limit into an immediate StepTooLarge.
  int max_refinement = 8;

  // Throws InvalidParameter on violated invariants.
  void validate() const;
  // Step indices of record_times (and whether each one carries a snapshot).
  std::vector<std::int64_t> record_steps() const;
  std::int64_t total_steps() const;
};

// Complex Wiener increments for the two Lindblad channels.
struct WienerPair {
  cplx dxi1;
  cplx dxi2;
};

using Rng = std::mt19937_64;

// dxi = sqrt(dt/2) (g1 + i g2) per channel, g standard normal.
WienerPair draw_wiener(Rng& rng, double dt);

struct TrajectoryRecord {
  double time = 0.0;
  double n_mean = 0.0;
  double n2_mean = 0.0;
  double tail_pop = 0.0;
  std::optional<FockVector> amps_snapshot;
};

// One Euler-Maruyama step of the diffusion equation from the generic banded
// operators, followed by renormalization. Reference implementation.
FockVector qsd_step(const FockVector& psi, const SystemParams& p, double t, double dt,
                    const WienerPair& w);

// Precomputed per-dimension kernels for repeated stepping. Not thread-safe;
// one instance per trajectory.
class QsdStepper {
 public:
  QsdStepper(const SystemParams& p, int dim, double dt, QsdScheme scheme);

  // Advances psi from t to t + dt in place and renormalizes. Raises
  // StepTooLarge, naming the dominant term, when |dpsi| >= 0.3.
  void step(FockVector& psi, double t, const WienerPair& w) { step(psi, t, w, 0, true); }

  // Step of size dt / 2^level. With throw_on_reject false an oversized
  // increment leaves psi untouched and returns false.
  bool step(FockVector& psi, double t, const WienerPair& w, int level, bool throw_on_reject);

  int dim() const noexcept { return dim_; }
  double dt() const noexcept { return dt_; }

 private:
  struct Expectations {
    cplx a;        // <a>, normalized
    double norm2;  // <psi|psi>
  };

  Expectations moments(const std::vector<cplx>& y) const;
  // out = nonlinear drift (drive + state-dependent dissipation terms) at time t.
  void drift_nonlinear(const std::vector<cplx>& y, double t, std::vector<cplx>& out) const;
  // out = noise increment sum_i (L_i - <L_i>) y dxi_i.
  void noise_increment(const std::vector<cplx>& y, const WienerPair& w,
                       std::vector<cplx>& out) const;
  struct Level {
    double h;
    std::vector<cplx> exp_full;  // exp(lambda h)
    std::vector<cplx> exp_half;  // exp(lambda h/2)
  };
  const Level& level(int k);

  // Both return the increment norm; the result is left in stage_.
  double step_euler(const std::vector<cplx>& y, double t, const WienerPair& w, double h);
  double step_exponential(const std::vector<cplx>& y, double t, const WienerPair& w, const Level& lv);
  [[noreturn]] void report_increment(double increment_norm, const std::vector<cplx>& y, double t,
                                     const WienerPair& w, double h) const;

  SystemParams p_;
  int dim_;
  double dt_;
  QsdScheme scheme_;
  int lo_ = 0;  // active window of the current step
  int hi_ = 0;
  std::vector<double> sqrt_up_;   // sqrt(n+1)
  std::vector<cplx> lambda_;      // diagonal generator
  std::vector<Level> levels_;     // levels_[k] has h = dt / 2^k
  std::vector<cplx> k1_, k2_, k3_, k4_, stage_, noise_, work_;
};

// Integrates one trajectory, emitting a record at each record time.
std::vector<TrajectoryRecord> run_trajectory(const SystemParams& p, const TrajectoryConfig& cfg,
                                             const FockVector& initial);

// Largest dt allowed for the scheme at the given truncation, from the fastest
// rates the explicit part of the step has to resolve.
double default_dt(const SystemParams& p, int dim, QsdScheme scheme);

// Truncation ceil(n + 10 sqrt(n) + 10) for a peak mean occupation n.
int default_dim(double n_peak);

}  // namespace kerrsim
