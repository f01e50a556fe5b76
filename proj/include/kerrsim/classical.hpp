#pragma once

#include <string>
#include <vector>

#include "kerrsim/fock.hpp"
#include "kerrsim/model.hpp"

namespace kerrsim {

// d alpha/dt of the rotating-wave mean-field equation (gamma = 1).
cplx rwa_rhs(cplx alpha, const SystemParams& p, double t);

struct ClassicalSample {
  double t = 0.0;
  cplx alpha;
};

// Fixed-step RK4 from t = 0. Keeps every `stride`-th step plus the final one.
// Raises DivergenceError on a non-finite state.
std::vector<ClassicalSample> integrate_rwa(const SystemParams& p, cplx alpha0, double t_end,
                                           double dt, int stride = 1);

// Step size keeping dt (|Delta| + chi (1 + 2 |alpha|^2) + 1) at 0.05.
double rwa_default_dt(const SystemParams& p, double alpha_max_sq);

// Peak |alpha|^2 of a short vacuum-started run, used to size the quantum
// truncation and the classical step.
double rwa_peak_occupation(const SystemParams& p, double t_end);

struct DuffingParams {
  double omega0 = 1000.0;
  double omega1 = 1000.0;
  double omega2 = 1000.0;
  double gamma_abs = 1.0;
  double chi_abs = 0.0;
  double drive1 = 0.0;
  double drive2 = 0.0;

  void validate() const;
  // Non-empty when omega0 is not far above gamma_abs.
  std::vector<std::string> warnings() const;
  // Rotating-frame parameters of the same oscillator.
  SystemParams rwa_params() const;
};

struct DuffingSample {
  double t = 0.0;
  double e = 0.0;
  double edot = 0.0;
};

// RK4 for E'' + gamma E' + w0^2 [1 + (2 chi/w0)(1 + E^2/2)] E = 4 w0 (O1 cos w1 t + O2 cos w2 t).
std::vector<DuffingSample> integrate_duffing(const DuffingParams& dp, double e0, double edot0,
                                             double t_end, double dt, int stride = 1);

// Slow amplitude at carrier omega1, in the sign convention of rwa_rhs.
cplx demodulate(const DuffingSample& s, double omega1);

struct PoincareSet {
  std::vector<cplx> points;  // (X, Y) = (Re alpha, Im alpha)
  double phase = 0.0;
  int skipped_transient = 0;
};

// alpha at t = t0_phase + k 2pi/delta for k = n_skip .. n_skip + n_points - 1.
// dt <= 0 picks a step from a short pre-run; the step is shrunk so each period
// holds an integer number of steps.
PoincareSet poincare(const SystemParams& p, cplx alpha0, double t0_phase, int n_points,
                     int n_skip = 50, double dt = 0.0);

struct LyapunovResult {
  double exponent = 0.0;
  std::vector<double> trace;  // running estimate after each renormalization
};

// Tangent-vector estimate of the largest exponent. renorm_interval <= 0 means
// one modulation period (or 1 when delta = 0).
LyapunovResult lyapunov_largest(const SystemParams& p, cplx alpha0, double t_total,
                                double renorm_interval = 0.0, double dt = 0.0);

}  // namespace kerrsim
