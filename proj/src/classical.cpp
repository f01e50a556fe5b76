#include "kerrsim/classical.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>

#include "kerrsim/error.hpp"

namespace kerrsim {

namespace {

constexpr double kRwaCourant = 0.05;

void check_finite(cplx a, double t) {
  if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
    std::ostringstream os;
    os << "classical state diverged at t=" << t;
    throw DivergenceError(os.str(), t);
  }
}

void check_step(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt", "must be > 0");
}

cplx rk4_step(cplx a, const SystemParams& p, double t, double h) {
  const cplx k1 = rwa_rhs(a, p, t);
  const cplx k2 = rwa_rhs(a + 0.5 * h * k1, p, t + 0.5 * h);
  const cplx k3 = rwa_rhs(a + 0.5 * h * k2, p, t + 0.5 * h);
  const cplx k4 = rwa_rhs(a + h * k3, p, t + h);
  return a + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Linearized flow applied to a tangent vector v at alpha.
cplx tangent_rhs(cplx alpha, cplx v, const SystemParams& p) {
  const double n = std::norm(alpha);
  const cplx i(0.0, 1.0);
  return (-0.5 - i * (p.detuning + p.chi + 4.0 * p.chi * n)) * v - 2.0 * i * p.chi * alpha * alpha * std::conj(v);
}

// Step size for sections and exponents, from a pre-run of ten periods.
double auto_step(const SystemParams& p) {
  const double horizon = std::isfinite(p.period()) ? 10.0 * p.period() : 20.0;
  return rwa_default_dt(p, 1.5 * rwa_peak_occupation(p, std::max(horizon, 20.0)));
}

// Advance alpha by `steps` RK4 steps of size h from time t0.
cplx advance(cplx a, const SystemParams& p, double t0, double h, std::int64_t steps) {
  for (std::int64_t k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    a = rk4_step(a, p, t, h);
    check_finite(a, t + h);
  }
  return a;
}

}  // namespace

cplx rwa_rhs(cplx alpha, const SystemParams& p, double t) {
  const cplx i(0.0, 1.0);
  return -0.5 * alpha - i * (p.detuning + p.chi * (1.0 + 2.0 * std::norm(alpha))) * alpha - i * p.drive(t);
}

std::vector<ClassicalSample> integrate_rwa(const SystemParams& p, cplx alpha0, double t_end,
                                           double dt, int stride) {
  check_step(dt);
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidParameter("t_end", "must be >= 0");
  if (stride < 1) throw InvalidParameter("stride", "must be >= 1");
  const auto total = static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-9));
  const double h = total > 0 ? t_end / static_cast<double>(total) : dt;
  std::vector<ClassicalSample> out;
  out.reserve(static_cast<std::size_t>(total / stride + 2));
  cplx a = alpha0;
  out.push_back({0.0, a});
  for (std::int64_t k = 0; k < total; ++k) {
    const double t = static_cast<double>(k) * h;
    a = rk4_step(a, p, t, h);
    check_finite(a, t + h);
    if ((k + 1) % stride == 0 || k + 1 == total) out.push_back({static_cast<double>(k + 1) * h, a});
  }
  return out;
}

double rwa_default_dt(const SystemParams& p, double alpha_max_sq) {
  return kRwaCourant / (std::abs(p.detuning) + std::abs(p.chi) * (1.0 + 2.0 * alpha_max_sq) + 1.0);
}

double rwa_peak_occupation(const SystemParams& p, double t_end) {
  // Linear response bound on |alpha|: |Omega_1| + |Omega_2| over the damping 1/2.
  const double bound = 2.0 * (std::abs(p.omega1) + std::abs(p.omega2));
  const double dt = rwa_default_dt(p, bound * bound);
  double peak = 0.0;
  const auto total = static_cast<std::int64_t>(std::ceil(t_end / dt));
  cplx a{};
  for (std::int64_t k = 0; k < total; ++k) {
    const double t = static_cast<double>(k) * dt;
    a = rk4_step(a, p, t, dt);
    check_finite(a, t + dt);
    peak = std::max(peak, std::norm(a));
  }
  return peak;
}

void DuffingParams::validate() const {
  if (!(omega0 > 0.0) || !std::isfinite(omega0)) throw InvalidParameter("omega0", "must be > 0");
  if (!(omega1 > 0.0) || !std::isfinite(omega1)) throw InvalidParameter("omega1", "must be > 0");
  if (!(omega2 > 0.0) || !std::isfinite(omega2)) throw InvalidParameter("omega2", "must be > 0");
  if (!(gamma_abs > 0.0) || !std::isfinite(gamma_abs)) throw InvalidParameter("gamma_abs", "must be > 0");
  if (!std::isfinite(chi_abs)) throw InvalidParameter("chi_abs", "must be finite");
  if (!std::isfinite(drive1)) throw InvalidParameter("drive1", "must be finite");
  if (!std::isfinite(drive2)) throw InvalidParameter("drive2", "must be finite");
}

std::vector<std::string> DuffingParams::warnings() const {
  std::vector<std::string> w;
  if (omega0 < 100.0 * gamma_abs) {
    std::ostringstream os;
    os << "omega0/gamma = " << omega0 / gamma_abs << " is not large; the rotating-wave comparison is unreliable";
    w.push_back(os.str());
  }
  return w;
}

SystemParams DuffingParams::rwa_params() const {
  SystemParams p;
  p.chi = chi_abs / gamma_abs;
  p.detuning = (omega0 - omega1) / gamma_abs;
  p.omega1 = drive1 / gamma_abs;
  p.omega2 = drive2 / gamma_abs;
  p.delta_mod = (omega2 - omega1) / gamma_abs;
  p.gamma_abs = gamma_abs;
  return p;
}

std::vector<DuffingSample> integrate_duffing(const DuffingParams& dp, double e0, double edot0,
                                             double t_end, double dt, int stride) {
  dp.validate();
  check_step(dt);
  if (dt > 2.0 * std::numbers::pi / dp.omega0 / 50.0 * (1.0 + 1e-12)) {
    throw InvalidParameter("dt", "must resolve the natural period with at least 50 steps");
  }
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidParameter("t_end", "must be >= 0");
  if (stride < 1) throw InvalidParameter("stride", "must be >= 1");

  const double w0 = dp.omega0;
  const auto accel = [&](double t, double e, double v) {
    const double force = 4.0 * w0 * (dp.drive1 * std::cos(dp.omega1 * t) + dp.drive2 * std::cos(dp.omega2 * t));
    return -dp.gamma_abs * v - w0 * w0 * (1.0 + 2.0 * dp.chi_abs / w0 * (1.0 + 0.5 * e * e)) * e + force;
  };

  const auto total = static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-9));
  const double h = total > 0 ? t_end / static_cast<double>(total) : dt;
  std::vector<DuffingSample> out;
  out.reserve(static_cast<std::size_t>(total / stride + 2));
  double e = e0, v = edot0;
  out.push_back({0.0, e, v});
  for (std::int64_t k = 0; k < total; ++k) {
    const double t = static_cast<double>(k) * h;
    const double ke1 = v, kv1 = accel(t, e, v);
    const double ke2 = v + 0.5 * h * kv1, kv2 = accel(t + 0.5 * h, e + 0.5 * h * ke1, v + 0.5 * h * kv1);
    const double ke3 = v + 0.5 * h * kv2, kv3 = accel(t + 0.5 * h, e + 0.5 * h * ke2, v + 0.5 * h * kv2);
    const double ke4 = v + h * kv3, kv4 = accel(t + h, e + h * ke3, v + h * kv3);
    e += h / 6.0 * (ke1 + 2.0 * ke2 + 2.0 * ke3 + ke4);
    v += h / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4);
    if (!std::isfinite(e) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "Duffing state diverged at t=" << t + h;
      throw DivergenceError(os.str(), t + h);
    }
    if ((k + 1) % stride == 0 || k + 1 == total) out.push_back({static_cast<double>(k + 1) * h, e, v});
  }
  return out;
}

cplx demodulate(const DuffingSample& s, double omega1) {
  // E = A e^{-i w1 t} + c.c. with A = -alpha; the sign aligns the drive term with rwa_rhs.
  return -0.5 * cplx(s.e, s.edot / omega1) * std::polar(1.0, omega1 * s.t);
}

PoincareSet poincare(const SystemParams& p, cplx alpha0, double t0_phase, int n_points, int n_skip,
                     double dt) {
  p.validate();
  if (p.delta_mod == 0.0) throw InvalidParameter("delta_mod", "Poincare section undefined for delta = 0");
  if (n_points < 0) throw InvalidParameter("n_points", "must be >= 0");
  if (n_skip < 0) throw InvalidParameter("n_skip", "must be >= 0");
  const double period = std::abs(p.period());
  if (!(t0_phase >= 0.0) || t0_phase >= period) {
    throw InvalidParameter("t0_phase", "must lie in [0, 2pi/delta)");
  }
  if (dt <= 0.0) dt = auto_step(p);
  const auto per_period = static_cast<std::int64_t>(std::ceil(period / dt));
  const double h = period / static_cast<double>(per_period);

  PoincareSet set;
  set.phase = t0_phase;
  set.skipped_transient = n_skip;
  set.points.reserve(static_cast<std::size_t>(n_points));
  cplx a = alpha0;
  if (t0_phase > 0.0) {
    const auto lead = static_cast<std::int64_t>(std::ceil(t0_phase / h));
    a = advance(a, p, 0.0, t0_phase / static_cast<double>(lead), lead);
  }
  for (int k = 0; k < n_skip + n_points; ++k) {
    if (k >= n_skip) set.points.push_back(a);
    if (k + 1 == n_skip + n_points) break;
    a = advance(a, p, t0_phase + k * period, h, per_period);
  }
  return set;
}

LyapunovResult lyapunov_largest(const SystemParams& p, cplx alpha0, double t_total,
                                double renorm_interval, double dt) {
  p.validate();
  if (!(t_total > 0.0) || !std::isfinite(t_total)) throw InvalidParameter("t_total", "must be > 0");
  if (renorm_interval <= 0.0) renorm_interval = std::isfinite(p.period()) ? std::abs(p.period()) : 1.0;
  if (dt <= 0.0) dt = auto_step(p);
  const auto per_interval = static_cast<std::int64_t>(std::ceil(renorm_interval / dt));
  const double h = renorm_interval / static_cast<double>(per_interval);
  const auto intervals = std::max<std::int64_t>(1, std::llround(t_total / renorm_interval));

  LyapunovResult res;
  cplx a = alpha0;
  cplx v(1.0, 0.0);
  double log_sum = 0.0;
  for (std::int64_t j = 0; j < intervals; ++j) {
    for (std::int64_t k = 0; k < per_interval; ++k) {
      const double t = static_cast<double>(j) * renorm_interval + static_cast<double>(k) * h;
      const cplx a1 = rwa_rhs(a, p, t), v1 = tangent_rhs(a, v, p);
      const cplx a2s = a + 0.5 * h * a1, v2s = v + 0.5 * h * v1;
      const cplx a2 = rwa_rhs(a2s, p, t + 0.5 * h), v2 = tangent_rhs(a2s, v2s, p);
      const cplx a3s = a + 0.5 * h * a2, v3s = v + 0.5 * h * v2;
      const cplx a3 = rwa_rhs(a3s, p, t + 0.5 * h), v3 = tangent_rhs(a3s, v3s, p);
      const cplx a4s = a + h * a3, v4s = v + h * v3;
      const cplx a4 = rwa_rhs(a4s, p, t + h), v4 = tangent_rhs(a4s, v4s, p);
      a += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
      v += h / 6.0 * (v1 + 2.0 * v2 + 2.0 * v3 + v4);
      check_finite(a, t + h);
      check_finite(v, t + h);
    }
    const double len = std::abs(v);
    if (!(len > 0.0)) throw DivergenceError("tangent vector collapsed", (j + 1) * renorm_interval);
    log_sum += std::log(len);
    v /= len;
    res.trace.push_back(log_sum / (static_cast<double>(j + 1) * renorm_interval));
  }
  res.exponent = res.trace.back();
  return res;
}

}  // namespace kerrsim
