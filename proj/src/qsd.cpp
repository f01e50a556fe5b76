#include "kerrsim/qsd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "kerrsim/error.hpp"

namespace kerrsim {

namespace {

// Increment norm above which a step is rejected.
constexpr double kMaxIncrement = 0.3;
// Stability fraction of the explicit part for the integrating-factor scheme
// (classical RK4 is stable up to |lambda dt| ~ 2.8 on the imaginary axis).
constexpr double kExponentialCourant = 0.5;
constexpr double kEulerCourant = 0.05;
// Populations below this at the ends of the occupied range are dropped.
constexpr double kDropPopulation = 1e-32;
// A step couples at most four neighbouring levels (four drift stages).
constexpr int kWindowMargin = 5;

double vec_norm(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const auto& c : v) s += std::norm(c);
  return std::sqrt(s);
}

[[noreturn]] void throw_step_too_large(double t, double total, double ham, double diss,
                                       double noise) {
  const char* dominant = "hamiltonian";
  double best = ham;
  if (diss > best) {
    best = diss;
    dominant = "dissipation";
  }
  if (noise > best) dominant = "noise";
  std::ostringstream os;
  os << "step too large at t=" << t << ": |dpsi|=" << total << " (hamiltonian " << ham
     << ", dissipation " << diss << ", noise " << noise << "); dominant term: " << dominant;
  throw StepTooLarge(os.str());
}

// Separate stream for Brownian-bridge midpoints, so refinement never shifts
// the main noise sequence.
constexpr std::uint64_t kBridgeStream = 0x6A09E667F3BCC909ULL;

// Splits the increments over [t, t + h] into the two halves of the same path.
std::pair<WienerPair, WienerPair> bridge_split(const WienerPair& w, double h, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double s = std::sqrt(h / 8.0);
  const auto half = [&](cplx total) {
    const double g1 = gauss(rng);
    const double g2 = gauss(rng);
    return 0.5 * total + cplx(s * g1, s * g2);
  };
  const cplx m1 = half(w.dxi1);
  const cplx m2 = half(w.dxi2);
  return {WienerPair{m1, m2}, WienerPair{w.dxi1 - m1, w.dxi2 - m2}};
}

void advance(QsdStepper& stepper, FockVector& psi, double t, const WienerPair& w, int lvl,
             int max_level, Rng& bridge) {
  if (stepper.step(psi, t, w, lvl, lvl >= max_level)) return;
  const double h = std::ldexp(stepper.dt(), -lvl);
  const auto [first, second] = bridge_split(w, h, bridge);
  advance(stepper, psi, t, first, lvl + 1, max_level, bridge);
  advance(stepper, psi, t + 0.5 * h, second, lvl + 1, max_level, bridge);
}

}  // namespace

std::string_view to_string(QsdScheme s) {
  return s == QsdScheme::euler_maruyama ? "euler_maruyama" : "exponential_rk4";
}

QsdScheme qsd_scheme_from_string(std::string_view name) {
  if (name == "euler_maruyama") return QsdScheme::euler_maruyama;
  if (name == "exponential_rk4") return QsdScheme::exponential_rk4;
  throw InvalidParameter("scheme", "expected 'euler_maruyama' or 'exponential_rk4', got '" +
                                       std::string(name) + "'");
}

// ---- TrajectoryConfig --------------------------------------------------------

void TrajectoryConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt", "must be > 0");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidParameter("t_end", "must be >= 0");
  if (dim < 2) throw InvalidParameter("dim", "must be >= 2");
  if (!(tail_threshold > 0.0)) throw InvalidParameter("tail_threshold", "must be > 0");
  if (noise_substeps < 1) throw InvalidParameter("noise_substeps", "must be >= 1");
  if (max_refinement < 0 || max_refinement > 30) throw InvalidParameter("max_refinement", "must be in [0, 30]");
  const auto check_grid = [&](const std::vector<double>& times, const char* name) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double t = times[i];
      if (t < -1e-9 || t > t_end + 1e-9) {
        throw InvalidParameter(name, "time " + std::to_string(t) + " outside [0, t_end]");
      }
      if (i > 0 && !(t > times[i - 1])) throw InvalidParameter(name, "times must be strictly increasing");
      const double k = std::round(t / dt);
      if (std::abs(k * dt - t) > 1e-9) {
        throw InvalidParameter(name, "time " + std::to_string(t) + " is not a multiple of dt");
      }
    }
  };
  check_grid(record_times, "record_times");
  check_grid(snapshot_times, "snapshot_times");
  for (double s : snapshot_times) {
    const bool found = std::any_of(record_times.begin(), record_times.end(),
                                   [&](double r) { return std::abs(r - s) <= 1e-9; });
    if (!found) throw InvalidParameter("snapshot_times", "each snapshot time must be a record time");
  }
}

std::vector<std::int64_t> TrajectoryConfig::record_steps() const {
  std::vector<std::int64_t> steps;
  steps.reserve(record_times.size());
  for (double t : record_times) steps.push_back(static_cast<std::int64_t>(std::llround(t / dt)));
  return steps;
}

std::int64_t TrajectoryConfig::total_steps() const {
  return static_cast<std::int64_t>(std::llround(t_end / dt));
}

// ---- noise -------------------------------------------------------------------

WienerPair draw_wiener(Rng& rng, double dt) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double s = std::sqrt(0.5 * dt);
  const double g1 = gauss(rng);
  const double g2 = gauss(rng);
  const double g3 = gauss(rng);
  const double g4 = gauss(rng);
  return WienerPair{cplx(s * g1, s * g2), cplx(s * g3, s * g4)};
}

// ---- reference step ----------------------------------------------------------

FockVector qsd_step(const FockVector& psi, const SystemParams& p, double t, double dt,
                    const WienerPair& w) {
  const int d = psi.dim();
  const BandedOperator h = hamiltonian_at(p, t, d);
  const LindbladPair ls = lindblad_ops(p, d);

  std::vector<cplx> ham(static_cast<std::size_t>(d));
  std::vector<cplx> diss(static_cast<std::size_t>(d));
  std::vector<cplx> noise(static_cast<std::size_t>(d));

  const FockVector hpsi = apply(h, psi);
  for (int n = 0; n < d; ++n) ham[static_cast<std::size_t>(n)] = cplx(0.0, -dt) * hpsi[n];

  const auto add_channel = [&](const BandedOperator& l, cplx dxi) {
    const cplx mean_l = expect(l, psi);
    const cplx mean_ld = std::conj(mean_l);
    const FockVector lpsi = apply(l, psi);
    const FockVector ldlpsi = apply(l.adjoint(), lpsi);
    for (int n = 0; n < d; ++n) {
      const auto i = static_cast<std::size_t>(n);
      diss[i] += -0.5 * dt * (ldlpsi[n] - 2.0 * mean_ld * lpsi[n] + mean_l * mean_ld * psi[n]);
      noise[i] += (lpsi[n] - mean_l * psi[n]) * dxi;
    }
  };
  add_channel(ls.l1, w.dxi1);
  if (ls.l2_active) add_channel(ls.l2, w.dxi2);

  std::vector<cplx> total(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < total.size(); ++i) total[i] = ham[i] + diss[i] + noise[i];
  const double inc = vec_norm(total);
  if (!std::isfinite(inc)) throw NumericError("non-finite increment at t=" + std::to_string(t));
  if (inc >= kMaxIncrement) throw_step_too_large(t, inc, vec_norm(ham), vec_norm(diss), vec_norm(noise));

  FockVector out = psi;
  for (int n = 0; n < d; ++n) out[n] += total[static_cast<std::size_t>(n)];
  out.normalize();
  return out;
}

// ---- QsdStepper --------------------------------------------------------------

QsdStepper::QsdStepper(const SystemParams& p, int dim, double dt, QsdScheme scheme)
    : p_(p), dim_(dim), dt_(dt), scheme_(scheme) {
  p.validate();
  if (dim < 2) throw InvalidDimension("stepper needs dimension >= 2");
  if (!(dt > 0.0)) throw InvalidParameter("dt", "must be > 0");
  const auto d = static_cast<std::size_t>(dim);
  sqrt_up_.resize(d);
  lambda_.resize(d);
  const double nb = p.n_bath;
  for (int n = 0; n < dim; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const double nn = n;
    sqrt_up_[i] = std::sqrt(nn + 1.0);
    // a a^+ of the truncated space vanishes on the top level.
    const double up = n + 1 < dim ? nn + 1.0 : 0.0;
    lambda_[i] = cplx(-0.5 * ((nb + 1.0) * nn + nb * up),
                      -(p.detuning * nn + p.chi * nn * nn));
  }
  level(0);
  for (auto* v : {&k1_, &k2_, &k3_, &k4_, &stage_, &noise_, &work_}) v->assign(d, cplx{});
}

const QsdStepper::Level& QsdStepper::level(int k) {
  while (static_cast<int>(levels_.size()) <= k) {
    Level lv;
    lv.h = std::ldexp(dt_, -static_cast<int>(levels_.size()));
    if (scheme_ == QsdScheme::exponential_rk4) {
      lv.exp_full.resize(lambda_.size());
      lv.exp_half.resize(lambda_.size());
      for (std::size_t i = 0; i < lambda_.size(); ++i) {
        lv.exp_full[i] = std::exp(lambda_[i] * lv.h);
        lv.exp_half[i] = std::exp(lambda_[i] * (0.5 * lv.h));
      }
    }
    levels_.push_back(std::move(lv));
  }
  return levels_[static_cast<std::size_t>(k)];
}

QsdStepper::Expectations QsdStepper::moments(const std::vector<cplx>& y) const {
  double n2 = 0.0;
  cplx a{};
  for (int n = lo_; n < hi_; ++n) {
    const auto i = static_cast<std::size_t>(n);
    n2 += std::norm(y[i]);
    a += std::conj(y[i]) * y[i + 1] * sqrt_up_[i];
  }
  n2 += std::norm(y[static_cast<std::size_t>(hi_)]);
  return {a / n2, n2};
}

void QsdStepper::drift_nonlinear(const std::vector<cplx>& y, double t,
                                 std::vector<cplx>& out) const {
  const Expectations m = moments(y);
  const double nb = p_.n_bath;
  const cplx f = p_.drive(t);
  const cplx minus_i(0.0, -1.0);
  const cplx c_up = minus_i * f + nb * m.a;                                  // on a^+ y
  const cplx c_down = minus_i * std::conj(f) + (nb + 1.0) * std::conj(m.a);  // on a y
  cplx c0 = -0.5 * (2.0 * nb + 1.0) * std::norm(m.a);
  if (scheme_ == QsdScheme::exponential_rk4) {
    // Global phase gauge: H_drive -> H_drive - <H_drive>. Leaves the ray and
    // every observable unchanged and keeps the increment free of the pure
    // phase rotation 2 Re(f^* <a>) dt.
    c0 += cplx(0.0, 2.0 * (std::conj(f) * m.a).real());
  }
  const auto lo = static_cast<std::size_t>(lo_);
  const auto hi = static_cast<std::size_t>(hi_);
  if (lo == hi) {
    out[lo] = c0 * y[lo];
    return;
  }
  out[lo] = c_down * sqrt_up_[lo] * y[lo + 1] + c0 * y[lo];
  for (std::size_t i = lo + 1; i < hi; ++i) {
    out[i] = c_up * sqrt_up_[i - 1] * y[i - 1] + c_down * sqrt_up_[i] * y[i + 1] + c0 * y[i];
  }
  out[hi] = c_up * sqrt_up_[hi - 1] * y[hi - 1] + c0 * y[hi];
}

void QsdStepper::noise_increment(const std::vector<cplx>& y, const WienerPair& w,
                                 std::vector<cplx>& out) const {
  const Expectations m = moments(y);
  const double nb = p_.n_bath;
  const cplx g1 = std::sqrt(nb + 1.0) * w.dxi1;
  const cplx g2 = std::sqrt(nb) * w.dxi2;
  const cplx a = m.a;
  const cplx ad = std::conj(m.a);
  for (int n = lo_; n <= hi_; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const cplx lower = n < hi_ ? sqrt_up_[i] * y[i + 1] : cplx{};
    const cplx raise = n > lo_ ? sqrt_up_[i - 1] * y[i - 1] : cplx{};
    out[i] = g1 * (lower - a * y[i]) + g2 * (raise - ad * y[i]);
  }
}

void QsdStepper::report_increment(double increment_norm, const std::vector<cplx>& y, double t,
                                  const WienerPair& w, double h) const {
  // Recompute the parts separately to name the dominant one.
  const int d = dim_;
  const cplx f = p_.drive(t);
  std::vector<cplx> ham(static_cast<std::size_t>(d)), diss(static_cast<std::size_t>(d));
  const Expectations m = moments(y);
  const double nb = p_.n_bath;
  const bool exact_diagonal = scheme_ == QsdScheme::exponential_rk4;
  for (int n = lo_; n <= hi_; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const cplx lower = n < hi_ ? sqrt_up_[i] * y[i + 1] : cplx{};
    const cplx raise = n > lo_ ? sqrt_up_[i - 1] * y[i - 1] : cplx{};
    const double energy = exact_diagonal ? 0.0 : -lambda_[i].imag();
    const double decay = exact_diagonal ? 0.0 : lambda_[i].real();
    ham[i] = cplx(0.0, -h) * (energy * y[i] + f * raise + std::conj(f) * lower);
    diss[i] = h * (decay * y[i] + nb * m.a * raise + (nb + 1.0) * std::conj(m.a) * lower -
                   0.5 * (2.0 * nb + 1.0) * std::norm(m.a) * y[i]);
  }
  std::vector<cplx> noise(static_cast<std::size_t>(d));
  noise_increment(y, w, noise);
  throw_step_too_large(t, increment_norm, vec_norm(ham), vec_norm(diss), vec_norm(noise));
}

double QsdStepper::step_euler(const std::vector<cplx>& y, double t, const WienerPair& w, double h) {
  drift_nonlinear(y, t, k1_);
  noise_increment(y, w, noise_);
  double inc2 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const cplx dy = (lambda_[i] * y[i] + k1_[i]) * h + noise_[i];
    inc2 += std::norm(dy);
    stage_[i] = y[i] + dy;
  }
  return std::sqrt(inc2);
}

double QsdStepper::step_exponential(const std::vector<cplx>& y, double t, const WienerPair& w,
                                    const Level& lv) {
  const double h = lv.h;
  const auto& ef = lv.exp_full;
  const auto& eh = lv.exp_half;
  const auto lo = static_cast<std::size_t>(lo_);
  const auto hi = static_cast<std::size_t>(hi_);

  drift_nonlinear(y, t, k1_);
  for (std::size_t i = lo; i <= hi; ++i) stage_[i] = eh[i] * (y[i] + 0.5 * h * k1_[i]);
  drift_nonlinear(stage_, t + 0.5 * h, k2_);
  for (std::size_t i = lo; i <= hi; ++i) stage_[i] = eh[i] * y[i] + 0.5 * h * k2_[i];
  drift_nonlinear(stage_, t + 0.5 * h, k3_);
  for (std::size_t i = lo; i <= hi; ++i) stage_[i] = ef[i] * y[i] + h * eh[i] * k3_[i];
  drift_nonlinear(stage_, t + h, k4_);
  noise_increment(y, w, noise_);

  double inc2 = 0.0;
  const double h6 = h / 6.0;
  const double h3 = h / 3.0;
  for (std::size_t i = lo; i <= hi; ++i) {
    const cplx free = ef[i] * y[i];
    const cplx next = ef[i] * (y[i] + h6 * k1_[i] + noise_[i]) + h3 * eh[i] * (k2_[i] + k3_[i]) + h6 * k4_[i];
    inc2 += std::norm(next - free);
    stage_[i] = next;
  }
  return std::sqrt(inc2);
}

bool QsdStepper::step(FockVector& psi, double t, const WienerPair& w, int lvl, bool throw_on_reject) {
  if (psi.dim() != dim_) throw DimensionMismatch("stepper dimension does not match state");
  if (lvl < 0) throw InvalidParameter("level", "must be >= 0");
  const Level& lv = level(lvl);
  auto amps = psi.amps();
  const int last = dim_ - 1;
  if (scheme_ == QsdScheme::exponential_rk4) {
    // Work only on the occupied window plus room for the four couplings a
    // step can reach; levels trimmed from the ends are set to exactly zero.
    int lo = 0;
    while (lo < last && std::norm(amps[static_cast<std::size_t>(lo)]) < kDropPopulation) ++lo;
    int hi = last;
    while (hi > lo && std::norm(amps[static_cast<std::size_t>(hi)]) < kDropPopulation) --hi;
    for (int n = 0; n < lo; ++n) amps[static_cast<std::size_t>(n)] = cplx{};
    for (int n = hi + 1; n <= last; ++n) amps[static_cast<std::size_t>(n)] = cplx{};
    lo_ = std::max(0, lo - kWindowMargin);
    hi_ = std::min(last, hi + kWindowMargin);
  } else {
    lo_ = 0;
    hi_ = last;
  }
  std::vector<cplx>& y = work_;
  std::fill(y.begin(), y.end(), cplx{});
  std::copy(amps.begin() + lo_, amps.begin() + hi_ + 1, y.begin() + lo_);
  const double inc = scheme_ == QsdScheme::euler_maruyama ? step_euler(y, t, w, lv.h)
                                                          : step_exponential(y, t, w, lv);
  if (!std::isfinite(inc)) throw NumericError("non-finite amplitude at t=" + std::to_string(t));
  if (inc >= kMaxIncrement) {
    if (throw_on_reject) report_increment(inc, y, t, w, lv.h);
    return false;
  }
  double n2 = 0.0;
  for (int n = lo_; n <= hi_; ++n) n2 += std::norm(stage_[static_cast<std::size_t>(n)]);
  if (!std::isfinite(n2) || !(n2 > 0.0)) {
    throw NumericError("non-finite amplitude at t=" + std::to_string(t));
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (int n = lo_; n <= hi_; ++n) {
    amps[static_cast<std::size_t>(n)] = stage_[static_cast<std::size_t>(n)] * inv;
  }
  return true;
}

// ---- trajectories ------------------------------------------------------------

std::vector<TrajectoryRecord> run_trajectory(const SystemParams& p, const TrajectoryConfig& cfg,
                                             const FockVector& initial) {
  cfg.validate();
  p.validate();
  if (initial.dim() != cfg.dim) {
    throw DimensionMismatch("initial state dimension " + std::to_string(initial.dim()) +
                            " does not match configured dimension " + std::to_string(cfg.dim));
  }
  const std::vector<std::int64_t> rec_steps = cfg.record_steps();
  std::vector<bool> snap(rec_steps.size(), false);
  for (std::size_t r = 0; r < rec_steps.size(); ++r) {
    snap[r] = std::any_of(cfg.snapshot_times.begin(), cfg.snapshot_times.end(),
                          [&](double s) { return std::abs(s - cfg.record_times[r]) <= 1e-9; });
  }

  FockVector psi = initial;
  psi.normalize();
  QsdStepper stepper(p, cfg.dim, cfg.dt, cfg.scheme);
  Rng rng(cfg.seed);
  Rng bridge(cfg.seed ^ kBridgeStream);
  const double sub_dt = cfg.dt / cfg.noise_substeps;
  const std::int64_t total = cfg.total_steps();

  std::vector<TrajectoryRecord> records;
  records.reserve(rec_steps.size());
  std::size_t next = 0;
  for (std::int64_t s = 0;; ++s) {
    while (next < rec_steps.size() && rec_steps[next] == s) {
      TrajectoryRecord rec;
      rec.time = cfg.record_times[next];
      for (int n = 0; n < psi.dim(); ++n) {
        const double pn = std::norm(psi[n]);
        rec.n_mean += n * pn;
        rec.n2_mean += static_cast<double>(n) * n * pn;
      }
      rec.tail_pop = psi.tail_population();
      if (rec.tail_pop >= cfg.tail_threshold) {
        std::ostringstream os;
        os << "truncation overflow at t=" << rec.time << ": tail population " << rec.tail_pop
           << " >= " << cfg.tail_threshold << " (dim " << cfg.dim << ")";
        throw TruncationError(os.str(), rec.time);
      }
      if (snap[next]) rec.amps_snapshot = psi;
      records.push_back(std::move(rec));
      ++next;
    }
    if (s >= total) break;
    WienerPair w{};
    for (int k = 0; k < cfg.noise_substeps; ++k) {
      const WienerPair part = draw_wiener(rng, sub_dt);
      w.dxi1 += part.dxi1;
      w.dxi2 += part.dxi2;
    }
    advance(stepper, psi, s * cfg.dt, w, 0, cfg.max_refinement, bridge);
  }
  return records;
}

double default_dt(const SystemParams& p, int dim, QsdScheme scheme) {
  const double drive = 2.0 * (std::abs(p.omega1) + std::abs(p.omega2)) * std::sqrt(dim);
  if (scheme == QsdScheme::euler_maruyama) {
    const double rate = std::max(std::abs(p.detuning) + p.chi * (dim - 1.0) * (dim - 1.0) + drive,
                                 (p.n_bath + 1.0) * dim);
    return kEulerCourant / rate;
  }
  // The diagonal is exact; what remains explicit is the drive coupling and the
  // <L^+> L feedback, bounded by (2N+1) dim.
  const double rate = drive + (2.0 * p.n_bath + 1.0) * dim + 1.0;
  // The noise terms are only weakly first order in either scheme, so the
  // dissipative bound of the Euler rule stays in force.
  return std::min(kExponentialCourant / rate, kEulerCourant / ((p.n_bath + 1.0) * dim));
}

int default_dim(double n_peak) {
  const double n = std::max(0.0, n_peak);
  return static_cast<int>(std::ceil(n + 10.0 * std::sqrt(n) + 10.0));
}

}  // namespace kerrsim
