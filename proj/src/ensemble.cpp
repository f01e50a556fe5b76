#include "kerrsim/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "kerrsim/error.hpp"

namespace kerrsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TrajectoryOutput {
  std::vector<double> n;
  std::vector<double> n2;
  std::vector<FockVector> snapshots;  // in order of EnsembleConfig::accumulate_rho_at
};

struct Failure {
  std::size_t index;
  std::exception_ptr error;
};

[[noreturn]] void rethrow_with_index(const Failure& f, std::uint64_t seed) {
  const auto prefix = [&](const std::exception& e) {
    std::ostringstream os;
    os << "trajectory " << f.index << " (seed " << seed << ") failed: " << e.what();
    return os.str();
  };
  try {
    std::rethrow_exception(f.error);
  } catch (const TruncationError& e) {
    throw TruncationError(prefix(e), e.time());
  } catch (const StepTooLarge& e) {
    throw StepTooLarge(prefix(e));
  } catch (const NumericError& e) {
    throw NumericError(prefix(e));
  } catch (const ConfigError& e) {
    throw ConfigError(prefix(e));
  } catch (const Error& e) {
    throw Error(prefix(e));
  }
}

void add_outer(const FockVector& psi, DensityMatrix& acc) {
  const int d = psi.dim();
  int lo = 0;
  while (lo < d && psi[lo] == cplx{}) ++lo;
  int hi = d - 1;
  while (hi > lo && psi[hi] == cplx{}) --hi;
  for (int i = lo; i <= hi; ++i) {
    const cplx ci = psi[i];
    for (int j = lo; j <= hi; ++j) acc(i, j) += ci * std::conj(psi[j]);
  }
}

DensityMatrix pairwise_outer(std::span<const FockVector> s) {
  DensityMatrix acc(s.front().dim());
  if (s.size() <= 8) {
    for (const auto& psi : s) add_outer(psi, acc);
    return acc;
  }
  const std::size_t half = s.size() / 2;
  acc = pairwise_outer(s.first(half));
  acc += pairwise_outer(s.subspan(half));
  return acc;
}

}  // namespace

void EnsembleConfig::validate() const {
  if (m < 1) throw InvalidParameter("m", "trajectory count must be >= 1");
  if (workers < 1) throw InvalidParameter("workers", "must be >= 1");
}

std::uint64_t trajectory_seed(std::uint64_t base_seed, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = base_seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MandelQ mandel_q(double n_mean, double variance) {
  if (n_mean < 0.0 || std::isnan(n_mean)) throw InvalidParameter("n_mean", "must be >= 0");
  if (variance < 0.0 || std::isnan(variance)) throw InvalidParameter("variance", "must be >= 0");
  MandelQ q;
  if (n_mean < 1e-12) return q;
  q.defined = true;
  q.value = (variance - n_mean) / n_mean;
  q.below_minus_one = q.value < -1.0;
  return q;
}

DensityMatrix accumulate_rho(std::span<const FockVector> snapshots) {
  if (snapshots.empty()) throw InvalidParameter("snapshots", "cannot accumulate an empty set");
  const int d = snapshots.front().dim();
  for (const auto& s : snapshots) {
    if (s.dim() != d) throw DimensionMismatch("snapshots have different dimensions");
  }
  DensityMatrix rho = pairwise_outer(snapshots);
  rho *= 1.0 / static_cast<double>(snapshots.size());
  return rho;
}

EnsembleStats run_ensemble(const SystemParams& p, const TrajectoryConfig& tcfg,
                           const EnsembleConfig& ecfg) {
  return run_ensemble(p, tcfg, ecfg, FockVector::vacuum(tcfg.dim));
}

EnsembleStats run_ensemble(const SystemParams& p, const TrajectoryConfig& tcfg,
                           const EnsembleConfig& ecfg, const FockVector& initial) {
  ecfg.validate();
  p.validate();
  TrajectoryConfig base = tcfg;
  base.snapshot_times = ecfg.accumulate_rho_at;
  base.validate();

  const auto m = static_cast<std::size_t>(ecfg.m);
  const std::size_t n_rec = base.record_times.size();
  const std::size_t n_snap = base.snapshot_times.size();
  std::vector<TrajectoryOutput> outputs(m);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex failure_mutex;
  std::vector<Failure> failures;

  const auto worker = [&] {
    for (;;) {
      if (abort.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= m) return;
      try {
        TrajectoryConfig cfg = base;
        cfg.seed = trajectory_seed(ecfg.base_seed, i);
        std::vector<TrajectoryRecord> recs = run_trajectory(p, cfg, initial);
        TrajectoryOutput out;
        out.n.reserve(n_rec);
        out.n2.reserve(n_rec);
        for (auto& r : recs) {
          out.n.push_back(r.n_mean);
          out.n2.push_back(r.n2_mean);
          if (r.amps_snapshot) out.snapshots.push_back(std::move(*r.amps_snapshot));
        }
        outputs[i] = std::move(out);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        failures.push_back({i, std::current_exception()});
        abort.store(true);
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(ecfg.workers, ecfg.m));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (!failures.empty()) {
    const auto first = std::min_element(failures.begin(), failures.end(),
                                        [](const Failure& a, const Failure& b) { return a.index < b.index; });
    rethrow_with_index(*first, trajectory_seed(ecfg.base_seed, first->index));
  }

  EnsembleStats st;
  st.m = ecfg.m;
  st.times = base.record_times;
  const double inv_m = 1.0 / static_cast<double>(m);
  std::vector<double> col(m), col2(m), scratch(m);
  for (std::size_t r = 0; r < n_rec; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      col[i] = outputs[i].n[r];
      col2[i] = outputs[i].n2[r];
    }
    const double m1 = pairwise_sum(col) * inv_m;
    const double m2 = pairwise_sum(col2) * inv_m;
    for (std::size_t i = 0; i < m; ++i) scratch[i] = (col[i] - m1) * (col[i] - m1);
    const double ens_var = pairwise_sum(scratch) * inv_m;
    for (std::size_t i = 0; i < m; ++i) scratch[i] = col2[i] - col[i] * col[i];
    const double var_traj = std::max(0.0, pairwise_sum(scratch) * inv_m);
    const double var_rho = var_traj + ens_var;

    st.n_mean.push_back(m1);
    st.var_traj.push_back(var_traj);
    st.var_rho.push_back(var_rho);
    const MandelQ qr = mandel_q(std::max(0.0, m1), var_rho);
    const MandelQ qt = mandel_q(std::max(0.0, m1), var_traj);
    st.q_rho.push_back(qr.defined ? qr.value : kNaN);
    st.q_traj.push_back(qt.defined ? qt.value : kNaN);

    if (m > 1) {
      const double s11 = ens_var * static_cast<double>(m) / static_cast<double>(m - 1);
      st.stderr_n.push_back(std::sqrt(s11 * inv_m));
      if (qr.defined) {
        for (std::size_t i = 0; i < m; ++i) scratch[i] = (col2[i] - m2) * (col2[i] - m2);
        const double s22 = pairwise_sum(scratch) / static_cast<double>(m - 1);
        for (std::size_t i = 0; i < m; ++i) scratch[i] = (col[i] - m1) * (col2[i] - m2);
        const double s12 = pairwise_sum(scratch) / static_cast<double>(m - 1);
        const double g2 = 1.0 / m1;
        const double g1 = -m2 / (m1 * m1) - 1.0;
        const double var_q = (g1 * g1 * s11 + 2.0 * g1 * g2 * s12 + g2 * g2 * s22) * inv_m;
        st.stderr_q_rho.push_back(std::sqrt(std::max(0.0, var_q)));
      } else {
        st.stderr_q_rho.push_back(kNaN);
      }
    } else {
      st.stderr_n.push_back(0.0);
      st.stderr_q_rho.push_back(0.0);
    }
  }

  for (std::size_t s = 0; s < n_snap; ++s) {
    std::vector<FockVector> snaps;
    snaps.reserve(m);
    for (auto& out : outputs) snaps.push_back(std::move(out.snapshots[s]));
    st.rho_snapshots.emplace(base.snapshot_times[s], accumulate_rho(snaps));
  }
  return st;
}

void OutputFieldParams::validate() const {
  if (!(gamma_abs > 0.0)) throw InvalidParameter("gamma_abs", "must be > 0");
  if (!(detector_eff > 0.0 && detector_eff <= 1.0)) throw InvalidParameter("detector_eff", "must be in (0, 1]");
  if (!(count_window >= 0.0)) throw InvalidParameter("count_window", "must be >= 0");
}

OutputFieldStats output_field_stats(const EnsembleStats& stats, const OutputFieldParams& ofp,
                                    const SystemParams& p) {
  ofp.validate();
  OutputFieldStats out;
  const double scale = 2.0 * ofp.gamma_abs;
  for (std::size_t i = 0; i < stats.n_mean.size(); ++i) {
    out.n_out.push_back(scale * stats.n_mean[i]);
    out.q_i.push_back(scale * ofp.detector_eff * ofp.count_window * stats.q_rho[i]);
  }
  const double period_abs = p.period() / ofp.gamma_abs;
  if (ofp.count_window >= 0.1 * period_abs) {
    std::ostringstream os;
    os << "count window " << ofp.count_window << " is not short against the modulation period "
       << period_abs;
    out.warning = os.str();
  }
  return out;
}

QExtrema find_extrema(std::span<const double> times, std::span<const double> q,
                      const SystemParams& p, double transient) {
  if (times.size() != q.size()) throw DimensionMismatch("times and q series differ in length");
  if (times.empty()) throw InvalidParameter("stats", "empty time series");
  const double t_last = times.back();
  const double period = p.period();
  const double start = std::isfinite(period) ? t_last - period : transient;
  if (start < transient - 1e-9) {
    std::ostringstream os;
    os << "insufficient coverage: need a full period " << period << " after t=" << transient
       << ", series ends at " << t_last;
    throw InvalidParameter("stats", os.str());
  }
  QExtrema ex;
  bool any = false;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < start - 1e-9 || std::isnan(q[i])) continue;
    if (!any) {
      ex = {q[i], times[i], q[i], times[i]};
      any = true;
      continue;
    }
    if (q[i] < ex.q_min) {
      ex.q_min = q[i];
      ex.t_min = times[i];
    }
    if (q[i] > ex.q_max) {
      ex.q_max = q[i];
      ex.t_max = times[i];
    }
  }
  if (!any) throw InvalidParameter("stats", "no defined Q values in the last period");
  return ex;
}

QExtrema find_extrema(const EnsembleStats& stats, const SystemParams& p, double transient) {
  return find_extrema(stats.times, stats.q_rho, p, transient);
}

}  // namespace kerrsim
