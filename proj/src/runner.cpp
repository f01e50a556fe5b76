#include "kerrsim/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "kerrsim/error.hpp"

namespace kerrsim {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

// Re-raises the active exception with `prefix` prepended, keeping its family.
[[noreturn]] void rethrow_with_context(const std::string& prefix) {
  try {
    throw;
  } catch (const TruncationError& e) {
    throw TruncationError(prefix + e.what(), e.time());
  } catch (const StepTooLarge& e) {
    throw StepTooLarge(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Whole number of steps of size <= dt_max per interval; returns the step.
double fit_step(double interval, double dt_max, bool explicit_dt, const char* name) {
  const double per = std::max(1.0, std::ceil(interval / dt_max - 1e-9));
  const double dt = interval / per;
  if (explicit_dt && std::abs(dt - dt_max) > 1e-9 * dt_max) {
    throw InvalidParameter(name, "must divide the record interval into a whole number of steps");
  }
  return dt;
}

// Uniform record grid plus the snapshot times (resolved from phases), on the dt grid.
void build_grid(const SystemParams& p, double t_end, double interval, double dt,
                const std::vector<double>& phases, std::vector<double>& records,
                std::vector<double>& snapshots) {
  const auto per = static_cast<std::int64_t>(std::llround(interval / dt));
  const auto n_rec = static_cast<std::int64_t>(std::floor(t_end / interval + 1e-9));
  records.clear();
  for (std::int64_t k = 0; k <= n_rec; ++k) records.push_back(static_cast<double>(k * per) * dt);
  snapshots.clear();
  const double period = std::abs(p.period());
  for (double phase : phases) {
    double t = phase;
    if (std::isfinite(period)) {
      const double k = std::floor((t_end - phase) / period + 1e-9);
      if (k < 0) throw InvalidParameter("snapshot_phases", "phase " + fmt(phase) + " lies beyond t_end");
      t = phase + k * period;
    } else if (phase > t_end + 1e-9) {
      throw InvalidParameter("snapshot_phases", "phase " + fmt(phase) + " lies beyond t_end");
    }
    t = static_cast<double>(std::llround(t / dt)) * dt;
    if (t > t_end + 1e-9) t -= dt;
    const auto it = std::find_if(records.begin(), records.end(), [&](double r) { return std::abs(r - t) <= 1e-9; });
    if (it != records.end()) {
      t = *it;
    } else {
      records.insert(std::upper_bound(records.begin(), records.end(), t), t);
    }
    snapshots.push_back(t);
  }
  std::sort(snapshots.begin(), snapshots.end());
  snapshots.erase(std::unique(snapshots.begin(), snapshots.end()), snapshots.end());
}

double occupation_estimate(const SystemParams& p, double t_end, std::optional<cplx> alpha0) {
  const double n0 = alpha0 ? std::norm(*alpha0) : 0.0;
  const double drive = std::abs(p.omega1) + std::abs(p.omega2) > 0.0
                           ? rwa_peak_occupation(p, std::max(t_end, 1.0))
                           : 0.0;
  return std::max(drive, n0) + p.n_bath;
}

const std::vector<double>& q_series(const EnsembleStats& s, const std::string& estimator) {
  return estimator == "traj" ? s.q_traj : s.q_rho;
}

json params_json(const SystemParams& p) {
  return {{"chi", p.chi},
          {"detuning", p.detuning},
          {"omega1", json::array({p.omega1.real(), p.omega1.imag()})},
          {"omega2", json::array({p.omega2.real(), p.omega2.imag()})},
          {"delta_mod", p.delta_mod},
          {"n_bath", p.n_bath},
          {"gamma_abs", p.gamma_abs}};
}

std::vector<SweepRow> run_sweep(const RunConfig& base, const std::vector<double>& grid, bool noise) {
  if (!base.trajectory || !base.ensemble) throw ConfigError("sweeps need trajectory and ensemble sections");
  const double transient = base.sweep ? base.sweep->transient : 5.0;
  const std::string estimator = base.sweep ? base.sweep->estimator : "rho";
  EnsembleSection ens = *base.ensemble;
  ens.snapshot_phases.clear();
  std::vector<SweepRow> rows;
  for (double g : grid) {
    SystemParams p = base.params;
    if (noise) {
      p.n_bath = g;
    } else {
      p.omega2 = g;
    }
    try {
      json meta;
      const EnsembleStats st = run_qsd(p, *base.trajectory, ens, &meta);
      const QExtrema ex = find_extrema(st.times, q_series(st, estimator), p, transient);
      rows.push_back({g, ex.q_min, ex.t_min, ex.q_max, meta.at("dim").get<int>()});
    } catch (const Error&) {
      rethrow_with_context(std::string(noise ? "N" : "omega2") + " = " + fmt(g) + ": ");
    }
  }
  return rows;
}

json stats_meta(const EnsembleStats& st) {
  double peak = 0.0;
  for (double n : st.n_mean) peak = std::max(peak, n);
  return {{"records", st.times.size()}, {"m", st.m}, {"n_mean_peak", peak}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string indexed_name(const std::string& stem, const std::string& ext, std::size_t i) {
  return i == 0 ? stem + ext : stem + "_" + std::to_string(i + 1) + ext;
}

std::string rho_json(double time, const DensityMatrix& rho) {
  json elems = json::array();
  for (int i = 0; i < rho.dim(); ++i) {
    for (int j = 0; j < rho.dim(); ++j) {
      const cplx z = rho(i, j);
      elems.push_back(json::array({z.real(), z.imag()}));
    }
  }
  json j = {{"time", time}, {"dim", rho.dim()}, {"elements", elems}};
  return j.dump() + "\n";
}

}  // namespace

RunConfig apply_overrides(RunConfig cfg, const RunOverrides& o) {
  std::optional<int> workers;
  if (const char* env = std::getenv(kWorkersEnv); env && *env) {
    char* end = nullptr;
    const long w = std::strtol(env, &end, 10);
    if (*end != '\0' || w < 1 || w > 4096) {
      throw ConfigError(std::string(kWorkersEnv) + ": expected a positive integer, got \"" + env + "\"");
    }
    workers = static_cast<int>(w);
  }
  if (o.workers) {
    if (*o.workers < 1) throw InvalidParameter("workers", "must be >= 1");
    workers = o.workers;
  }
  if (cfg.ensemble) {
    if (workers) cfg.ensemble->workers = *workers;
    if (o.seed) cfg.ensemble->base_seed = *o.seed;
  }
  if (o.out_dir) cfg.output.dir = *o.out_dir;
  cfg.validate();
  return cfg;
}

ResolvedTrajectory resolve_trajectory(const SystemParams& p, const TrajectorySection& t,
                                      const std::vector<double>& snapshot_phases) {
  p.validate();
  ResolvedTrajectory r;
  r.n_peak_estimate = occupation_estimate(p, t.t_end, t.initial_alpha);
  TrajectoryConfig& c = r.config;
  c.dim = t.dim ? *t.dim : default_dim(r.n_peak_estimate);
  c.scheme = t.scheme;
  c.tail_threshold = t.tail_threshold;
  c.noise_substeps = t.noise_substeps;
  c.max_refinement = t.max_refinement;
  c.t_end = t.t_end;
  const double dt_max = t.dt ? *t.dt : default_dt(p, c.dim, t.scheme);
  c.dt = fit_step(t.record_interval, dt_max, t.dt.has_value(), "trajectory.dt");
  build_grid(p, t.t_end, t.record_interval, c.dt, snapshot_phases, c.record_times, c.snapshot_times);
  r.initial = t.initial_alpha ? make_coherent(*t.initial_alpha, c.dim) : FockVector::vacuum(c.dim);
  c.validate();
  return r;
}

EnsembleStats run_qsd(const SystemParams& p, const TrajectorySection& t, const EnsembleSection& e,
                      json* meta) {
  const ResolvedTrajectory rt = resolve_trajectory(p, t, e.snapshot_phases);
  EnsembleConfig ec;
  ec.m = e.m;
  ec.base_seed = e.base_seed;
  ec.workers = e.workers;
  ec.accumulate_rho_at = rt.config.snapshot_times;
  if (meta) {
    (*meta)["dim"] = rt.config.dim;
    (*meta)["dt"] = rt.config.dt;
    (*meta)["scheme"] = std::string(to_string(rt.config.scheme));
    (*meta)["n_peak_estimate"] = rt.n_peak_estimate;
    (*meta)["snapshot_times"] = rt.config.snapshot_times;
    (*meta)["base_seed"] = e.base_seed;
    (*meta)["seed_rule"] = "splitmix64(base_seed + (index + 1) * 0x9E3779B97F4A7C15)";
  }
  return run_ensemble(p, rt.config, ec, rt.initial);
}

double master_default_dt(const SystemParams& p, int dim) {
  return default_dt(p, dim, QsdScheme::euler_maruyama);
}

ResolvedMaster resolve_master(const SystemParams& p, const MasterSection& m) {
  p.validate();
  ResolvedMaster r;
  const double n_est = occupation_estimate(p, m.t_end, m.initial_alpha);
  MasterConfig& c = r.config;
  c.dim = m.dim ? *m.dim : default_dim(n_est);
  c.t_end = m.t_end;
  const double dt_max = m.dt ? *m.dt : master_default_dt(p, c.dim);
  c.dt = fit_step(m.record_interval, dt_max, m.dt.has_value(), "master.dt");
  build_grid(p, m.t_end, m.record_interval, c.dt, m.snapshot_phases, c.record_times, r.snapshot_times);
  r.initial = DensityMatrix::pure(m.initial_alpha ? make_coherent(*m.initial_alpha, c.dim)
                                                  : FockVector::vacuum(c.dim));
  c.validate();
  return r;
}

EnsembleStats master_as_stats(const MasterRun& run) {
  EnsembleStats st;
  st.m = 1;
  for (const auto& rec : run.records) {
    const RhoStats s = rho_stats(rec.rho);
    st.times.push_back(rec.time);
    st.n_mean.push_back(s.n_mean);
    st.var_rho.push_back(s.variance);
    st.var_traj.push_back(s.variance);
    const double q = s.q ? *s.q : std::numeric_limits<double>::quiet_NaN();
    st.q_rho.push_back(q);
    st.q_traj.push_back(q);
    st.stderr_n.push_back(0.0);
    st.stderr_q_rho.push_back(0.0);
  }
  return st;
}

std::vector<SweepRow> sweep_omega2(const RunConfig& base, const std::vector<double>& grid) {
  return run_sweep(base, grid, false);
}

std::vector<SweepRow> sweep_noise(const RunConfig& base, const std::vector<double>& grid) {
  return run_sweep(base, grid, true);
}

ScaleReport scale_check(const RunConfig& base, double lambda) {
  if (!base.trajectory || !base.ensemble) throw ConfigError("scale-check needs trajectory and ensemble sections");
  const ScaleSection sec = base.scale ? *base.scale : ScaleSection{};
  ScaleReport rep;
  rep.lambda = lambda;
  rep.base = base.params;
  rep.scaled = scale_params(base.params, lambda);
  if (sec.scaled_detuning) rep.scaled.detuning = *sec.scaled_detuning;

  EnsembleSection ens = *base.ensemble;
  ens.snapshot_phases.clear();
  TrajectorySection tb = *base.trajectory;
  TrajectorySection ts = tb;
  if (ts.dim) ts.dim = static_cast<int>(std::ceil(lambda * lambda * *ts.dim));
  if (ts.dt) ts.dt = *ts.dt / (lambda * lambda);
  if (ts.initial_alpha) ts.initial_alpha = lambda * *ts.initial_alpha;

  const EnsembleStats sb = run_qsd(rep.base, tb, ens);
  const EnsembleStats ss = run_qsd(rep.scaled, ts, ens);
  if (sb.times.size() != ss.times.size()) throw NumericError("scale-check runs produced different time grids");
  rep.times = sb.times;
  rep.q_base = q_series(sb, sec.estimator);
  rep.q_scaled = q_series(ss, sec.estimator);
  const double t_last = rep.times.empty() ? 0.0 : rep.times.back();
  const double period = std::abs(base.params.period());
  const double start = std::max(sec.transient, std::isfinite(period) ? t_last - period : sec.transient);
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    const double d = std::abs(rep.q_base[i] - rep.q_scaled[i]);
    if (std::isnan(d)) continue;
    rep.max_abs_diff = std::max(rep.max_abs_diff, d);
    if (rep.times[i] >= start - 1e-9) rep.max_abs_diff_last_period = std::max(rep.max_abs_diff_last_period, d);
  }

  if (sec.classical) {
    const double t_end = tb.t_end;
    const double n_peak = rwa_peak_occupation(rep.base, std::max(t_end, 1.0));
    const double dt = std::min(rwa_default_dt(rep.base, 1.5 * n_peak),
                               rwa_default_dt(rep.scaled, 1.5 * lambda * lambda * n_peak));
    const cplx a0 = tb.initial_alpha.value_or(cplx{});
    const auto cb = integrate_rwa(rep.base, a0, t_end, dt);
    const auto cs = integrate_rwa(rep.scaled, lambda * a0, t_end, dt);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < cb.size(); ++i) {
      err = std::max(err, std::abs(cs[i].alpha - lambda * cb[i].alpha));
      scale = std::max(scale, std::abs(lambda * cb[i].alpha));
    }
    rep.classical_max_rel_error = scale > 0.0 ? err / scale : err;
  }
  return rep;
}

RunResult execute(const RunConfig& cfg) {
  cfg.validate();
  RunResult r;
  r.mode = cfg.mode;
  const SystemParams& p = cfg.params;
  r.meta["regime_label"] = std::string(to_string(classify_regime(p)));

  const auto wigner_spec = [&](double n_peak) {
    WignerGridSpec spec;
    spec.n_r = cfg.wigner->n_r;
    spec.n_theta = cfg.wigner->n_theta;
    spec.r_max = cfg.wigner->r_max ? *cfg.wigner->r_max : default_wigner_rmax(n_peak);
    return spec;
  };

  switch (cfg.mode) {
    case Mode::qsd:
    case Mode::wigner: {
      if (cfg.mode == Mode::wigner && cfg.wigner->source == "master") {
        const ResolvedMaster rm = resolve_master(p, *cfg.master);
        const MasterRun run = run_master(p, rm.config, rm.initial);
        r.stats = master_as_stats(run);
        for (const auto& rec : run.records) {
          if (std::find(rm.snapshot_times.begin(), rm.snapshot_times.end(), rec.time) != rm.snapshot_times.end()) {
            r.rho_snapshots.emplace_back(rec.time, rec.rho);
          }
        }
        r.meta["dim"] = rm.config.dim;
        r.meta["dt"] = rm.config.dt;
        r.meta["max_trace_drift"] = run.max_trace_drift;
      } else {
        json meta;
        EnsembleStats st = run_qsd(p, *cfg.trajectory, *cfg.ensemble, &meta);
        for (const auto& [t, rho] : st.rho_snapshots) r.rho_snapshots.emplace_back(t, rho);
        r.meta.update(meta);
        r.stats = std::move(st);
      }
      r.meta["stats"] = stats_meta(*r.stats);
      if (cfg.mode == Mode::wigner) {
        double n_peak = r.meta["stats"]["n_mean_peak"].get<double>();
        const WignerGridSpec spec = wigner_spec(n_peak);
        json list = json::array();
        for (const auto& [t, rho] : r.rho_snapshots) {
          WignerSnapshot snap{t, rho, wigner_from_rho(rho, spec), 0.0};
          snap.integral = integrate_wigner(snap.grid);
          list.push_back({{"time", t}, {"integral", snap.integral}, {"max_imag_residue", snap.grid.max_imag_residue}});
          r.wigner.push_back(std::move(snap));
        }
        r.meta["wigner"] = {{"r_max", spec.r_max}, {"n_r", spec.n_r}, {"n_theta", spec.n_theta}, {"snapshots", list}};
      }
      if (cfg.output_field) {
        const OutputFieldParams ofp{p.gamma_abs, cfg.output_field->detector_eff, cfg.output_field->count_window};
        r.output_field = output_field_stats(*r.stats, ofp, p);
        if (r.output_field->warning) r.warnings.push_back(*r.output_field->warning);
      }
      break;
    }
    case Mode::master: {
      const ResolvedMaster rm = resolve_master(p, *cfg.master);
      const MasterRun run = run_master(p, rm.config, rm.initial);
      r.stats = master_as_stats(run);
      for (const auto& rec : run.records) {
        if (std::find(rm.snapshot_times.begin(), rm.snapshot_times.end(), rec.time) != rm.snapshot_times.end()) {
          r.rho_snapshots.emplace_back(rec.time, rec.rho);
        }
      }
      r.meta["dim"] = rm.config.dim;
      r.meta["dt"] = rm.config.dt;
      r.meta["max_trace_drift"] = run.max_trace_drift;
      r.meta["stats"] = stats_meta(*r.stats);
      break;
    }
    case Mode::classical: {
      const ClassicalSection& c = *cfg.classical;
      const double dt_max = c.dt ? *c.dt
                                 : rwa_default_dt(p, 1.5 * std::max(std::norm(c.alpha0),
                                                                    rwa_peak_occupation(p, std::max(c.t_end, 1.0))));
      const double dt = fit_step(c.record_interval, dt_max, c.dt.has_value(), "classical.dt");
      const int stride = static_cast<int>(std::llround(c.record_interval / dt));
      r.classical = integrate_rwa(p, c.alpha0, c.t_end, dt, stride);
      r.meta["dt"] = dt;
      if (c.lyapunov) {
        r.lyapunov = lyapunov_largest(p, c.alpha0, c.lyapunov_time, 0.0, c.dt.value_or(0.0));
        r.meta["lyapunov_exponent"] = r.lyapunov->exponent;
      }
      break;
    }
    case Mode::duffing: {
      const DuffingSection& d = *cfg.duffing;
      const DuffingParams dp{d.omega0, d.omega1, d.omega2, d.gamma_abs, d.chi_abs, d.drive1, d.drive2};
      for (const auto& w : dp.warnings()) r.warnings.push_back(w);
      const double dt_max = d.dt ? *d.dt : 2.0 * std::numbers::pi / d.omega0 / 100.0;
      const double dt = fit_step(d.record_interval, dt_max, d.dt.has_value(), "duffing.dt");
      const int stride = static_cast<int>(std::llround(d.record_interval / dt));
      r.duffing = integrate_duffing(dp, d.e0, d.edot0, d.t_end, dt, stride);
      r.duffing_omega1 = d.omega1;
      r.meta["dt"] = dt;
      r.meta["rwa_params"] = params_json(dp.rwa_params());
      break;
    }
    case Mode::poincare: {
      const PoincareSection& s = *cfg.poincare;
      const double period = std::abs(p.period());
      const double phase = std::isfinite(period) ? std::fmod(s.phase, period) : s.phase;
      r.poincare = poincare(p, s.alpha0, phase, s.n_points, s.n_skip, s.dt.value_or(0.0));
      r.meta["phase"] = phase;
      break;
    }
    case Mode::sweep_omega2:
    case Mode::sweep_noise: {
      r.sweep = run_sweep(cfg, cfg.sweep->grid, cfg.mode == Mode::sweep_noise);
      json rows = json::array();
      for (const auto& row : r.sweep) {
        rows.push_back({{"param", row.param}, {"q_min", row.q_min}, {"t_min", row.t_min}, {"q_max", row.q_max},
                        {"dim", row.dim}});
      }
      r.meta["rows"] = rows;
      r.meta["estimator"] = cfg.sweep->estimator;
      break;
    }
    case Mode::scale_check: {
      r.scale = scale_check(cfg, cfg.scale->lambda);
      r.meta["lambda"] = r.scale->lambda;
      r.meta["scaled_params"] = params_json(r.scale->scaled);
      r.meta["max_abs_diff_last_period"] = r.scale->max_abs_diff_last_period;
      r.meta["max_abs_diff"] = r.scale->max_abs_diff;
      if (r.scale->classical_max_rel_error) r.meta["classical_max_rel_error"] = *r.scale->classical_max_rel_error;
      break;
    }
  }
  return r;
}

void emit_outputs(const RunResult& r, const RunConfig& cfg, double wall_seconds) {
  const std::filesystem::path dir(cfg.output.dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

  if (cfg.output.csv) {
    if (r.stats) {
      const EnsembleStats& s = *r.stats;
      std::string out = "t,n_mean,stderr_n,var_rho,var_traj,q_rho,q_traj\n";
      for (std::size_t i = 0; i < s.times.size(); ++i) {
        out += fmt(s.times[i]) + "," + fmt(s.n_mean[i]) + "," + fmt(s.stderr_n[i]) + "," + fmt(s.var_rho[i]) + "," +
               fmt(s.var_traj[i]) + "," + fmt(s.q_rho[i]) + "," + fmt(s.q_traj[i]) + "\n";
      }
      write_file(dir / "stats.csv", out);
      if (r.output_field) {
        std::string of = "t,n_out,q_i\n";
        for (std::size_t i = 0; i < s.times.size(); ++i) {
          of += fmt(s.times[i]) + "," + fmt(r.output_field->n_out[i]) + "," + fmt(r.output_field->q_i[i]) + "\n";
        }
        write_file(dir / "output_field.csv", of);
      }
    }
    for (std::size_t k = 0; k < r.wigner.size(); ++k) {
      const WignerGrid& g = r.wigner[k].grid;
      std::string out = "x,y,w\n";
      out.reserve(out.size() + g.values.size() * 48);
      for (int i = 0; i < g.n_r(); ++i) {
        for (int j = 0; j < g.n_theta(); ++j) out += fmt(g.x(i, j)) + "," + fmt(g.y(i, j)) + "," + fmt(g.at(i, j)) + "\n";
      }
      write_file(dir / indexed_name("wigner", ".csv", k), out);
    }
    if (!r.classical.empty()) {
      std::string out = "t,x,y\n";
      for (const auto& s : r.classical) out += fmt(s.t) + "," + fmt(s.alpha.real()) + "," + fmt(s.alpha.imag()) + "\n";
      write_file(dir / "classical.csv", out);
    }
    if (r.lyapunov) {
      std::string out = "interval,exponent\n";
      for (std::size_t i = 0; i < r.lyapunov->trace.size(); ++i) {
        out += std::to_string(i + 1) + "," + fmt(r.lyapunov->trace[i]) + "\n";
      }
      write_file(dir / "lyapunov.csv", out);
    }
    if (!r.duffing.empty()) {
      std::string out = "t,e,edot,x,y\n";
      for (const auto& s : r.duffing) {
        const cplx a = demodulate(s, r.duffing_omega1);
        out += fmt(s.t) + "," + fmt(s.e) + "," + fmt(s.edot) + "," + fmt(a.real()) + "," + fmt(a.imag()) + "\n";
      }
      write_file(dir / "duffing.csv", out);
    }
    if (r.poincare) {
      std::string out = "x,y\n";
      for (const auto& a : r.poincare->points) out += fmt(a.real()) + "," + fmt(a.imag()) + "\n";
      write_file(dir / "poincare.csv", out);
    }
    if (cfg.mode == Mode::sweep_omega2 || cfg.mode == Mode::sweep_noise) {
      std::string out = "param,q_min\n";
      for (const auto& row : r.sweep) out += fmt(row.param) + "," + fmt(row.q_min) + "\n";
      write_file(dir / "sweep.csv", out);
    }
    if (r.scale) {
      std::string out = "t,q_base,q_scaled,abs_diff\n";
      for (std::size_t i = 0; i < r.scale->times.size(); ++i) {
        out += fmt(r.scale->times[i]) + "," + fmt(r.scale->q_base[i]) + "," + fmt(r.scale->q_scaled[i]) + "," +
               fmt(std::abs(r.scale->q_base[i] - r.scale->q_scaled[i])) + "\n";
      }
      write_file(dir / "scale_check.csv", out);
    }
  }

  if (cfg.output.json) {
    for (std::size_t k = 0; k < r.rho_snapshots.size(); ++k) {
      write_file(dir / indexed_name("rho_snapshot", ".json", k), rho_json(r.rho_snapshots[k].first, r.rho_snapshots[k].second));
    }
    json meta = {{"version", kVersion},
                 {"compiler", __VERSION__},
                 {"json_library", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                 {"config", to_json(cfg)},
                 {"resolved", r.meta},
                 {"warnings", r.warnings},
                 {"wall_time_seconds", wall_seconds}};
    write_file(dir / "run_meta.json", meta.dump(2) + "\n");
  }
}

}  // namespace kerrsim
