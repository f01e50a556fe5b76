#include "kerrsim/master.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "kerrsim/error.hpp"

namespace kerrsim {

namespace {

constexpr double kMaxTraceDriftPerStep = 1e-6;

// out += coeff * op * rho
void add_left(const BandedOperator& op, const DensityMatrix& rho, cplx coeff, DensityMatrix& out) {
  const int d = rho.dim();
  for (const auto& [k, v] : op.bands()) {
    const int lo = std::max(0, -k);
    const int hi = std::min(d, d - k);
    for (int i = lo; i < hi; ++i) {
      const cplx e = coeff * v[static_cast<std::size_t>(k >= 0 ? i : i + k)];
      if (e == cplx{}) continue;
      for (int j = 0; j < d; ++j) out(i, j) += e * rho(i + k, j);
    }
  }
}

// out += coeff * rho * op
void add_right(const DensityMatrix& rho, const BandedOperator& op, cplx coeff, DensityMatrix& out) {
  const int d = rho.dim();
  for (const auto& [k, v] : op.bands()) {
    const int lo = std::max(0, k);
    const int hi = std::min(d, d + k);
    for (int j = lo; j < hi; ++j) {
      const int r = j - k;
      const cplx e = coeff * v[static_cast<std::size_t>(k >= 0 ? r : j)];
      if (e == cplx{}) continue;
      for (int i = 0; i < d; ++i) out(i, j) += rho(i, r) * e;
    }
  }
}

// out += L rho L^+ for a single-band L.
void add_sandwich(const BandedOperator& l, const DensityMatrix& rho, DensityMatrix& out) {
  const int d = rho.dim();
  for (const auto& [ka, va] : l.bands()) {
    for (const auto& [kb, vb] : l.bands()) {
      // (L rho L^+)_{ij} = sum L_{i,i+ka} rho_{i+ka, j+kb} conj(L_{j, j+kb})
      for (int i = std::max(0, -ka); i < std::min(d, d - ka); ++i) {
        const cplx li = va[static_cast<std::size_t>(ka >= 0 ? i : i + ka)];
        if (li == cplx{}) continue;
        for (int j = std::max(0, -kb); j < std::min(d, d - kb); ++j) {
          const cplx lj = std::conj(vb[static_cast<std::size_t>(kb >= 0 ? j : j + kb)]);
          out(i, j) += li * rho(i + ka, j + kb) * lj;
        }
      }
    }
  }
}

struct Dissipator {
  std::vector<BandedOperator> ls;
  std::vector<BandedOperator> ldl;
};

Dissipator make_dissipator(const SystemParams& p, int dim) {
  const LindbladPair pair = lindblad_ops(p, dim);
  Dissipator out;
  out.ls.push_back(pair.l1);
  out.ldl.push_back(compose(pair.l1.adjoint(), pair.l1));
  if (pair.l2_active) {
    out.ls.push_back(pair.l2);
    out.ldl.push_back(compose(pair.l2.adjoint(), pair.l2));
  }
  return out;
}

DensityMatrix apply_generator(const DensityMatrix& rho, const BandedOperator& h,
                              const Dissipator& diss) {
  DensityMatrix out(rho.dim());
  const cplx minus_i(0.0, -1.0);
  add_left(h, rho, minus_i, out);
  add_right(rho, h, -minus_i, out);
  for (std::size_t c = 0; c < diss.ls.size(); ++c) {
    add_sandwich(diss.ls[c], rho, out);
    add_left(diss.ldl[c], rho, -0.5, out);
    add_right(rho, diss.ldl[c], -0.5, out);
  }
  return out;
}

}  // namespace

void MasterConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt", "must be > 0");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidParameter("t_end", "must be >= 0");
  if (dim < 2) throw InvalidParameter("dim", "must be >= 2");
  for (std::size_t i = 0; i < record_times.size(); ++i) {
    const double t = record_times[i];
    if (t < -1e-9 || t > t_end + 1e-9) throw InvalidParameter("record_times", "time outside [0, t_end]");
    if (i > 0 && !(t > record_times[i - 1])) throw InvalidParameter("record_times", "must be increasing");
    if (std::abs(std::round(t / dt) * dt - t) > 1e-9) {
      throw InvalidParameter("record_times", "time " + std::to_string(t) + " is not a multiple of dt");
    }
  }
}

DensityMatrix liouvillian_apply(const DensityMatrix& rho, const SystemParams& p, double t) {
  return apply_generator(rho, hamiltonian_at(p, t, rho.dim()), make_dissipator(p, rho.dim()));
}

MasterRun run_master(const SystemParams& p, const MasterConfig& cfg, const DensityMatrix& initial) {
  cfg.validate();
  p.validate();
  if (initial.dim() != cfg.dim) throw DimensionMismatch("initial density matrix dimension mismatch");
  if (initial.max_hermiticity_error() > 1e-10) throw InvalidParameter("initial", "density matrix not Hermitian");

  const Dissipator diss = make_dissipator(p, cfg.dim);
  const double h = cfg.dt;
  const auto total = static_cast<std::int64_t>(std::llround(cfg.t_end / h));
  std::vector<std::int64_t> rec_steps;
  for (double t : cfg.record_times) rec_steps.push_back(std::llround(t / h));

  MasterRun run;
  DensityMatrix rho = initial;
  rho.normalize_trace();
  std::size_t next = 0;
  for (std::int64_t s = 0;; ++s) {
    while (next < rec_steps.size() && rec_steps[next] == s) {
      run.records.push_back({cfg.record_times[next], rho});
      ++next;
    }
    if (s >= total) break;
    const double t = s * h;
    const BandedOperator h0 = hamiltonian_at(p, t, cfg.dim);
    const BandedOperator hm = hamiltonian_at(p, t + 0.5 * h, cfg.dim);
    const BandedOperator h1 = hamiltonian_at(p, t + h, cfg.dim);

    const DensityMatrix k1 = apply_generator(rho, h0, diss);
    DensityMatrix stage = rho;
    for (std::size_t i = 0; i < stage.data().size(); ++i) stage.data()[i] += 0.5 * h * k1.data()[i];
    const DensityMatrix k2 = apply_generator(stage, hm, diss);
    stage = rho;
    for (std::size_t i = 0; i < stage.data().size(); ++i) stage.data()[i] += 0.5 * h * k2.data()[i];
    const DensityMatrix k3 = apply_generator(stage, hm, diss);
    stage = rho;
    for (std::size_t i = 0; i < stage.data().size(); ++i) stage.data()[i] += h * k3.data()[i];
    const DensityMatrix k4 = apply_generator(stage, h1, diss);
    for (std::size_t i = 0; i < rho.data().size(); ++i) {
      rho.data()[i] += h / 6.0 * (k1.data()[i] + 2.0 * k2.data()[i] + 2.0 * k3.data()[i] + k4.data()[i]);
    }

    rho.symmetrize();
    const double tr = rho.trace().real();
    if (!std::isfinite(tr)) throw NumericError("non-finite density matrix at t=" + std::to_string(t + h));
    const double drift = std::abs(tr - 1.0);
    run.max_trace_drift = std::max(run.max_trace_drift, drift);
    if (drift > kMaxTraceDriftPerStep) {
      std::ostringstream os;
      os << "step too large at t=" << t + h << ": trace drift " << drift << " per step (dt=" << h << ")";
      throw StepTooLarge(os.str());
    }
    rho.normalize_trace();
  }
  return run;
}

RhoStats rho_stats(const DensityMatrix& rho) {
  RhoStats s;
  for (int n = 0; n < rho.dim(); ++n) {
    const double pn = rho(n, n).real();
    s.n_mean += n * pn;
    s.n2_mean += static_cast<double>(n) * n * pn;
  }
  s.variance = s.n2_mean - s.n_mean * s.n_mean;
  if (s.n_mean >= 1e-12) s.q = (s.variance - s.n_mean) / s.n_mean;
  return s;
}

}  // namespace kerrsim
