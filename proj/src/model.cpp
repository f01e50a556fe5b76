#include "kerrsim/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "kerrsim/error.hpp"

namespace kerrsim {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw InvalidParameter(name, "must be finite");
}

}  // namespace

void SystemParams::validate() const {
  require_finite(chi, "chi");
  require_finite(detuning, "detuning");
  require_finite(omega1.real(), "omega1");
  require_finite(omega1.imag(), "omega1");
  require_finite(omega2.real(), "omega2");
  require_finite(omega2.imag(), "omega2");
  require_finite(delta_mod, "delta_mod");
  require_finite(n_bath, "n_bath");
  require_finite(gamma_abs, "gamma_abs");
  if (n_bath < 0.0) throw InvalidParameter("n_bath", "must be >= 0");
  if (gamma_abs <= 0.0) throw InvalidParameter("gamma_abs", "must be > 0");
}

cplx SystemParams::drive(double t) const {
  return omega1 + omega2 * std::polar(1.0, -delta_mod * t);
}

double SystemParams::period() const {
  if (delta_mod == 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * std::numbers::pi / std::abs(delta_mod);
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::regular:
      return "regular";
    case Regime::chaotic:
      return "chaotic";
    case Regime::indeterminate:
      return "indeterminate";
  }
  return "indeterminate";
}

BandedOperator hamiltonian_at(const SystemParams& p, double t, int dim) {
  if (dim < 2) throw InvalidDimension("Hamiltonian needs dimension >= 2");
  BandedOperator h(dim);
  auto& diag = h.band(0);
  for (int n = 0; n < dim; ++n) {
    diag[static_cast<std::size_t>(n)] = p.detuning * n + p.chi * static_cast<double>(n) * n;
  }
  const cplx f = p.drive(t);
  auto& up = h.band(1);     // coefficient of a: conj(f) sqrt(n+1)
  auto& down = h.band(-1);  // coefficient of a^+: f sqrt(n+1)
  for (int n = 0; n < dim - 1; ++n) {
    const double s = std::sqrt(static_cast<double>(n + 1));
    up[static_cast<std::size_t>(n)] = std::conj(f) * s;
    down[static_cast<std::size_t>(n)] = f * s;
  }
  return h;
}

LindbladPair lindblad_ops(const SystemParams& p, int dim) {
  if (!(p.n_bath >= 0.0)) throw InvalidParameter("n_bath", "must be >= 0");
  const BandedOperator a = build_annihilation(dim);
  return LindbladPair{
      .l1 = a.scaled(std::sqrt(p.n_bath + 1.0)),
      .l2 = a.adjoint().scaled(std::sqrt(p.n_bath)),
      .l2_active = p.n_bath > 0.0,
  };
}

SystemParams scale_params(const SystemParams& p, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidParameter("lambda", "must be > 0");
  SystemParams out = p;
  const double l2 = lambda * lambda;
  out.chi = p.chi / l2;
  out.detuning = p.detuning + p.chi * (1.0 - 1.0 / l2);
  out.omega1 = lambda * p.omega1;
  out.omega2 = lambda * p.omega2;
  return out;
}

Regime classify_regime(const SystemParams& p) {
  const double a1 = std::abs(p.omega1);
  const double a2 = std::abs(p.omega2);
  if (a2 == 0.0 || a1 == 0.0) return Regime::regular;
  const double delta = std::abs(p.delta_mod);
  const double ratio = a1 / a2;
  if (delta < 0.1 || delta > 100.0 || ratio < 0.2 || ratio > 5.0) return Regime::regular;
  if (delta >= 1.0 && delta <= 20.0 && ratio >= 0.8 && ratio <= 1.25) return Regime::chaotic;
  return Regime::indeterminate;
}

}  // namespace kerrsim
