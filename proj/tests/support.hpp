#pragma once

// Small helpers shared by the unit tests: random states and dense reference
// implementations that do not go through the banded code paths.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "kerrsim/fock.hpp"
#include "kerrsim/model.hpp"

namespace testsupport {

using kerrsim::cplx;
using Dense = std::vector<std::vector<cplx>>;

inline Dense dense_zero(int d) { return Dense(static_cast<std::size_t>(d), std::vector<cplx>(static_cast<std::size_t>(d))); }

inline Dense dense_mul(const Dense& a, const Dense& b) {
  const int d = static_cast<int>(a.size());
  Dense c = dense_zero(d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      if (a[i][k] == cplx{}) continue;
      for (int j = 0; j < d; ++j) c[i][j] += a[i][k] * b[k][j];
    }
  return c;
}

inline Dense dense_adjoint(const Dense& a) {
  const int d = static_cast<int>(a.size());
  Dense c = dense_zero(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) c[i][j] = std::conj(a[j][i]);
  return c;
}

inline Dense dense_annihilation(int d) {
  Dense a = dense_zero(d);
  for (int n = 1; n < d; ++n) a[n - 1][n] = std::sqrt(static_cast<double>(n));
  return a;
}

// H(t) written out element by element from the model definition.
inline Dense dense_hamiltonian(const kerrsim::SystemParams& p, double t, int d) {
  Dense h = dense_zero(d);
  const cplx f = p.omega1 + p.omega2 * std::exp(cplx(0.0, -p.delta_mod * t));
  for (int n = 0; n < d; ++n) h[n][n] = p.detuning * n + p.chi * n * n;
  for (int n = 0; n + 1 < d; ++n) {
    const double s = std::sqrt(n + 1.0);
    h[n + 1][n] = f * s;            // f a^+
    h[n][n + 1] = std::conj(f) * s;  // f^* a
  }
  return h;
}

// Lindblad right-hand side with dense products.
inline Dense dense_lindblad(const Dense& rho, const kerrsim::SystemParams& p, double t) {
  const int d = static_cast<int>(rho.size());
  const Dense h = dense_hamiltonian(p, t, d);
  const Dense a = dense_annihilation(d);
  const Dense ad = dense_adjoint(a);
  Dense out = dense_zero(d);
  const Dense hr = dense_mul(h, rho), rh = dense_mul(rho, h);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out[i][j] = cplx(0.0, -1.0) * (hr[i][j] - rh[i][j]);
  const auto channel = [&](const Dense& l, double rate) {
    if (rate == 0.0) return;
    const Dense ld = dense_adjoint(l);
    const Dense lrl = dense_mul(dense_mul(l, rho), ld);
    const Dense ldl = dense_mul(ld, l);
    const Dense x = dense_mul(ldl, rho), y = dense_mul(rho, ldl);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out[i][j] += rate * (lrl[i][j] - 0.5 * (x[i][j] + y[i][j]));
  };
  channel(a, p.n_bath + 1.0);
  channel(ad, p.n_bath);
  return out;
}

inline kerrsim::FockVector random_state(int d, std::mt19937_64& rng, int top_zero = 0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<cplx> amps(static_cast<std::size_t>(d));
  for (int n = 0; n < d - top_zero; ++n) amps[static_cast<std::size_t>(n)] = cplx(g(rng), g(rng));
  kerrsim::FockVector v(std::move(amps));
  v.normalize();
  return v;
}

inline kerrsim::DensityMatrix random_rho(int d, std::mt19937_64& rng, int mix = 3) {
  kerrsim::DensityMatrix rho(d);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int k = 0; k < mix; ++k) {
    const kerrsim::FockVector v = random_state(d, rng);
    const double w = u(rng);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) rho(i, j) += w * v[i] * std::conj(v[j]);
  }
  rho.normalize_trace();
  return rho;
}

}  // namespace testsupport
