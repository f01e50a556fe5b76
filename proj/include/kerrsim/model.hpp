#pragma once

#include <string_view>

#include "kerrsim/fock.hpp"

namespace kerrsim {

// Physical parameters of the doubly driven Kerr oscillator. All rates are in
// units of the decay rate gamma (hbar = gamma = 1 internally); gamma_abs only
// converts to absolute output rates.
struct SystemParams {
  double chi = 0.0;        // Kerr strength chi/gamma
  double detuning = 0.0;   // Delta/gamma
  cplx omega1{};           // first drive Rabi frequency
  cplx omega2{};           // second drive Rabi frequency
  double delta_mod = 0.0;  // delta/gamma = (omega_2 - omega_1)/gamma
  double n_bath = 0.0;     // thermal quanta N
  double gamma_abs = 1.0;  // absolute decay rate

  // Throws InvalidParameter naming the offending field.
  void validate() const;

  // Complex drive envelope Omega_1 + Omega_2 exp(-i delta t).
  cplx drive(double t) const;
  // Modulation period 2 pi / delta; infinity when delta == 0.
  double period() const;

  bool operator==(const SystemParams&) const = default;
};

enum class Regime { regular, chaotic, indeterminate };

std::string_view to_string(Regime r);

// H(t) with diagonal Delta n + chi n^2 and the drive on the +-1 bands.
BandedOperator hamiltonian_at(const SystemParams& p, double t, int dim);

struct LindbladPair {
  BandedOperator l1;  // sqrt(N+1) a
  BandedOperator l2;  // sqrt(N) a^+
  bool l2_active;     // false when N == 0 and L2 vanishes
};

LindbladPair lindblad_ops(const SystemParams& p, int dim);

// chi -> chi/l^2, Delta -> Delta + chi (1 - 1/l^2), Omega -> l Omega.
SystemParams scale_params(const SystemParams& p, double lambda);

// Advisory regular/chaotic label from the modulation frequency and drive ratio.
Regime classify_regime(const SystemParams& p);

}  // namespace kerrsim
