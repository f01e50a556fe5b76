#pragma once

#include <vector>

#include "kerrsim/fock.hpp"

namespace kerrsim {

struct WignerGridSpec {
  int n_r = 256;
  int n_theta = 180;
  double r_max = 6.0;

  void validate() const;
};

// Polar samples of W. Radial nodes are Gauss-Legendre points on [0, r_max],
// angles are uniform in [0, 2pi). X = r cos(theta), Y = r sin(theta).
struct WignerGrid {
  std::vector<double> r_values;
  std::vector<double> theta_values;
  std::vector<double> values;   // index i_r * n_theta + i_theta
  std::vector<double> weights;  // r dr dtheta quadrature weight per sample, same layout
  double max_imag_residue = 0.0;

  int n_r() const noexcept { return static_cast<int>(r_values.size()); }
  int n_theta() const noexcept { return static_cast<int>(theta_values.size()); }
  double at(int i_r, int i_theta) const { return values[static_cast<std::size_t>(i_r) * theta_values.size() + i_theta]; }
  double x(int i_r, int i_theta) const;
  double y(int i_r, int i_theta) const;
};

// Empty grid (values zero) with nodes and weights filled in.
WignerGrid make_wigner_grid(const WignerGridSpec& spec);

// Matrix element W_mn(r, theta) of the Wigner kernel in the Fock basis.
cplx wigner_coeff(int m, int n, double r, double theta);

// W(r, theta) = sum_{m,n} rho_nm W_mn(r, theta). Raises HermiticityError when
// the imaginary residue exceeds 1e-6.
WignerGrid wigner_from_rho(const DensityMatrix& rho, const WignerGridSpec& spec);

// Sum of W times the quadrature weights.
double integrate_wigner(const WignerGrid& grid);

// Default outer radius for a state with peak mean occupation n_peak.
double default_wigner_rmax(double n_peak);

}  // namespace kerrsim
