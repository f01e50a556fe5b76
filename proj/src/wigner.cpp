#include "kerrsim/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kerrsim/error.hpp"

namespace kerrsim {

namespace {

constexpr double kSkipElement = 1e-14;
constexpr double kResidueLimit = 1e-6;
constexpr double kRescaleHigh = 1e150;
constexpr double kRescaleLow = 1e-150;

// Gauss-Legendre nodes and weights on [-1, 1], ascending.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    w[static_cast<std::size_t>(i)] = wt;
    w[static_cast<std::size_t>(n - 1 - i)] = wt;
  }
}

// Radial factors h_n = sqrt(n!/(n+q)!) (2r)^q exp(-2r^2) L_n^q(4r^2) for
// n = 0..count-1, run as a normalized three-term recurrence with a separate
// log-scale so neither tiny prefactors nor large polynomials leave double range.
class RadialRecurrence {
 public:
  RadialRecurrence(int q, double r) : q_(q), x_(4.0 * r * r) {
    if (q > 0 && r == 0.0) {
      zero_ = true;
      return;
    }
    log_scale_ = (q > 0 ? q * std::log(2.0 * r) : 0.0) - 2.0 * r * r - 0.5 * std::lgamma(q + 1.0);
    cur_ = 1.0;
  }

  // Value of h_n for the current n, then advances to n + 1.
  double next() {
    if (zero_) return 0.0;
    const double v = value();
    const double qn = q_;
    double nxt;
    if (n_ == 0) {
      nxt = (1.0 + qn - x_) / std::sqrt(qn + 1.0);
    } else {
      const double n = n_;
      nxt = ((2.0 * n + 1.0 + qn - x_) * cur_ - std::sqrt(n * (n + qn)) * prev_) /
            std::sqrt((n + 1.0) * (n + qn + 1.0));
    }
    prev_ = cur_;
    cur_ = nxt;
    ++n_;
    const double mag = std::max(std::abs(cur_), std::abs(prev_));
    if (mag > kRescaleHigh || (mag < kRescaleLow && mag > 0.0)) {
      const double lg = std::log(mag);
      cur_ /= mag;
      prev_ /= mag;
      log_scale_ += lg;
    }
    return v;
  }

 private:
  double value() const {
    if (cur_ == 0.0) return 0.0;
    const double lv = log_scale_ + std::log(std::abs(cur_));
    if (lv < -745.0) return 0.0;
    return std::copysign(std::exp(lv), cur_);
  }

  int q_;
  double x_;
  bool zero_ = false;
  int n_ = 0;
  double log_scale_ = 0.0;
  double cur_ = 0.0;
  double prev_ = 0.0;
};

}  // namespace

void WignerGridSpec::validate() const {
  if (n_r < 1) throw InvalidParameter("n_r", "must be >= 1");
  if (n_theta < 1) throw InvalidParameter("n_theta", "must be >= 1");
  if (!(r_max > 0.0) || !std::isfinite(r_max)) throw InvalidParameter("r_max", "must be > 0");
}

double WignerGrid::x(int i_r, int i_theta) const {
  return r_values[static_cast<std::size_t>(i_r)] * std::cos(theta_values[static_cast<std::size_t>(i_theta)]);
}

double WignerGrid::y(int i_r, int i_theta) const {
  return r_values[static_cast<std::size_t>(i_r)] * std::sin(theta_values[static_cast<std::size_t>(i_theta)]);
}

WignerGrid make_wigner_grid(const WignerGridSpec& spec) {
  spec.validate();
  WignerGrid g;
  std::vector<double> xs, ws;
  gauss_legendre(spec.n_r, xs, ws);
  const double half = 0.5 * spec.r_max;
  const double dtheta = 2.0 * std::numbers::pi / spec.n_theta;
  for (int i = 0; i < spec.n_r; ++i) g.r_values.push_back(half * (xs[static_cast<std::size_t>(i)] + 1.0));
  for (int j = 0; j < spec.n_theta; ++j) g.theta_values.push_back(j * dtheta);
  const std::size_t total = static_cast<std::size_t>(spec.n_r) * static_cast<std::size_t>(spec.n_theta);
  g.values.assign(total, 0.0);
  g.weights.resize(total);
  for (int i = 0; i < spec.n_r; ++i) {
    const double wr = half * ws[static_cast<std::size_t>(i)] * g.r_values[static_cast<std::size_t>(i)] * dtheta;
    for (int j = 0; j < spec.n_theta; ++j) g.weights[static_cast<std::size_t>(i * spec.n_theta + j)] = wr;
  }
  return g;
}

cplx wigner_coeff(int m, int n, double r, double theta) {
  if (m < 0 || n < 0) throw InvalidParameter("level", "Fock levels must be >= 0");
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidParameter("r", "must be finite and >= 0");
  const int q = std::abs(m - n);
  const int k = std::min(m, n);
  RadialRecurrence rec(q, r);
  double h = 0.0;
  for (int i = 0; i <= k; ++i) h = rec.next();
  const double radial = 2.0 / std::numbers::pi * (k % 2 == 0 ? 1.0 : -1.0) * h;
  if (!std::isfinite(radial)) {
    std::ostringstream os;
    os << "non-finite Wigner coefficient for m=" << m << ", n=" << n << ", r=" << r;
    throw NumericError(os.str());
  }
  const double phase = (m >= n ? 1.0 : -1.0) * q * theta;
  return std::polar(radial, phase);
}

WignerGrid wigner_from_rho(const DensityMatrix& rho, const WignerGridSpec& spec) {
  WignerGrid g = make_wigner_grid(spec);
  const int d = rho.dim();
  const int nt = spec.n_theta;

  // Bands of rho that carry anything above the skip threshold.
  std::vector<char> band_active(static_cast<std::size_t>(d), 0);
  for (int q = 0; q < d; ++q) {
    for (int n = 0; n + q < d && !band_active[static_cast<std::size_t>(q)]; ++n) {
      if (std::abs(rho(n, n + q)) >= kSkipElement || std::abs(rho(n + q, n)) >= kSkipElement) {
        band_active[static_cast<std::size_t>(q)] = 1;
      }
    }
  }
  int q_top = 0;
  for (int q = 0; q < d; ++q) {
    if (band_active[static_cast<std::size_t>(q)]) q_top = q;
  }

  // e^{i q theta_j}
  std::vector<cplx> phases(static_cast<std::size_t>(q_top + 1) * static_cast<std::size_t>(nt));
  for (int q = 0; q <= q_top; ++q) {
    for (int j = 0; j < nt; ++j) {
      phases[static_cast<std::size_t>(q * nt + j)] = std::polar(1.0, q * g.theta_values[static_cast<std::size_t>(j)]);
    }
  }

  const double two_over_pi = 2.0 / std::numbers::pi;
  std::vector<cplx> s(static_cast<std::size_t>(q_top + 1)), t(static_cast<std::size_t>(q_top + 1));
  double residue = 0.0;
  for (int i = 0; i < spec.n_r; ++i) {
    const double r = g.r_values[static_cast<std::size_t>(i)];
    for (int q = 0; q <= q_top; ++q) {
      cplx sq{}, tq{};
      if (band_active[static_cast<std::size_t>(q)]) {
        RadialRecurrence rec(q, r);
        for (int n = 0; n + q < d; ++n) {
          const double h = rec.next();
          const double radial = two_over_pi * (n % 2 == 0 ? 1.0 : -1.0) * h;
          const cplx upper = rho(n, n + q);
          const cplx lower = rho(n + q, n);
          if (std::abs(upper) >= kSkipElement) sq += upper * radial;
          if (q > 0 && std::abs(lower) >= kSkipElement) tq += lower * radial;
        }
      }
      s[static_cast<std::size_t>(q)] = sq;
      t[static_cast<std::size_t>(q)] = tq;
    }
    for (int j = 0; j < nt; ++j) {
      cplx w = s[0];
      for (int q = 1; q <= q_top; ++q) {
        const cplx e = phases[static_cast<std::size_t>(q * nt + j)];
        w += s[static_cast<std::size_t>(q)] * e + t[static_cast<std::size_t>(q)] * std::conj(e);
      }
      if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) {
        throw NumericError("non-finite Wigner value at r=" + std::to_string(r));
      }
      residue = std::max(residue, std::abs(w.imag()));
      g.values[static_cast<std::size_t>(i * nt + j)] = w.real();
    }
  }
  g.max_imag_residue = residue;
  if (residue > kResidueLimit) {
    std::ostringstream os;
    os << "Wigner reconstruction has imaginary residue " << residue << "; density matrix is not Hermitian";
    throw HermiticityError(os.str());
  }
  return g;
}

double integrate_wigner(const WignerGrid& grid) {
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.values.size(); ++i) sum += grid.values[i] * grid.weights[i];
  return sum;
}

double default_wigner_rmax(double n_peak) { return std::sqrt(std::max(0.0, n_peak)) + 6.0; }

}  // namespace kerrsim
