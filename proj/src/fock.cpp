#include "kerrsim/fock.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kerrsim/error.hpp"

namespace kerrsim {

namespace {

void require_dim(int dim, int min_dim = 2) {
  if (dim < min_dim) {
    throw InvalidDimension("Fock dimension must be >= " + std::to_string(min_dim) + ", got " +
                           std::to_string(dim));
  }
}

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a) + " vs " +
                            std::to_string(b));
  }
}

}  // namespace

// ---- FockVector --------------------------------------------------------------

FockVector::FockVector(int dim) {
  require_dim(dim);
  amps_.assign(static_cast<std::size_t>(dim), cplx{});
}

FockVector::FockVector(std::vector<cplx> amps) : amps_(std::move(amps)) {
  require_dim(static_cast<int>(amps_.size()));
}

FockVector FockVector::basis(int level, int dim) {
  FockVector v(dim);
  if (level < 0 || level >= dim) {
    throw InvalidDimension("basis level " + std::to_string(level) + " outside [0, " +
                           std::to_string(dim) + ")");
  }
  v[level] = 1.0;
  return v;
}

double FockVector::norm_squared() const noexcept {
  double s = 0.0;
  for (const auto& c : amps_) s += std::norm(c);
  return s;
}

FockVector& FockVector::normalize() {
  const double n2 = norm_squared();
  if (!(n2 > 0.0) || !std::isfinite(n2)) {
    throw NumericError("cannot normalize state with squared norm " + std::to_string(n2));
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& c : amps_) c *= inv;
  return *this;
}

double FockVector::tail_population(int window) const noexcept {
  const int d = dim();
  double s = 0.0;
  for (int n = std::max(0, d - window); n < d; ++n) s += std::norm(amps_[static_cast<std::size_t>(n)]);
  return s;
}

// ---- BandedOperator ----------------------------------------------------------

BandedOperator::BandedOperator(int dim) : dim_(dim) { require_dim(dim, 1); }

std::vector<cplx>& BandedOperator::band(int offset) {
  if (std::abs(offset) >= dim_) {
    throw InvalidDimension("band offset " + std::to_string(offset) + " out of range for dimension " +
                           std::to_string(dim_));
  }
  auto [it, inserted] = bands_.try_emplace(offset);
  if (inserted) it->second.assign(static_cast<std::size_t>(dim_ - std::abs(offset)), cplx{});
  return it->second;
}

cplx BandedOperator::at(int row, int col) const {
  auto it = bands_.find(col - row);
  if (it == bands_.end()) return {};
  // Band storage is indexed by min(row, col).
  return it->second[static_cast<std::size_t>(std::min(row, col))];
}

BandedOperator BandedOperator::adjoint() const {
  BandedOperator out(dim_);
  for (const auto& [k, v] : bands_) {
    // (A^+)_{i, i-k} = conj(A_{i-k, i}); the band of A^+ at -k starts at row |k| when k > 0.
    auto& dst = out.band(-k);
    for (std::size_t j = 0; j < v.size(); ++j) dst[j] = std::conj(v[j]);
  }
  return out;
}

BandedOperator BandedOperator::scaled(cplx factor) const {
  BandedOperator out = *this;
  for (auto& [k, v] : out.bands_) {
    for (auto& c : v) c *= factor;
  }
  return out;
}

bool BandedOperator::is_hermitian(double tol) const {
  for (const auto& [k, v] : bands_) {
    auto it = bands_.find(-k);
    for (std::size_t j = 0; j < v.size(); ++j) {
      const cplx mirror = it == bands_.end() ? cplx{} : std::conj(it->second[j]);
      if (std::abs(v[j] - mirror) > tol) return false;
    }
  }
  return true;
}

bool BandedOperator::is_zero() const {
  for (const auto& [k, v] : bands_) {
    for (const auto& c : v) {
      if (c != cplx{}) return false;
    }
  }
  return true;
}

BandedOperator& BandedOperator::operator+=(const BandedOperator& other) {
  require_same_dim(dim_, other.dim_, "operator sum");
  for (const auto& [k, v] : other.bands_) {
    auto& dst = band(k);
    for (std::size_t j = 0; j < v.size(); ++j) dst[j] += v[j];
  }
  return *this;
}

// ---- DensityMatrix -----------------------------------------------------------

DensityMatrix::DensityMatrix(int dim) : dim_(dim) {
  require_dim(dim, 1);
  elems_.assign(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim), cplx{});
}

DensityMatrix DensityMatrix::pure(const FockVector& psi) {
  const int d = psi.dim();
  DensityMatrix rho(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) rho(i, j) = psi[i] * std::conj(psi[j]);
  }
  return rho;
}

DensityMatrix DensityMatrix::thermal(double n_mean, int dim) {
  if (!(n_mean >= 0.0)) throw InvalidParameter("n_bath", "thermal occupation must be >= 0");
  DensityMatrix rho(dim);
  if (n_mean == 0.0) {
    rho(0, 0) = 1.0;
    return rho;
  }
  const double ratio = n_mean / (n_mean + 1.0);
  double p = 1.0 / (n_mean + 1.0);
  for (int n = 0; n < dim; ++n) {
    rho(n, n) = p;
    p *= ratio;
  }
  rho.normalize_trace();
  return rho;
}

cplx DensityMatrix::trace() const noexcept {
  cplx t{};
  for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

double DensityMatrix::max_hermiticity_error() const noexcept {
  double err = 0.0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = i; j < dim_; ++j) err = std::max(err, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
  }
  return err;
}

double DensityMatrix::min_diagonal() const noexcept {
  double m = (*this)(0, 0).real();
  for (int i = 1; i < dim_; ++i) m = std::min(m, (*this)(i, i).real());
  return m;
}

void DensityMatrix::symmetrize() {
  for (int i = 0; i < dim_; ++i) {
    (*this)(i, i) = (*this)(i, i).real();
    for (int j = i + 1; j < dim_; ++j) {
      const cplx avg = 0.5 * ((*this)(i, j) + std::conj((*this)(j, i)));
      (*this)(i, j) = avg;
      (*this)(j, i) = std::conj(avg);
    }
  }
}

void DensityMatrix::normalize_trace() {
  const double tr = trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) {
    throw NumericError("density matrix trace " + std::to_string(tr) + " cannot be normalized");
  }
  *this *= 1.0 / tr;
}

DensityMatrix& DensityMatrix::operator+=(const DensityMatrix& other) {
  require_same_dim(dim_, other.dim_, "density matrix sum");
  for (std::size_t j = 0; j < elems_.size(); ++j) elems_[j] += other.elems_[j];
  return *this;
}

DensityMatrix& DensityMatrix::operator*=(double factor) {
  for (auto& c : elems_) c *= factor;
  return *this;
}

// ---- builders ----------------------------------------------------------------

BandedOperator build_identity(int dim) {
  BandedOperator op(dim);
  auto& d = op.band(0);
  std::fill(d.begin(), d.end(), cplx{1.0});
  return op;
}

BandedOperator build_annihilation(int dim) {
  require_dim(dim);
  BandedOperator op(dim);
  auto& b = op.band(1);
  for (int n = 0; n < dim - 1; ++n) b[static_cast<std::size_t>(n)] = std::sqrt(static_cast<double>(n + 1));
  return op;
}

BandedOperator build_creation(int dim) { return build_annihilation(dim).adjoint(); }

BandedOperator build_number(int dim) {
  require_dim(dim);
  BandedOperator op(dim);
  auto& d = op.band(0);
  for (int n = 0; n < dim; ++n) d[static_cast<std::size_t>(n)] = static_cast<double>(n);
  return op;
}

BandedOperator build_number_squared(int dim) {
  require_dim(dim);
  BandedOperator op(dim);
  auto& d = op.band(0);
  for (int n = 0; n < dim; ++n) d[static_cast<std::size_t>(n)] = static_cast<double>(n) * n;
  return op;
}

BandedOperator compose(const BandedOperator& a, const BandedOperator& b) {
  require_same_dim(a.dim(), b.dim(), "compose");
  const int d = a.dim();
  BandedOperator out(d);
  for (const auto& [ka, va] : a.bands()) {
    for (const auto& [kb, vb] : b.bands()) {
      const int k = ka + kb;
      if (std::abs(k) >= d) continue;
      auto& dst = out.band(k);
      // (AB)_{i, i+ka+kb} += A_{i, i+ka} B_{i+ka, i+ka+kb}
      for (int i = 0; i < d; ++i) {
        const int j = i + ka;
        const int l = j + kb;
        if (j < 0 || j >= d || l < 0 || l >= d) continue;
        const cplx ea = va[static_cast<std::size_t>(ka >= 0 ? i : j)];
        const cplx eb = vb[static_cast<std::size_t>(kb >= 0 ? j : l)];
        dst[static_cast<std::size_t>(k >= 0 ? i : l)] += ea * eb;
      }
    }
  }
  return out;
}

FockVector make_coherent(cplx alpha, int dim) {
  require_dim(dim);
  FockVector psi(dim);
  const double mod = std::abs(alpha);
  if (mod == 0.0) {
    psi[0] = 1.0;
    return psi;
  }
  const double phase = std::arg(alpha);
  const double log_mod = std::log(mod);
  for (int n = 0; n < dim; ++n) {
    const double log_c = -0.5 * mod * mod + n * log_mod - 0.5 * std::lgamma(n + 1.0);
    psi[n] = std::polar(std::exp(log_c), n * phase);
  }
  psi.normalize();
  const double tail = psi.tail_population();
  if (tail > 1e-8) {
    throw TruncationError("coherent state |alpha|=" + std::to_string(mod) +
                              " inadequately truncated at dimension " + std::to_string(dim) +
                              " (tail population " + std::to_string(tail) + ")",
                          0.0);
  }
  return psi;
}

FockVector apply(const BandedOperator& op, const FockVector& psi) {
  require_same_dim(op.dim(), psi.dim(), "apply");
  const int d = psi.dim();
  FockVector out(d);
  for (const auto& [k, v] : op.bands()) {
    const int lo = std::max(0, -k);
    const int hi = std::min(d, d - k);
    for (int i = lo; i < hi; ++i) {
      out[i] += v[static_cast<std::size_t>(k >= 0 ? i : i + k)] * psi[i + k];
    }
  }
  return out;
}

cplx expect(const BandedOperator& op, const FockVector& psi) {
  require_same_dim(op.dim(), psi.dim(), "expect");
  const int d = psi.dim();
  cplx s{};
  for (const auto& [k, v] : op.bands()) {
    const int lo = std::max(0, -k);
    const int hi = std::min(d, d - k);
    for (int i = lo; i < hi; ++i) {
      s += std::conj(psi[i]) * v[static_cast<std::size_t>(k >= 0 ? i : i + k)] * psi[i + k];
    }
  }
  return s;
}

DensityMatrix left_multiply(const BandedOperator& op, const DensityMatrix& rho) {
  require_same_dim(op.dim(), rho.dim(), "left_multiply");
  const int d = rho.dim();
  DensityMatrix out(d);
  for (const auto& [k, v] : op.bands()) {
    const int lo = std::max(0, -k);
    const int hi = std::min(d, d - k);
    for (int i = lo; i < hi; ++i) {
      const cplx e = v[static_cast<std::size_t>(k >= 0 ? i : i + k)];
      for (int j = 0; j < d; ++j) out(i, j) += e * rho(i + k, j);
    }
  }
  return out;
}

DensityMatrix right_multiply(const DensityMatrix& rho, const BandedOperator& op) {
  require_same_dim(op.dim(), rho.dim(), "right_multiply");
  const int d = rho.dim();
  DensityMatrix out(d);
  for (const auto& [k, v] : op.bands()) {
    // (rho A)_{i, j} += rho_{i, j-k} A_{j-k, j}
    const int lo = std::max(0, k);
    const int hi = std::min(d, d + k);
    for (int j = lo; j < hi; ++j) {
      const int r = j - k;
      const cplx e = v[static_cast<std::size_t>(k >= 0 ? r : j)];
      for (int i = 0; i < d; ++i) out(i, j) += rho(i, r) * e;
    }
  }
  return out;
}

}  // namespace kerrsim
