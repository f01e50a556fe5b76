#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace kerrsim {

using cplx = std::complex<double>;

// Levels at the top of the truncated space inspected by truncation audits.
inline constexpr int kTailWindow = 5;

// Pure state in the truncated Fock basis, c_n = <n|psi>.
class FockVector {
 public:
  explicit FockVector(int dim);
  explicit FockVector(std::vector<cplx> amps);

  static FockVector vacuum(int dim) { return basis(0, dim); }
  static FockVector basis(int level, int dim);

  int dim() const noexcept { return static_cast<int>(amps_.size()); }
  std::span<const cplx> amps() const noexcept { return amps_; }
  std::span<cplx> amps() noexcept { return amps_; }
  cplx operator[](int n) const { return amps_[static_cast<std::size_t>(n)]; }
  cplx& operator[](int n) { return amps_[static_cast<std::size_t>(n)]; }

  double norm_squared() const noexcept;
  // Scales to unit norm; throws NumericError for a zero or non-finite vector.
  FockVector& normalize();
  // Population in the top `window` levels.
  double tail_population(int window = kTailWindow) const noexcept;

  bool operator==(const FockVector&) const = default;

 private:
  std::vector<cplx> amps_;
};

// Complex operator stored by diagonals. Band k holds the elements (i, i+k); the
// array is indexed by min(i, i+k), so its length is dim - |k|.
class BandedOperator {
 public:
  explicit BandedOperator(int dim);

  int dim() const noexcept { return dim_; }
  const std::map<int, std::vector<cplx>>& bands() const noexcept { return bands_; }
  bool has_band(int offset) const { return bands_.contains(offset); }
  // Returns the stored band; throws std::out_of_range if absent.
  const std::vector<cplx>& band(int offset) const { return bands_.at(offset); }
  // Band at `offset`, created zero-filled on first access.
  std::vector<cplx>& band(int offset);

  // Element (row, col); zero outside the stored bands.
  cplx at(int row, int col) const;

  BandedOperator adjoint() const;
  BandedOperator scaled(cplx factor) const;
  bool is_hermitian(double tol = 1e-12) const;
  bool is_zero() const;

  BandedOperator& operator+=(const BandedOperator& other);
  friend BandedOperator operator+(BandedOperator lhs, const BandedOperator& rhs) {
    lhs += rhs;
    return lhs;
  }

  bool operator==(const BandedOperator&) const = default;

 private:
  int dim_;
  std::map<int, std::vector<cplx>> bands_;
};

// Dense density matrix, row-major.
class DensityMatrix {
 public:
  explicit DensityMatrix(int dim);

  static DensityMatrix pure(const FockVector& psi);
  // Thermal state with mean occupation `n_mean`, truncated to `dim` and renormalized.
  static DensityMatrix thermal(double n_mean, int dim);

  int dim() const noexcept { return dim_; }
  cplx operator()(int row, int col) const { return elems_[index(row, col)]; }
  cplx& operator()(int row, int col) { return elems_[index(row, col)]; }
  std::span<const cplx> data() const noexcept { return elems_; }
  std::span<cplx> data() noexcept { return elems_; }

  cplx trace() const noexcept;
  double max_hermiticity_error() const noexcept;
  double min_diagonal() const noexcept;
  // Replaces rho by (rho + rho^+)/2.
  void symmetrize();
  void normalize_trace();

  DensityMatrix& operator+=(const DensityMatrix& other);
  DensityMatrix& operator*=(double factor);

  bool operator==(const DensityMatrix&) const = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(dim_) +
           static_cast<std::size_t>(col);
  }

  int dim_;
  std::vector<cplx> elems_;
};

BandedOperator build_identity(int dim);
BandedOperator build_annihilation(int dim);
BandedOperator build_creation(int dim);
BandedOperator build_number(int dim);
BandedOperator build_number_squared(int dim);

// Matrix product a*b of banded operators.
BandedOperator compose(const BandedOperator& a, const BandedOperator& b);

// Coherent state with amplitudes from log-gamma; throws TruncationError when the
// tail population exceeds 1e-8.
FockVector make_coherent(cplx alpha, int dim);

FockVector apply(const BandedOperator& op, const FockVector& psi);
cplx expect(const BandedOperator& op, const FockVector& psi);

// op * rho and rho * op for a banded op.
DensityMatrix left_multiply(const BandedOperator& op, const DensityMatrix& rho);
DensityMatrix right_multiply(const DensityMatrix& rho, const BandedOperator& op);

}  // namespace kerrsim
