#include <doctest.h>

#include <cmath>
#include <random>

#include "kerrsim/error.hpp"
#include "kerrsim/fock.hpp"
#include "support.hpp"

using namespace kerrsim;

TEST_SUITE("fock") {

TEST_CASE("annihilation operator layout") {
  const BandedOperator a2 = build_annihilation(2);
  CHECK(a2.bands().size() == 1);
  CHECK(a2.at(0, 1) == cplx(1.0, 0.0));
  CHECK(a2.at(1, 0) == cplx{});

  const BandedOperator a = build_annihilation(7);
  REQUIRE(a.has_band(1));
  CHECK(a.band(1).size() == 6);
  for (int n = 0; n < 6; ++n) CHECK(a.at(n, n + 1).real() == doctest::Approx(std::sqrt(n + 1.0)).epsilon(1e-15));

  CHECK_THROWS_AS(build_annihilation(1), InvalidDimension);
  CHECK_THROWS_AS(build_creation(0), InvalidDimension);
}

TEST_CASE("a annihilates the vacuum") {
  const FockVector out = apply(build_annihilation(6), FockVector::vacuum(6));
  CHECK(out.norm_squared() == 0.0);
}

TEST_CASE("coherent state expectations") {
  const FockVector c = make_coherent(1.5, 40);
  CHECK(std::abs(expect(build_annihilation(40), c) - cplx(1.5, 0.0)) < 1e-8);

  const FockVector vac = make_coherent(0.0, 10);
  CHECK(vac[0] == cplx(1.0, 0.0));
  for (int n = 1; n < 10; ++n) CHECK(vac[n] == cplx{});

  const FockVector two = make_coherent(2.0, 40);
  const double n1 = expect(build_number(40), two).real();
  const double n2 = expect(build_number_squared(40), two).real();
  CHECK(std::abs(n1 - 4.0) < 1e-8);
  CHECK(std::abs(n2 - n1 * n1 - 4.0) < 1e-8);

  CHECK(std::abs(expect(build_number(40), make_coherent(cplx(1.0, 1.0), 40)) - cplx(2.0, 0.0)) < 1e-8);
  CHECK(std::abs(expect(build_annihilation(40), make_coherent(cplx(0.0, 0.5), 40)) - cplx(0.0, 0.5)) < 1e-8);
}

TEST_CASE("coherent amplitudes match the Poisson weights at large n") {
  // |c_n|^2 = e^{-|a|^2} |a|^{2n} / n!, evaluated independently in log space.
  const double alpha = 15.0;
  const FockVector c = make_coherent(alpha, 500);
  for (int n : {0, 100, 225, 300, 400}) {
    const double logp = -alpha * alpha + 2.0 * n * std::log(alpha) - std::lgamma(n + 1.0);
    CHECK(std::norm(c[n]) == doctest::Approx(std::exp(logp)).epsilon(1e-9));
  }
}

TEST_CASE("coherent state with inadequate truncation is rejected") {
  CHECK_THROWS_AS(make_coherent(5.0, 20), TruncationError);
}

TEST_CASE("apply on basis states") {
  const FockVector three = FockVector::basis(3, 8);
  CHECK(apply(build_identity(8), three) == three);
  const FockVector n3 = apply(build_number(8), three);
  CHECK(n3[3] == cplx(3.0, 0.0));
  const FockVector n2 = apply(build_number_squared(8), FockVector::basis(2, 8));
  CHECK(n2[2] == cplx(4.0, 0.0));
  CHECK_THROWS_AS(apply(build_number(8), FockVector::vacuum(9)), DimensionMismatch);
  CHECK_THROWS_AS(expect(build_number(8), FockVector::vacuum(9)), DimensionMismatch);
}

TEST_CASE("apply matches a dense product") {
  std::mt19937_64 rng(11);
  const int d = 9;
  SystemParams p;
  p.chi = 0.3;
  p.detuning = -1.2;
  p.omega1 = cplx(0.7, -0.2);
  p.omega2 = 1.1;
  p.delta_mod = 2.0;
  const BandedOperator h = hamiltonian_at(p, 0.37, d);
  const testsupport::Dense hd = testsupport::dense_hamiltonian(p, 0.37, d);
  const FockVector v = testsupport::random_state(d, rng);
  const FockVector hv = apply(h, v);
  for (int i = 0; i < d; ++i) {
    cplx ref{};
    for (int j = 0; j < d; ++j) ref += hd[i][j] * v[j];
    CHECK(std::abs(hv[i] - ref) < 1e-13);
  }
}

TEST_CASE("expectation of a Hermitian operator is real") {
  std::mt19937_64 rng(5);
  const BandedOperator x = build_annihilation(12) + build_creation(12);
  REQUIRE(x.is_hermitian());
  for (int k = 0; k < 20; ++k) {
    const FockVector v = testsupport::random_state(12, rng);
    CHECK(std::abs(expect(x, v).imag()) < 1e-12);
    CHECK(std::abs(expect(build_number_squared(12), v).imag()) < 1e-12);
  }
  CHECK(expect(build_number(5), FockVector::vacuum(5)) == cplx{});
}

TEST_CASE("creation is exactly the adjoint of annihilation") {
  for (int d = 2; d <= 60; ++d) CHECK(build_creation(d) == build_annihilation(d).adjoint());
}

TEST_CASE("canonical commutator away from the truncation edge") {
  std::mt19937_64 rng(3);
  for (int d : {4, 10, 33}) {
    const BandedOperator aad = compose(build_annihilation(d), build_creation(d));
    const BandedOperator ada = compose(build_creation(d), build_annihilation(d));
    for (int k = 0; k < 10; ++k) {
      const FockVector v = testsupport::random_state(d, rng, 1);
      const cplx c = expect(aad, v) - expect(ada, v);
      CHECK(std::abs(c - cplx(1.0, 0.0)) < 1e-10);
    }
  }
}

TEST_CASE("number squared equals the composed number operator") {
  for (int d : {2, 5, 50}) {
    const BandedOperator sq = build_number_squared(d);
    const BandedOperator comp = compose(build_number(d), build_number(d));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) CHECK(std::abs(sq.at(i, j) - comp.at(i, j)) <= 1e-12);
  }
}

TEST_CASE("normalize") {
  std::mt19937_64 rng(8);
  FockVector v = testsupport::random_state(15, rng);
  CHECK(std::abs(v.norm_squared() - 1.0) < 1e-12);
  const FockVector once = v;
  v.normalize();
  for (int n = 0; n < 15; ++n) CHECK(std::abs(v[n] - once[n]) < 1e-15);
  FockVector zero(4);
  CHECK_THROWS_AS(zero.normalize(), NumericError);
  CHECK_THROWS_AS(FockVector(1), InvalidDimension);
}

TEST_CASE("tail population window") {
  FockVector v(10);
  v[9] = 0.6;
  v[0] = 0.8;
  CHECK(v.tail_population() == doctest::Approx(0.36));
  CHECK(v.tail_population(1) == doctest::Approx(0.36));
  v[5] = 0.1;
  CHECK(v.tail_population() == doctest::Approx(0.37));
}

TEST_CASE("banded storage invariants") {
  const BandedOperator h = hamiltonian_at(SystemParams{0.1, -2.0, cplx(1.0, 0.5), 2.0, 3.0, 0.0, 1.0}, 0.2, 12);
  for (const auto& [k, v] : h.bands()) {
    CHECK(std::abs(k) < h.dim());
    CHECK(static_cast<int>(v.size()) == h.dim() - std::abs(k));
  }
  CHECK(h.is_hermitian());
  BandedOperator skew(4);
  skew.band(1)[0] = 1.0;
  CHECK_FALSE(skew.is_hermitian());
  CHECK(build_identity(3).at(2, 2) == cplx(1.0, 0.0));
}

TEST_CASE("density matrix helpers") {
  const DensityMatrix th = DensityMatrix::thermal(0.5, 40);
  CHECK(std::abs(th.trace() - cplx(1.0, 0.0)) < 1e-10);
  double n = 0.0;
  for (int k = 0; k < 40; ++k) n += k * th(k, k).real();
  CHECK(n == doctest::Approx(0.5).epsilon(1e-9));

  std::mt19937_64 rng(2);
  const DensityMatrix r = testsupport::random_rho(6, rng);
  CHECK(r.max_hermiticity_error() < 1e-12);
  CHECK(r.min_diagonal() >= -1e-12);

  const FockVector v = testsupport::random_state(6, rng);
  const DensityMatrix pure = DensityMatrix::pure(v);
  const DensityMatrix lm = left_multiply(build_number(6), pure);
  CHECK(std::abs(lm.trace() - expect(build_number(6), v)) < 1e-12);
  const DensityMatrix rm = right_multiply(pure, build_annihilation(6));
  CHECK(std::abs(rm.trace() - expect(build_annihilation(6), v)) < 1e-12);
}

}  // TEST_SUITE
