#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kerrsim/error.hpp"
#include "kerrsim/model.hpp"
#include "support.hpp"

using namespace kerrsim;

namespace {

SystemParams curve1() {
  SystemParams p;
  p.chi = 0.7;
  p.detuning = -15.0;
  p.omega1 = 10.2;
  p.omega2 = 13.5;
  p.delta_mod = 5.0;
  return p;
}

double max_diff(const BandedOperator& a, const BandedOperator& b) {
  double m = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a.at(i, j) - b.at(i, j)));
  return m;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("undriven linear Hamiltonian is diagonal") {
  SystemParams p;
  p.detuning = -3.0;
  const BandedOperator h = hamiltonian_at(p, 1.3, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) CHECK(h.at(i, j) == (i == j ? cplx(-3.0 * i, 0.0) : cplx{}));
}

TEST_CASE("curve-1 Hamiltonian entries") {
  const BandedOperator h = hamiltonian_at(curve1(), 0.0, 12);
  CHECK(h.at(2, 2).real() == doctest::Approx(-27.2).epsilon(1e-14));
  // a^+ coefficient f = 23.7 sits below the diagonal, f^* above.
  CHECK(std::abs(h.at(3, 2) - cplx(23.7 * std::sqrt(3.0), 0.0)) < 1e-12);
  CHECK(std::abs(h.at(2, 3) - cplx(23.7 * std::sqrt(3.0), 0.0)) < 1e-12);
}

TEST_CASE("complex drive phases follow the a^+ / a convention") {
  SystemParams p;
  p.omega1 = cplx(0.0, 2.0);
  const BandedOperator h = hamiltonian_at(p, 0.0, 4);
  CHECK(std::abs(h.at(1, 0) - cplx(0.0, 2.0)) < 1e-15);
  CHECK(std::abs(h.at(0, 1) - cplx(0.0, -2.0)) < 1e-15);
}

TEST_CASE("Hamiltonian matches the dense construction") {
  const SystemParams p = curve1();
  for (double t : {0.0, 0.3, 1.7}) {
    const BandedOperator h = hamiltonian_at(p, t, 15);
    const testsupport::Dense hd = testsupport::dense_hamiltonian(p, t, 15);
    for (int i = 0; i < 15; ++i)
      for (int j = 0; j < 15; ++j) CHECK(std::abs(h.at(i, j) - hd[i][j]) < 1e-12);
  }
}

TEST_CASE("Hamiltonian is periodic and Hermitian") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 10; ++k) {
    SystemParams p;
    p.chi = std::abs(u(rng));
    p.detuning = 5.0 * u(rng);
    p.omega1 = cplx(u(rng), u(rng));
    p.omega2 = cplx(u(rng), u(rng));
    p.delta_mod = 0.5 + std::abs(u(rng));
    const double t = 10.0 * std::abs(u(rng));
    const BandedOperator h0 = hamiltonian_at(p, t, 20);
    CHECK(h0.is_hermitian());
    CHECK(max_diff(h0, hamiltonian_at(p, t + p.period(), 20)) < 1e-12 * (1.0 + t));
  }
  const SystemParams c = curve1();
  CHECK(max_diff(hamiltonian_at(c, 0.0, 30), hamiltonian_at(c, 2.0 * std::numbers::pi / 5.0, 30)) < 1e-12);
}

TEST_CASE("Lindblad operators") {
  SystemParams p;
  LindbladPair z = lindblad_ops(p, 6);
  CHECK(z.l1 == build_annihilation(6));
  CHECK_FALSE(z.l2_active);
  CHECK(z.l2.is_zero());

  p.n_bath = 0.5;
  const LindbladPair h = lindblad_ops(p, 6);
  CHECK(h.l2_active);
  for (int n = 0; n < 5; ++n) {
    CHECK(h.l1.at(n, n + 1).real() == doctest::Approx(std::sqrt(1.5 * (n + 1))).epsilon(1e-14));
    CHECK(h.l2.at(n + 1, n).real() == doctest::Approx(std::sqrt(0.5 * (n + 1))).epsilon(1e-14));
  }

  p.n_bath = 1.0;
  const LindbladPair one = lindblad_ops(p, 8);
  for (int n = 0; n < 7; ++n)
    CHECK(std::abs(one.l2.at(n + 1, n)) / std::abs(one.l1.at(n, n + 1)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));

  p.n_bath = -0.1;
  CHECK_THROWS_AS(lindblad_ops(p, 6), InvalidParameter);
}

TEST_CASE("parameter validation names the field") {
  SystemParams p;
  p.n_bath = -1.0;
  try {
    p.validate();
    FAIL("expected InvalidParameter");
  } catch (const InvalidParameter& e) {
    CHECK(e.name() == "n_bath");
  }
  p.n_bath = 0.0;
  p.gamma_abs = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
  p.gamma_abs = 1.0;
  CHECK_NOTHROW(p.validate());
  CHECK(std::isinf(p.period()));
}

TEST_CASE("scaling transformation") {
  SystemParams p;
  p.chi = 0.1;
  p.detuning = -15.0;
  p.omega1 = 27.0;
  p.omega2 = 35.0;
  p.delta_mod = 5.0;
  p.n_bath = 0.2;

  CHECK(scale_params(p, 1.0) == p);

  const SystemParams s = scale_params(p, std::sqrt(2.0));
  CHECK(s.chi == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(s.detuning == doctest::Approx(-14.95).epsilon(1e-14));
  CHECK(s.omega1.real() == doctest::Approx(38.18).epsilon(2e-4));
  CHECK(s.omega2.real() == doctest::Approx(49.50).epsilon(2e-4));
  CHECK(s.delta_mod == p.delta_mod);
  CHECK(s.n_bath == p.n_bath);
  CHECK(s.gamma_abs == p.gamma_abs);

  SystemParams c1 = curve1();
  const SystemParams s14 = scale_params(c1, std::sqrt(14.0));
  CHECK(s14.chi == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(s14.omega1.real() == doctest::Approx(38.16).epsilon(2e-4));

  CHECK_THROWS_AS(scale_params(p, 0.0), InvalidParameter);
  CHECK_THROWS_AS(scale_params(p, -2.0), InvalidParameter);
}

TEST_CASE("scaling inverse and composition") {
  SystemParams p = curve1();
  p.omega1 = cplx(3.0, -1.0);
  for (double l1 : {std::sqrt(2.0), 3.0, 0.7}) {
    const SystemParams back = scale_params(scale_params(p, l1), 1.0 / l1);
    CHECK(back.chi == doctest::Approx(p.chi).epsilon(1e-15));
    CHECK(std::abs(back.omega1 - p.omega1) < 1e-14 * std::abs(p.omega1));
    CHECK(std::abs(back.detuning - p.detuning) < 1e-12);
    for (double l2 : {std::sqrt(14.0), 0.5}) {
      const SystemParams a = scale_params(scale_params(p, l1), l2);
      const SystemParams b = scale_params(p, l1 * l2);
      CHECK(a.chi == doctest::Approx(b.chi).epsilon(1e-15));
      CHECK(std::abs(a.omega2 - b.omega2) < 1e-14 * std::abs(b.omega2));
      CHECK(std::abs(a.detuning - b.detuning) < 1e-12);
    }
  }
}

TEST_CASE("regime heuristic") {
  SystemParams p;
  p.chi = 0.05;
  p.detuning = -15.0;
  p.delta_mod = 5.0;
  p.omega1 = 38.18;
  CHECK(classify_regime(p) == Regime::regular);
  p.omega2 = 38.18;
  CHECK(classify_regime(p) == Regime::chaotic);
  p.delta_mod = 0.5;
  CHECK(classify_regime(p) == Regime::indeterminate);
  p.delta_mod = 0.05;
  CHECK(classify_regime(p) == Regime::regular);
  p.delta_mod = 200.0;
  CHECK(classify_regime(p) == Regime::regular);
  p.delta_mod = 5.0;
  p.omega2 = 49.5;
  CHECK(classify_regime(p) == Regime::indeterminate);
  p.omega2 = 500.0;
  CHECK(classify_regime(p) == Regime::regular);
  CHECK(to_string(Regime::chaotic) == "chaotic");
}

}  // TEST_SUITE
