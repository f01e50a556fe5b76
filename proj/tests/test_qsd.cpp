#include <doctest.h>

#include <cmath>
#include <random>

#include "kerrsim/error.hpp"
#include "kerrsim/qsd.hpp"
#include "support.hpp"

using namespace kerrsim;

namespace {

// Linear (chi = 0) mean-field orbit from alpha(0) = alpha0.
cplx linear_alpha(const SystemParams& p, cplx alpha0, double t) {
  const cplx i(0.0, 1.0);
  const auto particular = [&](double s) {
    return -i * p.omega1 / (0.5 + i * p.detuning) -
           i * p.omega2 * std::exp(-i * p.delta_mod * s) / (0.5 + i * (p.detuning - p.delta_mod));
  };
  return particular(t) + (alpha0 - particular(0.0)) * std::exp((-0.5 - i * p.detuning) * t);
}

SystemParams linear_driven() {
  SystemParams p;
  p.detuning = -2.0;
  p.omega1 = 1.0;
  p.omega2 = cplx(0.3, 0.4);
  p.delta_mod = 3.0;
  return p;
}

TrajectoryConfig grid(double dt, double t_end, double every, int dim) {
  TrajectoryConfig c;
  c.dt = dt;
  c.t_end = t_end;
  c.dim = dim;
  const auto steps = static_cast<long>(std::llround(every / dt));
  for (long k = 0; k * steps * dt <= t_end + 1e-12; ++k) c.record_times.push_back(k * steps * dt);
  return c;
}

}  // namespace

TEST_SUITE("qsd") {

TEST_CASE("Wiener increment moments") {
  Rng rng(2024);
  const double dt = 0.01;
  const int n = 100000;
  double abs2 = 0.0;
  cplx sq{}, cross{}, mean{};
  for (int k = 0; k < n; ++k) {
    const WienerPair w = draw_wiener(rng, dt);
    abs2 += std::norm(w.dxi1);
    sq += w.dxi1 * w.dxi1;
    cross += w.dxi1 * std::conj(w.dxi2);
    mean += w.dxi1;
  }
  CHECK(std::abs(abs2 / n / dt - 1.0) < 0.02);
  CHECK(std::abs(sq / double(n) / dt) < 0.02);
  CHECK(std::abs(cross / double(n) / dt) < 0.02);
  CHECK(std::abs(mean / double(n)) < 5.0 * std::sqrt(dt / n));

  Rng tiny(1);
  const WienerPair w = draw_wiener(tiny, 1e-20);
  CHECK(std::abs(w.dxi1) < 1e-8);
}

TEST_CASE("vacuum is stationary without drive or bath") {
  SystemParams p;
  p.chi = 0.7;
  p.detuning = -3.0;
  const FockVector vac = FockVector::vacuum(8);
  const WienerPair w{cplx(0.3, -0.1), cplx(0.2, 0.2)};
  CHECK(qsd_step(vac, p, 0.0, 0.01, w) == vac);
  for (QsdScheme s : {QsdScheme::euler_maruyama, QsdScheme::exponential_rk4}) {
    QsdStepper st(p, 8, 0.01, s);
    FockVector psi = vac;
    st.step(psi, 0.0, w);
    CHECK(std::abs(psi[0] - cplx(1.0, 0.0)) < 1e-15);
  }
}

TEST_CASE("banded Euler stepper reproduces the reference step") {
  std::mt19937_64 rng(9);
  SystemParams p;
  p.chi = 0.4;
  p.detuning = -1.5;
  p.omega1 = cplx(0.8, 0.1);
  p.omega2 = 0.5;
  p.delta_mod = 2.0;
  p.n_bath = 0.3;
  const int d = 14;
  QsdStepper st(p, d, 1e-3, QsdScheme::euler_maruyama);
  Rng wr(4);
  for (int k = 0; k < 20; ++k) {
    const FockVector psi = testsupport::random_state(d, rng);
    const WienerPair w = draw_wiener(wr, 1e-3);
    const double t = 0.1 * k;
    const FockVector ref = qsd_step(psi, p, t, 1e-3, w);
    FockVector got = psi;
    st.step(got, t, w);
    for (int n = 0; n < d; ++n) CHECK(std::abs(got[n] - ref[n]) < 1e-12);
    CHECK(std::abs(got.norm_squared() - 1.0) < 1e-12);
  }
}

TEST_CASE("oversized steps are rejected and name the dominant term") {
  SystemParams p;
  p.omega1 = 50.0;
  const FockVector vac = FockVector::vacuum(20);
  try {
    qsd_step(vac, p, 0.0, 0.1, WienerPair{});
    FAIL("expected StepTooLarge");
  } catch (const StepTooLarge& e) {
    CHECK(std::string(e.what()).find("dominant term: hamiltonian") != std::string::npos);
  }

  QsdStepper st(p, 20, 0.1, QsdScheme::exponential_rk4);
  FockVector psi = vac;
  CHECK_THROWS_AS(st.step(psi, 0.0, WienerPair{}), StepTooLarge);
  CHECK(psi == vac);
  CHECK_FALSE(st.step(psi, 0.0, WienerPair{}, 0, false));
  CHECK(psi == vac);
  CHECK(st.step(psi, 0.0, WienerPair{}, 6, false));

  TrajectoryConfig c = grid(0.1, 1.0, 0.5, 20);
  c.max_refinement = 0;
  CHECK_THROWS_AS(run_trajectory(p, c, vac), StepTooLarge);
  c.max_refinement = 8;
  p.omega1 = 1.0;
  CHECK_NOTHROW(run_trajectory(p, c, vac));
}

TEST_CASE("coherent states follow the linear mean-field orbit") {
  const SystemParams p = linear_driven();
  const int d = 30;
  const BandedOperator a = build_annihilation(d);
  for (QsdScheme s : {QsdScheme::exponential_rk4, QsdScheme::euler_maruyama}) {
    const double dt = 0.5 / std::ceil(0.5 / default_dt(p, d, s));
    TrajectoryConfig c = grid(dt, 4.0, 0.5, d);
    c.scheme = s;
    c.seed = 77;
    c.snapshot_times = c.record_times;
    const auto recs = run_trajectory(p, c, make_coherent(cplx(0.5, -0.2), d));
    // L = a leaves coherent states coherent, so the noise term vanishes.
    const double tol = s == QsdScheme::exponential_rk4 ? 1e-7 : 2e-2;
    for (const auto& r : recs) {
      const cplx ref = linear_alpha(p, cplx(0.5, -0.2), r.time);
      CHECK(std::abs(expect(a, *r.amps_snapshot) - ref) < tol);
      CHECK(r.n_mean == doctest::Approx(std::norm(expect(a, *r.amps_snapshot))).epsilon(1e-6));
    }
  }
}

TEST_CASE("trajectories are deterministic in the seed") {
  SystemParams p;
  p.chi = 0.7;
  p.detuning = -1.0;
  p.omega1 = 1.5;
  p.omega2 = 1.5;
  p.delta_mod = 5.0;
  p.n_bath = 0.2;
  TrajectoryConfig c = grid(0.005, 3.0, 0.25, 20);
  c.seed = 12345;
  const auto r1 = run_trajectory(p, c, FockVector::vacuum(20));
  const auto r2 = run_trajectory(p, c, FockVector::vacuum(20));
  REQUIRE(r1.size() == r2.size());
  bool identical = true;
  for (std::size_t k = 0; k < r1.size(); ++k)
    identical = identical && r1[k].n_mean == r2[k].n_mean && r1[k].n2_mean == r2[k].n2_mean;
  CHECK(identical);
  c.seed = 12346;
  const auto r3 = run_trajectory(p, c, FockVector::vacuum(20));
  CHECK(r3.back().n_mean != r1.back().n_mean);

  for (const auto& r : r1) {
    CHECK(r.n2_mean >= r.n_mean * r.n_mean - 1e-9);
    CHECK(r.tail_pop < c.tail_threshold);
  }
}

TEST_CASE("norm stays at one after every step") {
  SystemParams p;
  p.chi = 0.7;
  p.detuning = -15.0;
  p.omega1 = 10.2;
  p.omega2 = 13.5;
  p.delta_mod = 5.0;
  const int d = 60;
  const double dt = 0.01 / std::ceil(0.01 / default_dt(p, d, QsdScheme::exponential_rk4));
  TrajectoryConfig c = grid(dt, 3.0, 0.01, d);
  c.snapshot_times = c.record_times;
  c.seed = 3;
  double worst = 0.0;
  for (const auto& r : run_trajectory(p, c, FockVector::vacuum(d)))
    worst = std::max(worst, std::abs(r.amps_snapshot->norm_squared() - 1.0));
  CHECK(worst < 1e-12);
}

TEST_CASE("noise substeps share the Brownian path with finer steps") {
  SystemParams p;
  p.chi = 0.1;
  p.detuning = -1.0;
  p.omega1 = 0.5;
  p.omega2 = 0.5;
  p.delta_mod = 2.0;
  const int d = 12;
  const double base = 0.008;
  const auto run = [&](double dt, int sub) {
    TrajectoryConfig c = grid(dt, 2.0, 2.0, d);
    c.noise_substeps = sub;
    c.seed = 99;
    c.scheme = QsdScheme::euler_maruyama;
    return run_trajectory(p, c, FockVector::vacuum(d)).back().n_mean;
  };
  // Pathwise (strong) convergence only shows up when the paths coincide.
  const double fine = run(base / 16, 1);
  const double e1 = std::abs(run(base, 16) - fine);
  const double e2 = std::abs(run(base / 4, 4) - fine);
  CHECK(e2 < e1);
  CHECK(e2 < 0.05);
}

TEST_CASE("truncation overflow carries the time") {
  SystemParams p;
  p.omega1 = 3.0;
  TrajectoryConfig c = grid(0.01, 5.0, 0.5, 12);
  try {
    run_trajectory(p, c, FockVector::vacuum(12));
    FAIL("expected TruncationError");
  } catch (const TruncationError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() <= 5.0);
  }
  CHECK_THROWS_AS(run_trajectory(p, c, FockVector::vacuum(13)), DimensionMismatch);
}

TEST_CASE("configuration checks") {
  TrajectoryConfig c = grid(0.01, 1.0, 0.1, 10);
  CHECK_NOTHROW(c.validate());
  CHECK(c.total_steps() == 100);
  CHECK(c.record_steps()[3] == 30);
  c.record_times.insert(c.record_times.begin() + 1, 0.05);
  CHECK_NOTHROW(c.validate());
  c.record_times[1] = 0.0501;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  c.record_times.erase(c.record_times.begin() + 1);
  c.record_times.push_back(0.5);
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  c.record_times.pop_back();
  c.snapshot_times = {0.25};
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  c.snapshot_times = {0.3};
  CHECK_NOTHROW(c.validate());
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  CHECK(qsd_scheme_from_string("euler_maruyama") == QsdScheme::euler_maruyama);
  CHECK_THROWS_AS(qsd_scheme_from_string("milstein"), InvalidParameter);
}

TEST_CASE("default truncation and step") {
  CHECK(default_dim(0.0) == 10);
  CHECK(default_dim(100.0) == 210);
  CHECK(default_dim(15.0) == static_cast<int>(std::ceil(25.0 + 10.0 * std::sqrt(15.0))));
  SystemParams p;
  p.chi = 0.7;
  p.detuning = -15.0;
  p.omega1 = 10.2;
  p.omega2 = 13.5;
  const double rate = std::max(15.0 + 0.7 * 59.0 * 59.0 + 2.0 * 23.7 * std::sqrt(60.0), 60.0);
  CHECK(default_dt(p, 60, QsdScheme::euler_maruyama) == doctest::Approx(0.05 / rate));
  CHECK(default_dt(p, 60, QsdScheme::exponential_rk4) > default_dt(p, 60, QsdScheme::euler_maruyama));
  p.n_bath = 0.5;
  CHECK(default_dt(p, 24, QsdScheme::exponential_rk4) <= 0.05 / (1.5 * 24.0) * (1.0 + 1e-12));
}

}  // TEST_SUITE
