// simulate <config-file> [--seed S] [--workers W] [--out DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure, 1 other.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kerrsim/config.hpp"
#include "kerrsim/error.hpp"
#include "kerrsim/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void print_summary(const kerrsim::RunResult& r, const kerrsim::RunConfig& cfg) {
  std::cout << "mode: " << kerrsim::to_string(cfg.mode) << "\n";
  if (r.meta.contains("dim")) std::cout << "dim: " << r.meta["dim"] << ", dt: " << r.meta["dt"] << "\n";
  if (r.stats && !r.stats->times.empty()) {
    const auto& s = *r.stats;
    std::cout << "records: " << s.times.size() << ", final <n> = " << s.n_mean.back()
              << ", final Q (rho) = " << s.q_rho.back() << "\n";
  }
  for (const auto& w : r.wigner) std::cout << "wigner t=" << w.time << " integral=" << w.integral << "\n";
  if (r.lyapunov) std::cout << "lyapunov exponent: " << r.lyapunov->exponent << "\n";
  if (r.poincare) std::cout << "poincare points: " << r.poincare->points.size() << "\n";
  for (const auto& row : r.sweep) std::cout << "param " << row.param << ": Q_min = " << row.q_min << "\n";
  if (r.scale) {
    std::cout << "scale check lambda=" << r.scale->lambda
              << ": max |dQ| over last period = " << r.scale->max_abs_diff_last_period << "\n";
    if (r.scale->classical_max_rel_error) {
      std::cout << "classical equivariance error: " << *r.scale->classical_max_rel_error << "\n";
    }
  }
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "output: " << cfg.output.dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly driven dissipative Kerr oscillator simulator"};
  std::string config_path;
  kerrsim::RunOverrides overrides;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir;
  app.add_option("config", config_path, "Run configuration (JSON)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Base seed of the trajectory ensemble");
  auto* workers_opt = app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (*seed_opt) overrides.seed = seed;
  if (*workers_opt) overrides.workers = workers;
  if (*out_opt) overrides.out_dir = out_dir;

  try {
    const auto start = std::chrono::steady_clock::now();
    const kerrsim::RunConfig cfg = kerrsim::apply_overrides(kerrsim::load_config(config_path), overrides);
    const kerrsim::RunResult result = kerrsim::execute(cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    kerrsim::emit_outputs(result, cfg, wall);
    print_summary(result, cfg);
    return 0;
  } catch (const kerrsim::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const kerrsim::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
