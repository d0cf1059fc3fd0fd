#include "dpdtest/simulation.hpp"

#include "dpdtest/dpd_test.hpp"
#include "dpdtest/errors.hpp"
#include "dpdtest/normal_lrm.hpp"
#include "dpdtest/restriction.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

namespace dpdtest {
namespace {

using Clock = std::chrono::steady_clock;

double design_sd(DesignScale scale) { return scale == DesignScale::variance ? std::sqrt(5.0) : 5.0; }

struct Cell {
  std::size_t n_index;
  std::size_t err_index;
  std::size_t x_index;
};

enum Outcome : std::uint8_t { kAccept = 0, kReject = 1, kFailure = 2 };

}  // namespace

const char* to_string(SimMode mode) { return mode == SimMode::size ? "size" : "power"; }

SimMode sim_mode_from_string(const std::string& s) {
  if (s == "size") return SimMode::size;
  if (s == "power") return SimMode::power;
  throw UsageError("unknown simulation mode '" + s + "' (expected size or power)");
}

void SimConfig::validate() const {
  if (reps < 1) throw UsageError("reps must be >= 1");
  if (sample_sizes.empty()) throw UsageError("no sample sizes given");
  for (Index n : sample_sizes) {
    if (n < 3) throw UsageError("sample sizes must be >= 3");
  }
  if (beta0.size() != 2) throw UsageError("beta0 must have two entries (intercept, slope)");
  if (!(sigma_true > 0.0)) throw UsageError("sigma_true must be positive");
  if (tau_gamma.empty()) throw UsageError("no tau values given");
  for (double t : tau_gamma) {
    if (!(t >= 0.0)) throw UsageError("tau must be >= 0");
  }
  for (const auto* list : {&e_err, &e_x}) {
    if (list->empty()) throw UsageError("contamination lists may not be empty");
    for (double e : *list) {
      if (!(e >= 0.0 && e <= 0.5)) throw UsageError("contamination proportions must lie in [0, 0.5]");
    }
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t state = master;
  std::uint64_t out = splitmix64(state);
  for (std::uint64_t k : keys) {
    state = out ^ (k + 0x632be59bd9b4e019ULL);
    out = splitmix64(state);
  }
  return out;
}

Matrix gen_design(Index n, std::uint64_t seed, DesignScale scale) {
  if (n < 2) throw UsageError("design needs n >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(10.0, design_sd(scale));
  Matrix x(n, 2);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = z(rng);
  }
  return x;
}

Vector gen_errors_contaminated(Index n, double e_err, std::uint64_t seed, double sigma) {
  if (!(e_err >= 0.0 && e_err <= 0.5)) throw UsageError("e_err must lie in [0, 0.5]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Vector e(n);
  for (Index i = 0; i < n; ++i) {
    // Both draws are always taken so different e_err share the same stream.
    const bool outlier = u(rng) < e_err;
    e(i) = (outlier ? 10.0 : 0.0) + sigma * z(rng);
  }
  return e;
}

Vector replace_leverage(const Vector& z, double e_x, SimMode mode, double delta_n,
                        std::uint64_t seed, DesignScale scale) {
  if (!(e_x >= 0.0 && e_x <= 0.5)) throw UsageError("e_x must lie in [0, 0.5]");
  const Index n = z.size();
  const auto count = static_cast<Index>(std::floor(e_x * static_cast<double>(n) + 1e-9));
  Vector out = z;
  if (count == 0) return out;
  std::mt19937_64 rng(seed);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  // Partial Fisher-Yates: the first `count` slots become a uniform subset.
  for (Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  std::normal_distribution<double> lev(16.0, design_sd(scale));
  const double factor = 0.25 * (2.0 - delta_n) * (2.0 - delta_n);
  for (Index k = 0; k < count; ++k) {
    const Index i = idx[static_cast<std::size_t>(k)];
    out(i) = mode == SimMode::size ? lev(rng) : z(i) * factor - delta_n;
  }
  return out;
}

SimRun empirical_size_power(const SimConfig& config) {
  config.validate();
  const auto run_start = Clock::now();

  std::vector<Cell> cells;
  for (std::size_t a = 0; a < config.sample_sizes.size(); ++a) {
    for (std::size_t b = 0; b < config.e_err.size(); ++b) {
      for (std::size_t c = 0; c < config.e_x.size(); ++c) cells.push_back({a, b, c});
    }
  }
  std::vector<Matrix> designs;
  for (Index n : config.sample_sizes) {
    designs.push_back(gen_design(n, derive_seed(config.master_seed, {1, static_cast<std::uint64_t>(n)}),
                                 config.design_scale));
  }

  const std::size_t reps = static_cast<std::size_t>(config.reps);
  const std::size_t n_tau = config.tau_gamma.size();
  const std::size_t units = cells.size() * reps;
  std::vector<std::uint8_t> outcome(units * n_tau, kFailure);
  std::vector<double> unit_seconds(units, 0.0);

  auto work = [&](std::size_t unit) {
    const auto t0 = Clock::now();
    const Cell& cell = cells[unit / reps];
    const std::uint64_t rep = unit % reps;
    const Index n = config.sample_sizes[cell.n_index];
    const auto un = static_cast<std::uint64_t>(n);
    const Matrix& x = designs[cell.n_index];
    const double delta_n = 1.0 / std::sqrt(2.0 * static_cast<double>(n));

    Vector beta = config.beta0;
    if (config.mode == SimMode::power) beta.array() += delta_n;
    const Vector errors = gen_errors_contaminated(
        n, config.e_err[cell.err_index], derive_seed(config.master_seed, {2, un, rep}),
        config.sigma_true);
    const Vector y = x * beta + errors;
    Matrix fit_x = x;
    fit_x.col(1) = replace_leverage(x.col(1), config.e_x[cell.x_index], config.mode, delta_n,
                                    derive_seed(config.master_seed, {3, un, rep}),
                                    config.design_scale);

    try {
      const NormalLinearModel model(fit_x);
      const ObservationSet data{y, fit_x};
      const Restriction h0 = Restriction::first_components(config.beta0, 2);
      for (std::size_t k = 0; k < n_tau; ++k) {
        const double tau = config.tau_gamma[k];
        try {
          const TestReport rep_k = run_test(model, data, h0, tau, tau, config.alpha);
          outcome[unit * n_tau + k] = rep_k.reject ? kReject : kAccept;
        } catch (const Error&) {
          outcome[unit * n_tau + k] = kFailure;
        }
      }
    } catch (const Error&) {
      // Singular design after replacement: every tau fails.
    }
    unit_seconds[unit] = std::chrono::duration<double>(Clock::now() - t0).count();
  };

  unsigned threads = config.threads == 0 ? std::thread::hardware_concurrency() : config.threads;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(units)));
  if (threads == 1) {
    for (std::size_t u = 0; u < units; ++u) work(u);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t u = next.fetch_add(1); u < units; u = next.fetch_add(1)) work(u);
      });
    }
    for (auto& th : pool) th.join();
  }

  SimRun run;
  run.threads_used = threads;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    double seconds = 0.0;
    for (std::size_t r = 0; r < reps; ++r) seconds += unit_seconds[ci * reps + r];
    for (std::size_t k = 0; k < n_tau; ++k) {
      int rejects = 0;
      int failures = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        const std::uint8_t o = outcome[(ci * reps + r) * n_tau + k];
        if (o == kReject) ++rejects;
        if (o == kFailure) ++failures;
      }
      SimResult res;
      res.n = config.sample_sizes[cells[ci].n_index];
      res.tau = config.tau_gamma[k];
      res.e_err = config.e_err[cells[ci].err_index];
      res.e_x = config.e_x[cells[ci].x_index];
      res.mode = config.mode;
      res.reps = config.reps;
      res.failures = failures;
      const int valid = config.reps - failures;
      res.rejection_rate = valid > 0 ? static_cast<double>(rejects) / valid : 0.0;
      res.mc_stderr = valid > 0 ? std::sqrt(res.rejection_rate * (1.0 - res.rejection_rate) / valid)
                                : 0.0;
      res.flagged = failures > 0.01 * config.reps;
      res.wall_time_seconds = seconds;
      run.results.push_back(res);
    }
  }
  run.wall_time_seconds = std::chrono::duration<double>(Clock::now() - run_start).count();
  return run;
}

}  // namespace dpdtest
