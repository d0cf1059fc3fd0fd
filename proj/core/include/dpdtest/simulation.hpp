#pragma once

#include "dpdtest/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dpdtest {

enum class SimMode { size, power };
/// How the second parameter of N(10, 5) and N(16, 5) is read.
enum class DesignScale { variance, sd };

const char* to_string(SimMode mode);
SimMode sim_mode_from_string(const std::string& s);

struct SimConfig {
  std::vector<Index> sample_sizes{100};
  int reps = 1000;
  Vector beta0 = (Vector(2) << 3.0, 2.0).finished();
  double sigma_true = 1.7320508075688772;  // sqrt(3)
  std::vector<double> tau_gamma{0.0, 0.5, 1.0};
  std::vector<double> e_err{0.0};
  std::vector<double> e_x{0.0};
  double alpha = 0.05;
  std::uint64_t master_seed = 20240601;
  SimMode mode = SimMode::size;
  DesignScale design_scale = DesignScale::variance;
  unsigned threads = 0;  // 0: hardware concurrency

  /// Throws UsageError on out-of-range entries.
  void validate() const;
};

struct SimResult {
  Index n = 0;
  double tau = 0.0;
  double e_err = 0.0;
  double e_x = 0.0;
  SimMode mode = SimMode::size;
  double rejection_rate = 0.0;
  double mc_stderr = 0.0;
  int reps = 0;
  int failures = 0;
  bool flagged = false;          // more than 1% failed replications
  double wall_time_seconds = 0;  // time spent on the cell's data group, shared across tau
};

struct SimRun {
  std::vector<SimResult> results;
  double wall_time_seconds = 0.0;
  unsigned threads_used = 1;
};

/// SplitMix64 step; also used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);
/// Seed for a stream identified by `keys` under `master` (order-sensitive).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys);

/// n x 2 design [1, z], z ~ N(10, 5) under `scale`.
Matrix gen_design(Index n, std::uint64_t seed, DesignScale scale = DesignScale::variance);

/// (1 - e_err) N(0, sigma^2) + e_err N(10, sigma^2), membership drawn per draw.
Vector gen_errors_contaminated(Index n, double e_err, std::uint64_t seed,
                               double sigma = 1.7320508075688772);

/// Replaces floor(e_x n) randomly chosen entries of z: by N(16, 5) draws in
/// size mode, by z_i ((2 - Delta_n)/2)^2 - Delta_n in power mode.
Vector replace_leverage(const Vector& z, double e_x, SimMode mode, double delta_n,
                        std::uint64_t seed, DesignScale scale = DesignScale::variance);

/// Runs every (n, e_err, e_x) cell for `reps` replications; within a
/// replication all tau share the same data. Output is independent of the
/// thread count.
SimRun empirical_size_power(const SimConfig& config);

}  // namespace dpdtest
