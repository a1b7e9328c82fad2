#pragma once

// Monte Carlo simulation of the Markov branching process by exponential
// races: with k particles alive the next death comes after Exp(k lambda) and
// the dying particle is replaced by an offspring count drawn from {p_k}.
//
// Replicate i draws from std::mt19937_64 seeded with
//   splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15),
// uniforms are (x >> 11) * 2^-53, so results do not depend on the thread count.

#include <cstdint>
#include <string>
#include <vector>

#include "branchkit/law.hpp"

namespace branchkit {

struct SimConfig {
  double horizon = 1.0;
  std::uint64_t replicates = 10000;
  std::uint64_t seed = 1;
  std::uint64_t population_cap = 10'000'000;
  bool record_w = true;
  // Number of Z_t / M_t samples kept in the output; the summary uses all.
  std::size_t w_samples_kept = 1000;
  // Worker threads; 0 means hardware concurrency, capped by BRANCHKIT_THREADS.
  unsigned threads = 0;
  // Horizon for extinction_conditioned_sample.
  double t_max = 40.0;
};

struct SimStats {
  std::uint64_t seed = 0;
  std::uint64_t replicates = 0;
  double horizon = 0.0;
  std::uint64_t population_cap = 0;
  std::uint64_t censored = 0;  // replicates that reached the cap
  // P(Z_t = k) estimates over uncensored replicates; counts alongside.
  std::vector<double> histogram;
  std::vector<std::uint64_t> counts;
  double survival_frequency = 0.0;  // censored replicates count as surviving
  double mean = 0.0;                // of Z_t over uncensored replicates
  double variance = 0.0;
  double population_mean = 0.0;     // M_t
  // Z_t / M_t
  double w_mean = 0.0;
  double w_std_error = 0.0;
  std::vector<double> w_samples;
  // Law of Z_t given Z_t > 0.
  std::vector<double> conditional_histogram;
  // Filled by extinction_conditioned_sample.
  double t_max = 0.0;
  std::uint64_t extinct = 0;      // extinct by t_max
  std::uint64_t survived = 0;     // population large enough that extinction is negligible
  std::uint64_t unresolved = 0;   // alive at t_max below that level
  double extinction_frequency = 0.0;
  std::vector<double> extinction_conditioned_histogram;
  bool warning = false;
  std::string warning_message;
};

SimStats simulate(const OffspringLaw& law, const SimConfig& config);

/// Runs each path to extinction or t_max and keeps Z_t of the paths that die
/// out, approximating the law of Z_t given eventual extinction.
SimStats extinction_conditioned_sample(const OffspringLaw& law, const SimConfig& config);

/// As simulate(), but every path is stopped at t/2 and its survivors are
/// restarted for the remaining t/2.
SimStats simulate_two_stage(const OffspringLaw& law, const SimConfig& config);

std::string to_json(const SimStats& stats);

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Goodness of fit of counts against probabilities, pooling bins with
/// expected count below min_expected; the mass beyond the table is one bin.
ChiSquare chi_square_gof(const std::vector<std::uint64_t>& counts, const std::vector<double>& probs,
                         double min_expected = 5.0);
/// Two-sample homogeneity test on count tables.
ChiSquare chi_square_two_sample(const std::vector<std::uint64_t>& a,
                                const std::vector<std::uint64_t>& b, double min_count = 10.0);

/// Worker count after applying BRANCHKIT_THREADS.
unsigned worker_threads(unsigned requested = 0);

}  // namespace branchkit
