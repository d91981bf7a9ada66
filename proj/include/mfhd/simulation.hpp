#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mfhd/data_gen.hpp"
#include "mfhd/fdr.hpp"
#include "mfhd/score_test.hpp"

namespace mfhd {

/// Coordinates shown in the rejection tables: the first five and last five.
std::vector<Index> reported_coordinates(int p);

/// Mean and Monte-Carlo standard error of a 0/1 or bounded per-replication
/// quantity.
struct MonteCarloCell {
  double mean = 0.0;
  double se = 0.0;
};
MonteCarloCell summarize(const std::vector<double>& values);

struct RejectionStudy {
  std::vector<Index> coords;
  std::vector<bool> active;
  std::vector<MonteCarloCell> rate;            // per coordinate
  std::vector<std::vector<double>> statistic;  // [coordinate][replication]
  std::vector<std::vector<double>> p_value;    // [coordinate][replication]
  int reps = 0;
  int regularized = 0;  // tests that needed the omega ridge
};

/// Per-replication seed for cross-validation folds.
std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t rep);

/// Rejection rate of H0j at `level` for each coordinate over `reps`
/// replications, shared transform fits within each replication.
/// Replications run concurrently on `threads` workers.
RejectionStudy simulate_rejections(const SimDesign& design,
                                   const std::vector<Index>& coords,
                                   const TestConfig& config, int reps,
                                   double level, int threads);

struct FdrStudy {
  MonteCarloCell fdr;
  MonteCarloCell power;
  MonteCarloCell fallback;  // fraction of replications using the fallback
  MonteCarloCell rejected;  // mean rejected-set size
  int reps = 0;
};

/// Full-pipeline FDR selection over all p coordinates per replication.
FdrStudy simulate_fdr(const SimDesign& design, const TestConfig& config,
                      const FdrConfig& fdr, int reps, int threads);

struct PowerSweep {
  std::vector<int> h_values;
  std::vector<Index> coords;
  std::vector<bool> active;
  std::vector<std::vector<MonteCarloCell>> rate;  // [h index][coordinate]
  int reps = 0;
};

/// Rejection rate versus h. Nuisance fits do not depend on h and are shared
/// across the sweep within a replication.
PowerSweep power_sweep(const SimDesign& design, const std::vector<Index>& coords,
                       const TestConfig& config, const std::vector<int>& h_values,
                       int reps, double level, int threads);

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF, p-value from
/// the asymptotic Kolmogorov law with Stephens' small-sample correction.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

}  // namespace mfhd
