#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mfhd/penalized_regression.hpp"

namespace mfhd {

struct FdrConfig {
  double alpha = 0.1;
  int h = 5;
  std::optional<double> d0;                   // default_d0(h) when unset
  std::optional<double> search_cap_override;  // replaces b_p
  std::optional<double> fallback_override;    // replaces 2 log p + (h-1) log log p

  void validate() const;
  double resolved_d0() const;
};

/// (h - 4 - 0.25) / 2 for h > 4, so that 2 d0 stays just below h - 4;
/// -0.5 otherwise.
double default_d0(int h);

/// 2 log p + 2 d0 log log p. Requires p >= 3.
double bp_bound(double p, double d0);

/// 2 log p + (h - 1) log log p. Requires p >= 3.
double fallback_threshold(double p, int h);

/// p * G(t) / max(#{j : W_j >= t}, 1), G the chi2_h survival function.
double fdp_hat(double t, std::span<const double> stats, int h);

struct FdrSelection {
  double threshold = 0.0;
  std::vector<Index> rejected;  // ascending, {j : W_j >= threshold}
  double fdp_estimate = 0.0;
  bool used_fallback = false;
  double search_cap = 0.0;
};

/// Smallest t in [0, cap] with fdp_hat(t) <= alpha, else the fallback
/// threshold.
///
/// R(t) is constant on each interval (w_(i-1), w_(i)] between consecutive
/// distinct statistics and G is continuous and decreasing there, so the first
/// qualifying t of an interval is max(w_(i-1), G^-1(alpha R / p)). Intervals
/// are scanned in increasing order; the result is the exact infimum rather
/// than the nearest observed statistic above it. The rejected set is the
/// same either way.
FdrSelection find_threshold(std::span<const double> stats, const FdrConfig& config);

struct SelectionQuality {
  double fdp = 0.0;
  double power = 0.0;
};

/// False discovery proportion and power of a rejection set against the true
/// active set. Throws DomainError when `truth` is empty.
SelectionQuality evaluate_selection(const FdrSelection& selection,
                                    std::span<const Index> truth);

}  // namespace mfhd
