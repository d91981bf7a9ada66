#include "mfhd/fdr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfhd/chi2.hpp"
#include "mfhd/errors.hpp"

namespace mfhd {

void FdrConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("FDR level alpha must lie in (0, 1)");
  if (h < 1) throw DomainError("number of transforms h must be >= 1");
}

double default_d0(int h) { return h > 4 ? (h - 4 - 0.25) / 2.0 : -0.5; }

double FdrConfig::resolved_d0() const { return d0.value_or(default_d0(h)); }

double bp_bound(double p, double d0) {
  if (!(p >= 3.0)) throw DomainError("b_p requires p >= 3");
  const double log_p = std::log(p);
  return 2.0 * log_p + 2.0 * d0 * std::log(log_p);
}

double fallback_threshold(double p, int h) {
  if (!(p >= 3.0)) throw DomainError("fallback threshold requires p >= 3");
  const double log_p = std::log(p);
  return 2.0 * log_p + (h - 1) * std::log(log_p);
}

double fdp_hat(double t, std::span<const double> stats, int h) {
  const auto rejected =
      std::count_if(stats.begin(), stats.end(), [t](double w) { return w >= t; });
  const double p = static_cast<double>(stats.size());
  return p * chi2_survival(t, {h, 0.0}) /
         static_cast<double>(std::max<std::ptrdiff_t>(rejected, 1));
}

namespace {

std::vector<Index> rejections(std::span<const double> stats, double t) {
  std::vector<Index> out;
  for (std::size_t j = 0; j < stats.size(); ++j) {
    if (stats[j] >= t) out.push_back(static_cast<Index>(j));
  }
  return out;
}

}  // namespace

FdrSelection find_threshold(std::span<const double> stats, const FdrConfig& config) {
  config.validate();
  for (double w : stats) {
    if (!std::isfinite(w)) throw InputError("non-finite test statistic");
  }
  const double p = static_cast<double>(stats.size());
  const int h = config.h;
  FdrSelection out;
  out.search_cap = config.search_cap_override.value_or(bp_bound(p, config.resolved_d0()));

  auto accept = [&](double t) {
    out.threshold = t;
    out.rejected = rejections(stats, t);
    out.fdp_estimate = fdp_hat(t, stats, h);
    return out;
  };

  if (out.search_cap >= 0.0 && fdp_hat(0.0, stats, h) <= config.alpha) return accept(0.0);

  std::vector<double> sorted(stats.begin(), stats.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> knots;
  for (double w : sorted) {
    if (w > 0.0 && (knots.empty() || w > knots.back())) knots.push_back(w);
  }
  knots.push_back(std::numeric_limits<double>::infinity());

  double lower = 0.0;
  for (double upper : knots) {
    if (lower > out.search_cap) break;
    // R(t) on (lower, upper].
    const auto count = static_cast<double>(
        sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), upper));
    const double target = config.alpha * std::max(count, 1.0) / p;
    double t = target >= 1.0 ? lower : std::max(lower, chi2_quantile(target, {h, 0.0}));
    if (t > out.search_cap) break;
    if (t <= upper) {
      // Guard the last ulps of the quantile inversion.
      for (int nudge = 0; nudge < 64 && t < upper && fdp_hat(t, stats, h) > config.alpha;
           ++nudge) {
        t = std::nextafter(t, upper);
      }
      if (t <= out.search_cap && fdp_hat(t, stats, h) <= config.alpha) return accept(t);
    }
    lower = upper;
  }

  out.used_fallback = true;
  return accept(config.fallback_override.value_or(fallback_threshold(p, h)));
}

SelectionQuality evaluate_selection(const FdrSelection& selection,
                                    std::span<const Index> truth) {
  if (truth.empty()) throw DomainError("power is undefined for an empty active set");
  std::vector<Index> active(truth.begin(), truth.end());
  std::sort(active.begin(), active.end());
  std::size_t hits = 0;
  for (Index j : selection.rejected) {
    if (std::binary_search(active.begin(), active.end(), j)) ++hits;
  }
  const std::size_t r = selection.rejected.size();
  SelectionQuality q;
  q.fdp = static_cast<double>(r - hits) / static_cast<double>(std::max<std::size_t>(r, 1));
  q.power = static_cast<double>(hits) / static_cast<double>(active.size());
  return q;
}

}  // namespace mfhd
