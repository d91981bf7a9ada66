#include "mfhd/chi2.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "mfhd/errors.hpp"

namespace mfhd {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxTerms = 100000;

// P(a, x) by its power series; accurate for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < kMaxTerms; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Q(a, x) by the Legendre continued fraction (modified Lentz); x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double frac = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    frac *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - log_gamma(a)) * frac;
}

double central_survival(double t, int df) {
  return gamma_q(0.5 * df, 0.5 * t);
}

// Poisson(ncp/2) mixture of central chi2_{df + 2j} tails, summed outward from
// the Poisson mode until weights drop below 1e-14 relative to the total.
double noncentral_survival(double t, int df, double ncp) {
  const double mu = 0.5 * ncp;
  const double a0 = 0.5 * df;
  const double x = 0.5 * t;
  const auto mode = static_cast<long>(std::floor(mu));
  auto log_weight = [&](long j) {
    return -mu + j * std::log(mu) - log_gamma(static_cast<double>(j) + 1.0);
  };

  double sum = 0.0;
  double weight_total = 0.0;
  for (long j = mode;; ++j) {
    const double w = std::exp(log_weight(j));
    sum += w * gamma_q(a0 + j, x);
    weight_total += w;
    if ((j > mode && w < 1e-14 * weight_total) || j - mode > kMaxTerms) break;
  }
  for (long j = mode - 1; j >= 0; --j) {
    const double w = std::exp(log_weight(j));
    const double term = w * gamma_q(a0 + j, x);
    sum += term;
    weight_total += w;
    if (w < 1e-14 * weight_total && term < 1e-14 * sum) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace

void Chi2Params::validate() const {
  if (df < 1) throw DomainError("chi-square degrees of freedom must be >= 1");
  if (!(ncp >= 0.0) || !std::isfinite(ncp)) {
    throw DomainError("chi-square noncentrality must be finite and >= 0");
  }
}

double log_gamma(double x) {
  static constexpr std::array<double, 9> kCoef = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (!(x > 0.0)) throw DomainError("log_gamma requires x > 0");
  if (x < 0.5) {
    // Reflection keeps the series in its accurate range.
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) -
           log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double acc = kCoef[0];
  for (int i = 1; i < 9; ++i) acc += kCoef[i] / (z + i);
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(acc);
}

double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("incomplete gamma requires a > 0");
  if (std::isnan(x)) return x;
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw DomainError("incomplete gamma requires a > 0");
  if (std::isnan(x)) return x;
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
}

double chi2_survival(double t, const Chi2Params& params) {
  params.validate();
  if (std::isnan(t)) return t;
  if (t <= 0.0) return 1.0;
  if (params.ncp == 0.0) return central_survival(t, params.df);
  return noncentral_survival(t, params.df, params.ncp);
}

double chi2_quantile(double q, const Chi2Params& params) {
  params.validate();
  if (!(q > 0.0 && q < 1.0)) {
    throw DomainError("chi-square quantile requires q in (0, 1)");
  }
  double lo = 0.0;
  double hi = std::max(1.0, params.df + params.ncp);
  while (chi2_survival(hi, params) > q) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  }
  // Survival is decreasing: keep S(lo) > q >= S(hi) and bisect to adjacency.
  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (chi2_survival(mid, params) > q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

TailBoundReport tail_bound_check(const std::vector<double>& p_grid, int h,
                                 double d0) {
  if (h < 2) throw DomainError("tail bound check requires h >= 2");
  TailBoundReport report;
  const Chi2Params law{h, 0.0};
  for (double p : p_grid) {
    if (!(p > std::numbers::e)) {
      throw DomainError("tail bound check requires p > e (log log p > 0)");
    }
    const double log_p = std::log(p);
    const double cap = 2.0 * log_p + 2.0 * d0 * std::log(log_p);
    const double tail = chi2_survival(cap, law);
    report.p.push_back(p);
    report.cap.push_back(cap);
    report.tail.push_back(tail);
    report.ratio.push_back(tail * p / std::pow(log_p, 0.5 * h - d0 - 1.0));
  }
  if (!report.ratio.empty()) {
    const auto [mn, mx] =
        std::minmax_element(report.ratio.begin(), report.ratio.end());
    report.spread = *mx / *mn;
    report.bounded = std::isfinite(report.spread) && report.spread < 10.0;
  }
  return report;
}

}  // namespace mfhd
