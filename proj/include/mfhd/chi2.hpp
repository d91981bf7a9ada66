#pragma once

#include <vector>

namespace mfhd {

/// Degrees of freedom and noncentrality of a chi-square law.
struct Chi2Params {
  int df = 1;
  double ncp = 0.0;

  void validate() const;
};

/// log Gamma(x) for x > 0 (Lanczos, g = 7). Reentrant, unlike std::lgamma.
double log_gamma(double x);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Pr(chi2 >= t). Returns 1 for t <= 0.
double chi2_survival(double t, const Chi2Params& params);

/// Upper-tail quantile: the t with chi2_survival(t) == q, for q in (0, 1).
/// Throws DomainError outside that range.
double chi2_quantile(double q, const Chi2Params& params);

struct TailBoundReport {
  std::vector<double> p;
  std::vector<double> cap;    // b_p
  std::vector<double> tail;   // G(b_p)
  std::vector<double> ratio;  // G(b_p) * p / (log p)^(h/2 - d0 - 1)
  double spread = 1.0;        // max(ratio) / min(ratio)
  bool bounded = true;        // spread < 10
};

/// Evaluates the normalized central tail G(b_p) along a grid of p, with
/// b_p = 2 log p + 2 d0 log log p and G the chi2_h survival function.
TailBoundReport tail_bound_check(const std::vector<double>& p_grid, int h,
                                 double d0);

}  // namespace mfhd
