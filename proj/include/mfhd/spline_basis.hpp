#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mfhd {

inline constexpr int kDefaultNumTransforms = 5;

/// Knots of a piecewise-linear (degree one) B-spline basis on the response.
///
/// The basis has h hat functions. Function k peaks at knot k, where knot 0 is
/// `boundary_low`, knots 1..h-2 are the inner knots and knot h-1 is
/// `boundary_high`. Immutable after construction.
class KnotSet {
 public:
  KnotSet(double boundary_low, double boundary_high, std::vector<double> inner);

  double boundary_low() const { return low_; }
  double boundary_high() const { return high_; }
  const std::vector<double>& inner() const { return inner_; }
  int h() const { return static_cast<int>(inner_.size()) + 2; }

  /// All h knots in increasing order.
  std::vector<double> all() const;

 private:
  double low_;
  double high_;
  std::vector<double> inner_;
};

/// Boundaries at min/max of `y`, inner knots at the k/(h-1) empirical
/// quantiles. Throws DegenerateBasisError when y has fewer than h distinct
/// values.
KnotSet make_knots(std::span<const double> y, int h);

/// Order-statistic interpolation at position (n-1)*prob of the sorted sample.
double empirical_quantile(std::span<const double> sorted, double prob);

/// Values of the h hat functions at `y_value`; clamps outside the boundary.
Eigen::VectorXd eval_basis(double y_value, const KnotSet& knots);

/// Row i is eval_basis(y[i]).
Eigen::MatrixXd transform_responses(std::span<const double> y,
                                    const KnotSet& knots);

}  // namespace mfhd
