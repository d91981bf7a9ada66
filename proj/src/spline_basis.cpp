#include "mfhd/spline_basis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfhd/errors.hpp"

namespace mfhd {

KnotSet::KnotSet(double boundary_low, double boundary_high,
                 std::vector<double> inner)
    : low_(boundary_low), high_(boundary_high), inner_(std::move(inner)) {
  if (!(std::isfinite(low_) && std::isfinite(high_)) || !(low_ < high_)) {
    throw DegenerateBasisError("knot boundaries must satisfy low < high");
  }
  double prev = low_;
  for (double t : inner_) {
    if (!(t > prev)) {
      throw DegenerateBasisError("inner knots must be strictly increasing");
    }
    prev = t;
  }
  if (!(high_ > prev)) {
    throw DegenerateBasisError("inner knots must lie below boundary_high");
  }
}

std::vector<double> KnotSet::all() const {
  std::vector<double> out;
  out.reserve(inner_.size() + 2);
  out.push_back(low_);
  out.insert(out.end(), inner_.begin(), inner_.end());
  out.push_back(high_);
  return out;
}

double empirical_quantile(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw InputError("quantile of an empty sample");
  const double pos = static_cast<double>(sorted.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

std::vector<double> quantile_knots(std::span<const double> sorted, int h) {
  std::vector<double> inner;
  inner.reserve(h - 2);
  for (int k = 1; k <= h - 2; ++k) {
    inner.push_back(empirical_quantile(sorted, static_cast<double>(k) / (h - 1)));
  }
  return inner;
}

bool strictly_inside(const std::vector<double>& inner, double low, double high) {
  double prev = low;
  for (double t : inner) {
    if (!(t > prev)) return false;
    prev = t;
  }
  return high > prev;
}

}  // namespace

KnotSet make_knots(std::span<const double> y, int h) {
  if (h < 2) throw DomainError("spline basis needs h >= 2");
  if (static_cast<int>(y.size()) < h) {
    std::ostringstream msg;
    msg << "spline basis with h = " << h << " needs at least h observations";
    throw DegenerateBasisError(msg.str());
  }
  std::vector<double> sorted(y.begin(), y.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw InputError("non-finite response value");
  }
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (static_cast<int>(distinct.size()) < h) {
    std::ostringstream msg;
    msg << "response has " << distinct.size() << " distinct values; h = " << h
        << " basis functions need at least " << h;
    throw DegenerateBasisError(msg.str());
  }

  const double low = sorted.front();
  const double high = sorted.back();
  auto inner = quantile_knots(sorted, h);
  // Heavy ties can collapse sample quantiles; fall back to quantiles of the
  // distinct values, which are always strictly increasing here.
  if (!strictly_inside(inner, low, high)) inner = quantile_knots(distinct, h);
  return KnotSet(low, high, std::move(inner));
}

Eigen::VectorXd eval_basis(double y_value, const KnotSet& knots) {
  const int h = knots.h();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(h);
  const std::vector<double> t = knots.all();
  if (!(y_value > t.front())) {  // also catches NaN
    out[0] = 1.0;
    return out;
  }
  if (y_value >= t.back()) {
    out[h - 1] = 1.0;
    return out;
  }
  // First knot strictly greater than y_value; y lies in [t[i-1], t[i]).
  const auto it = std::upper_bound(t.begin(), t.end(), y_value);
  const auto i = static_cast<int>(it - t.begin());
  const double w = (y_value - t[i - 1]) / (t[i] - t[i - 1]);
  out[i - 1] = 1.0 - w;
  out[i] = w;
  return out;
}

Eigen::MatrixXd transform_responses(std::span<const double> y,
                                    const KnotSet& knots) {
  Eigen::MatrixXd f(static_cast<Eigen::Index>(y.size()), knots.h());
  for (std::size_t i = 0; i < y.size(); ++i) {
    f.row(static_cast<Eigen::Index>(i)) = eval_basis(y[i], knots).transpose();
  }
  return f;
}

}  // namespace mfhd
