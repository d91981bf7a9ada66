#include "mfhd/penalized_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mfhd/errors.hpp"
#include "mfhd/rng.hpp"

namespace mfhd {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double scad_update(double z, double lambda, double a) {
  const double az = std::abs(z);
  if (az <= 2.0 * lambda) return soft_threshold(z, lambda);
  if (az <= a * lambda) {
    return ((a - 1.0) * z - std::copysign(a * lambda, z)) / (a - 2.0);
  }
  return z;
}

double scad_penalty(double t, double lambda, double a) {
  const double at = std::abs(t);
  if (at <= lambda) return lambda * at;
  if (at <= a * lambda) {
    return (2.0 * a * lambda * at - at * at - lambda * lambda) / (2.0 * (a - 1.0));
  }
  return 0.5 * lambda * lambda * (a + 1.0);
}

double scad_derivative(double t, double lambda, double a) {
  const double at = std::abs(t);
  if (at <= lambda) return lambda;
  return std::max(a * lambda - at, 0.0) / (a - 1.0);
}

void PenaltySpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError("penalty lambda must be finite and >= 0");
  }
  if (family == PenaltyFamily::Scad && !(scad_a > 2.0)) {
    throw DomainError("SCAD requires a > 2");
  }
}

double PenaltySpec::value(double t) const {
  return family == PenaltyFamily::Lasso ? lambda * std::abs(t)
                                        : scad_penalty(t, lambda, scad_a);
}

std::vector<int> assign_folds(Index n, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw DomainError("cross-validation needs at least 2 folds");
  if (n < n_folds) throw InputError("fewer rows than cross-validation folds");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Philox rng(seed, 0xF01D5ull);
  for (Index i = n - 1; i > 0; --i) {
    const auto k = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]);
  }
  std::vector<int> label(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    label[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
        static_cast<int>(i % n_folds);
  }
  return label;
}

std::vector<Index> all_except(Index m, Index skip) {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    if (i != skip) out.push_back(i);
  }
  return out;
}

namespace {

using Moments = GramSystem::Moments;

// Cross-validation only ranks grid points, so path fits use a looser
// tolerance, and the path stops once the held-out error has stayed above its
// running minimum for a few consecutive grid points.
constexpr double kCvPathTol = 1e-5;
constexpr double kCvStopMargin = 0.01;
constexpr int kCvPatience = 5;

Moments compute_moments(const Eigen::MatrixXd& rows) {
  Moments m;
  const auto n = static_cast<double>(rows.rows());
  m.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - m.mean.transpose();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(rows.cols(), rows.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / n);
  cov.triangularView<Eigen::Upper>() = cov.transpose();
  m.scale = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  Eigen::VectorXd inv(rows.cols());
  for (Index l = 0; l < rows.cols(); ++l) {
    const double magnitude = std::max(1.0, std::abs(m.mean[l]));
    if (m.scale[l] <= 1e-13 * magnitude) m.scale[l] = 0.0;
    inv[l] = m.scale[l] > 0.0 ? 1.0 / m.scale[l] : 0.0;
  }
  m.corr = inv.asDiagonal() * cov * inv.asDiagonal();
  return m;
}

struct Solution {
  Eigen::VectorXd b;        // standardized coefficients, per active position
  Eigen::VectorXd lasso_b;  // Lasso solution at the same lambda (warm start)
  int iterations = 0;
  bool converged = false;
};

class CoordinateDescent {
 public:
  CoordinateDescent(const Moments& moments, Index target,
                    std::vector<Index> positions)
      : m_(moments), target_(target), idx_(std::move(positions)) {
    c_ = m_.corr.col(target_) * m_.scale[target_];
  }

  const std::vector<Index>& positions() const { return idx_; }

  double lambda_max() const {
    double best = 0.0;
    for (Index col : idx_) best = std::max(best, std::abs(c_[col]));
    return best;
  }

  Solution solve(const PenaltySpec& penalty, const SolverOptions& opts,
                 const Eigen::VectorXd* lasso_warm) const {
    const auto d = static_cast<Index>(idx_.size());
    Solution sol;
    sol.lasso_b = lasso_warm ? *lasso_warm : Eigen::VectorXd::Zero(d);
    std::vector<double> w(idx_.size(), penalty.lambda);
    bool ok = false;
    sol.iterations = run(w, sol.lasso_b, opts.tol, opts.max_iter, ok);
    sol.converged = ok;
    sol.b = sol.lasso_b;
    if (penalty.family == PenaltyFamily::Lasso || penalty.lambda == 0.0) {
      return sol;
    }
    // Local linear approximation: reweighted Lasso with weights p'(|b|).
    bool lla_converged = false;
    for (int step = 0; step < opts.max_lla_steps; ++step) {
      for (std::size_t i = 0; i < idx_.size(); ++i) {
        w[i] = scad_derivative(sol.b[static_cast<Index>(i)], penalty.lambda,
                               penalty.scad_a);
      }
      const Eigen::VectorXd before = sol.b;
      const int budget = opts.max_iter - sol.iterations;
      if (budget <= 0) break;
      sol.iterations += run(w, sol.b, opts.tol, budget, ok);
      if (!ok) break;
      if (d == 0 || (sol.b - before).cwiseAbs().maxCoeff() < opts.tol) {
        lla_converged = true;
        break;
      }
    }
    sol.converged = ok && lla_converged;
    return sol;
  }

 private:
  // Weighted Lasso on min 0.5 b'Rb - c'b + sum w_i |b_i|, R unit-diagonal.
  // Alternates full sweeps with sweeps restricted to the nonzero set.
  int run(const std::vector<double>& w, Eigen::VectorXd& b, double tol,
          int budget, bool& converged) const {
    Eigen::VectorXd grad = c_;
    for (std::size_t i = 0; i < idx_.size(); ++i) {
      const double bi = b[static_cast<Index>(i)];
      if (bi != 0.0) grad.noalias() -= m_.corr.col(idx_[i]) * bi;
    }
    auto sweep = [&](bool active_only) {
      double max_change = 0.0;
      for (std::size_t i = 0; i < idx_.size(); ++i) {
        const auto pos = static_cast<Index>(i);
        if (active_only && b[pos] == 0.0) continue;
        const Index col = idx_[i];
        const double updated = soft_threshold(grad[col] + b[pos], w[i]);
        const double delta = updated - b[pos];
        if (delta != 0.0) {
          grad.noalias() -= m_.corr.col(col) * delta;
          b[pos] = updated;
          max_change = std::max(max_change, std::abs(delta));
        }
      }
      return max_change;
    };
    converged = false;
    int sweeps = 0;
    while (sweeps < budget) {
      const double change = sweep(false);
      ++sweeps;
      if (change < tol) {
        converged = true;
        break;
      }
      while (sweeps < budget) {
        const double inner = sweep(true);
        ++sweeps;
        if (inner < tol) break;
      }
    }
    return sweeps;
  }

  const Moments& m_;
  Index target_;
  std::vector<Index> idx_;
  Eigen::VectorXd c_;
};

std::vector<Index> usable(const Moments& m, std::span<const Index> predictors) {
  std::vector<Index> out;
  out.reserve(predictors.size());
  for (Index col : predictors) {
    if (m.scale[col] > 0.0) out.push_back(col);
  }
  return out;
}

void check_columns(Index cols, Index target, std::span<const Index> predictors) {
  if (target < 0 || target >= cols) throw InputError("response column out of range");
  for (Index col : predictors) {
    if (col < 0 || col >= cols) throw InputError("regressor column out of range");
    if (col == target) throw InputError("response column listed as a regressor");
  }
}

std::vector<double> log_grid(double top, int grid_size, double min_ratio) {
  if (grid_size < 1) throw DomainError("lambda grid needs at least one point");
  std::vector<double> grid(static_cast<std::size_t>(grid_size));
  for (int g = 0; g < grid_size; ++g) {
    const double frac = grid_size == 1 ? 0.0 : static_cast<double>(g) / (grid_size - 1);
    grid[static_cast<std::size_t>(g)] = top * std::pow(min_ratio, frac);
  }
  return grid;
}

void require_finite(const Eigen::MatrixXd& data) {
  if (!data.allFinite()) throw InputError("non-finite entries in regression data");
}

}  // namespace

GramSystem::GramSystem(Eigen::MatrixXd data, int n_folds,
                       std::uint64_t fold_seed)
    : data_(std::move(data)) {
  if (data_.rows() < 2) throw InputError("regression needs at least 2 rows");
  require_finite(data_);
  full_ = compute_moments(data_);
  if (n_folds == 0) return;
  const auto label = assign_folds(data_.rows(), n_folds, fold_seed);
  folds_.resize(static_cast<std::size_t>(n_folds));
  for (int f = 0; f < n_folds; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < data_.rows(); ++i) {
      (label[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    }
    const Eigen::MatrixXd train_rows = data_(train, Eigen::all);
    Fold& fold = folds_[static_cast<std::size_t>(f)];
    fold.train = compute_moments(train_rows);
    const Eigen::MatrixXd held =
        data_(test, Eigen::all).rowwise() - fold.train.mean.transpose();
    fold.test_cross = held.transpose() * held;
    fold.test_rows = static_cast<Index>(test.size());
  }
}

double GramSystem::lambda_max(Index target,
                              std::span<const Index> predictors) const {
  check_columns(cols(), target, predictors);
  return CoordinateDescent(full_, target, usable(full_, predictors)).lambda_max();
}

std::vector<double> GramSystem::lambda_grid(Index target,
                                            std::span<const Index> predictors,
                                            int grid_size,
                                            double min_ratio) const {
  return log_grid(lambda_max(target, predictors), grid_size, min_ratio);
}

RegressionFit GramSystem::fit(Index target, std::span<const Index> predictors,
                              const PenaltySpec& penalty,
                              const SolverOptions& opts) const {
  penalty.validate();
  check_columns(cols(), target, predictors);
  const CoordinateDescent cd(full_, target, usable(full_, predictors));
  const Solution sol = cd.solve(penalty, opts, nullptr);

  RegressionFit out;
  out.coefficients = Eigen::VectorXd::Zero(static_cast<Index>(predictors.size()));
  out.lambda_used = penalty.lambda;
  out.iterations = sol.iterations;
  out.converged = sol.converged;
  out.intercept = full_.mean[target];
  out.residuals = data_.col(target);
  const auto& pos = cd.positions();
  std::size_t k = 0;
  for (std::size_t i = 0; i < predictors.size(); ++i) {
    if (k < pos.size() && pos[k] == predictors[i]) {
      const double b = sol.b[static_cast<Index>(k)];
      if (b != 0.0) {
        const Index col = predictors[i];
        const double beta = b / full_.scale[col];
        out.coefficients[static_cast<Index>(i)] = beta;
        out.intercept -= beta * full_.mean[col];
        out.residuals.noalias() -= beta * data_.col(col);
      }
      ++k;
    }
  }
  out.residuals.array() -= out.intercept;
  return out;
}

double GramSystem::cv_lambda(Index target, std::span<const Index> predictors,
                             PenaltyFamily family, double scad_a, int grid_size,
                             double min_ratio, const SolverOptions& opts) const {
  if (folds_.empty()) {
    throw DomainError("GramSystem built without cross-validation folds");
  }
  const auto grid = lambda_grid(target, predictors, grid_size, min_ratio);
  if (grid.size() == 1 || grid.front() == 0.0) return grid.front();

  SolverOptions path_opts = opts;
  path_opts.tol = std::max(opts.tol, kCvPathTol);
  std::vector<CoordinateDescent> solvers;
  std::vector<Eigen::VectorXd> warm;
  for (const Fold& fold : folds_) {
    solvers.emplace_back(fold.train, target, usable(fold.train, predictors));
    warm.push_back(Eigen::VectorXd::Zero(static_cast<Index>(solvers.back().positions().size())));
  }

  double best_err = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  int worse_in_a_row = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sse = 0.0;
    for (std::size_t f = 0; f < folds_.size(); ++f) {
      const Fold& fold = folds_[f];
      const auto& pos = solvers[f].positions();
      const Solution sol = solvers[f].solve({family, grid[g], scad_a}, path_opts, &warm[f]);
      warm[f] = sol.lasso_b;
      std::vector<std::pair<Index, double>> nz;
      for (std::size_t i = 0; i < pos.size(); ++i) {
        const double b = sol.b[static_cast<Index>(i)];
        if (b != 0.0) nz.emplace_back(pos[i], b / fold.train.scale[pos[i]]);
      }
      const Eigen::MatrixXd& t = fold.test_cross;
      double err = t(target, target);
      for (const auto& [col, beta] : nz) {
        err -= 2.0 * beta * t(col, target);
        for (const auto& [col2, beta2] : nz) err += beta * beta2 * t(col, col2);
      }
      sse += err;
    }
    if (sse < best_err) {
      best_err = sse;
      best = g;
      worse_in_a_row = 0;
    } else if (sse > best_err * (1.0 + kCvStopMargin) && ++worse_in_a_row >= kCvPatience) {
      break;
    }
  }
  return grid[best];
}

double GramSystem::objective(Index target, std::span<const Index> predictors,
                             const Eigen::VectorXd& coefficients,
                             const PenaltySpec& penalty) const {
  check_columns(cols(), target, predictors);
  Eigen::VectorXd b(static_cast<Index>(predictors.size()));
  for (std::size_t i = 0; i < predictors.size(); ++i) {
    b[static_cast<Index>(i)] =
        coefficients[static_cast<Index>(i)] * full_.scale[predictors[i]];
  }
  const std::vector<Index> idx(predictors.begin(), predictors.end());
  const Eigen::MatrixXd r = full_.corr(idx, idx);
  const Eigen::VectorXd c = full_.corr(idx, target) * full_.scale[target];
  const double var_y = full_.scale[target] * full_.scale[target];
  double value = 0.5 * (var_y - 2.0 * c.dot(b) + b.dot(r * b));
  for (Index i = 0; i < b.size(); ++i) value += penalty.value(b[i]);
  return value;
}

RegressionFit fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const PenaltySpec& penalty, const SolverOptions& opts) {
  if (X.rows() != y.size()) throw InputError("X and y row counts differ");
  if (X.cols() < 1) throw InputError("regression needs at least one regressor");
  Eigen::MatrixXd data(X.rows(), X.cols() + 1);
  data << X, y;
  const GramSystem sys(std::move(data));
  const auto preds = all_except(X.cols(), -1);
  return sys.fit(X.cols(), preds, penalty, opts);
}

double select_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     PenaltyFamily family, int n_folds, int grid_size,
                     std::uint64_t seed, double scad_a) {
  if (X.rows() != y.size()) throw InputError("X and y row counts differ");
  Eigen::MatrixXd data(X.rows(), X.cols() + 1);
  data << X, y;
  const GramSystem sys(std::move(data), n_folds, seed);
  const auto preds = all_except(X.cols(), -1);
  return sys.cv_lambda(X.cols(), preds, family, scad_a, grid_size, 0.01);
}

TransformFits fit_all_transforms(const Eigen::MatrixXd& X,
                                 const Eigen::MatrixXd& F,
                                 const PenaltySpec& penalty,
                                 const SolverOptions& opts) {
  if (X.rows() != F.rows()) throw InputError("X and F row counts differ");
  Eigen::MatrixXd data(X.rows(), X.cols() + F.cols());
  data << X, F;
  const GramSystem sys(std::move(data));
  const auto preds = all_except(X.cols(), -1);
  TransformFits out;
  out.coefficients.resize(X.cols(), F.cols());
  for (Index k = 0; k < F.cols(); ++k) {
    out.fits.push_back(sys.fit(X.cols() + k, preds, penalty, opts));
    out.coefficients.col(k) = out.fits.back().coefficients;
  }
  return out;
}

RegressionFit fit_nuisance(const Eigen::MatrixXd& X, Index j,
                           const PenaltySpec& penalty,
                           const SolverOptions& opts) {
  if (j < 0 || j >= X.cols()) {
    std::ostringstream msg;
    msg << "coordinate " << j << " outside [0, " << X.cols() << ")";
    throw InputError(msg.str());
  }
  if (X.cols() < 2) throw InputError("nuisance fit needs at least 2 columns");
  const GramSystem sys(X);
  const auto preds = all_except(X.cols(), j);
  return sys.fit(j, preds, penalty, opts);
}

}  // namespace mfhd
