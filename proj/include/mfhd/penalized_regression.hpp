#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mfhd {

using Index = Eigen::Index;

enum class PenaltyFamily { Lasso, Scad };

/// Penalty family and tuning parameter. `lambda` acts on coefficients of the
/// internally standardized design.
struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::Lasso;
  double lambda = 0.0;
  double scad_a = 3.7;

  static PenaltySpec lasso(double lambda) {
    return {PenaltyFamily::Lasso, lambda, 3.7};
  }
  static PenaltySpec scad(double lambda, double a = 3.7) {
    return {PenaltyFamily::Scad, lambda, a};
  }
  void validate() const;
  /// p_lambda(|t|)
  double value(double t) const;
};

struct SolverOptions {
  double tol = 1e-7;      // on max standardized coefficient change per sweep
  int max_iter = 10000;   // coordinate-descent sweeps
  int max_lla_steps = 20; // SCAD local linear approximation rounds
};

struct RegressionFit {
  Eigen::VectorXd coefficients;  // original scale, one per regressor
  double intercept = 0.0;
  Eigen::VectorXd residuals;     // y - intercept - X * coefficients
  double lambda_used = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// sign(z) * max(|z| - t, 0)
double soft_threshold(double z, double t);

/// Minimizer of 0.5 (x - z)^2 + p_lambda(|x|) for the SCAD penalty.
double scad_update(double z, double lambda, double a);

/// SCAD penalty value p_lambda(|t|) and its derivative in |t|.
double scad_penalty(double t, double lambda, double a);
double scad_derivative(double t, double lambda, double a);

/// Fold label in [0, n_folds) for each of n rows: a seeded random
/// permutation dealt round-robin.
std::vector<int> assign_folds(Index n, int n_folds, std::uint64_t seed);

/// Covariance-form view of one data matrix. Every column can serve as a
/// response and any subset of the others as regressors, so the shared
/// transform fits, the nuisance fits and their cross-validation all reuse one
/// set of Gram matrices.
///
/// Columns are centered and scaled (1/n variance) internally; the response
/// column is only centered. Immutable after construction; all methods are
/// safe to call concurrently.
class GramSystem {
 public:
  explicit GramSystem(Eigen::MatrixXd data, int n_folds = 0,
                      std::uint64_t fold_seed = 0);

  Index rows() const { return data_.rows(); }
  Index cols() const { return data_.cols(); }
  const Eigen::MatrixXd& data() const { return data_; }
  int n_folds() const { return static_cast<int>(folds_.size()); }

  /// Smallest Lasso lambda giving the null model.
  double lambda_max(Index target, std::span<const Index> predictors) const;

  /// Penalized fit of column `target` on `predictors` (coefficients follow
  /// the order of `predictors`).
  RegressionFit fit(Index target, std::span<const Index> predictors,
                    const PenaltySpec& penalty,
                    const SolverOptions& opts = {}) const;

  /// Log-spaced grid from lambda_max down to min_ratio * lambda_max.
  std::vector<double> lambda_grid(Index target,
                                  std::span<const Index> predictors,
                                  int grid_size, double min_ratio) const;

  /// K-fold cross-validated lambda (plain minimum of the held-out squared
  /// error; ties go to the larger lambda). Requires folds at construction.
  double cv_lambda(Index target, std::span<const Index> predictors,
                   PenaltyFamily family, double scad_a, int grid_size,
                   double min_ratio, const SolverOptions& opts = {}) const;

  /// Objective value (2n)^-1 ||y_c - X_s b||^2 + sum p(|b|) at original-scale
  /// coefficients, evaluated from the full-data Gram matrix.
  double objective(Index target, std::span<const Index> predictors,
                   const Eigen::VectorXd& coefficients,
                   const PenaltySpec& penalty) const;

  struct Moments {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;  // 1/n standard deviation; zero marks a constant
    Eigen::MatrixXd corr;   // C(l,m) / (s_l s_m); rows of constants are zero
  };

 private:
  struct Fold {
    Moments train;
    Eigen::MatrixXd test_cross;  // sum over held-out rows of d d', d = row - train mean
    Index test_rows = 0;
  };

  Eigen::MatrixXd data_;
  Moments full_;
  std::vector<Fold> folds_;
};

/// Penalized least squares of y on the columns of X, with centering and
/// scaling handled internally. Throws InputError on non-finite input.
RegressionFit fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const PenaltySpec& penalty, const SolverOptions& opts = {});

/// Cross-validated lambda over a log-spaced grid; deterministic given seed.
double select_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     PenaltyFamily family, int n_folds, int grid_size,
                     std::uint64_t seed, double scad_a = 3.7);

struct TransformFits {
  Eigen::MatrixXd coefficients;  // p x h; column k regresses f_k(Y) on X
  std::vector<RegressionFit> fits;
};

/// Regresses every column of F on all of X with one penalty each.
TransformFits fit_all_transforms(const Eigen::MatrixXd& X,
                                 const Eigen::MatrixXd& F,
                                 const PenaltySpec& penalty,
                                 const SolverOptions& opts = {});

/// Regresses column j of X on the remaining columns.
RegressionFit fit_nuisance(const Eigen::MatrixXd& X, Index j,
                           const PenaltySpec& penalty,
                           const SolverOptions& opts = {});

/// All column indices of an m-column matrix except `skip` (pass -1 for none).
std::vector<Index> all_except(Index m, Index skip);

}  // namespace mfhd
