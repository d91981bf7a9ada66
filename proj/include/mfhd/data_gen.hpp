#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfhd/penalized_regression.hpp"

namespace mfhd {

/// Simulation designs. I-III: fixed sparse models; IV: linear with leading
/// ones; V: nonlinear with leading ones over a denominator in X_{p-1}, X_{p-2}.
enum class SimModel { I, II, III, IV, V };

SimModel parse_model(const std::string& name);
std::string model_name(SimModel model);

struct SimDesign {
  SimModel model = SimModel::I;
  int n = 200;
  int p = 200;
  double rho = 0.5;
  int sparsity = 4;  // IV: s1 = sparsity; V: s2 = sparsity - 2 (two denominator terms)
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabeledData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<Index> active;  // 0-based, ascending
};

/// Rows i.i.d. N(0, Sigma) with Sigma_ij = rho^|i-j|, by the AR(1) recursion
/// X_1 = e_1, X_k = rho X_{k-1} + sqrt(1 - rho^2) e_k. Row-major draws from
/// Philox stream `stream`.
Eigen::MatrixXd gen_ar1_gaussian(int n, int p, double rho, std::uint64_t seed,
                                 std::uint64_t stream = 0);

/// True active set (0-based) of a design.
std::vector<Index> active_set(SimModel model, int p, int sparsity);

/// Response for given noise draws.
Eigen::VectorXd response_from_noise(SimModel model, const Eigen::MatrixXd& X,
                                    int sparsity, const Eigen::VectorXd& noise);

struct GeneratedResponse {
  Eigen::VectorXd y;
  std::vector<Index> active;
};

/// Response with N(0, 1) noise from Philox stream `stream`.
GeneratedResponse gen_response(SimModel model, const Eigen::MatrixXd& X,
                               int sparsity, std::uint64_t seed,
                               std::uint64_t stream = 1);

/// Replication `rep` of a design: predictors on stream 2 rep, noise on
/// stream 2 rep + 1.
LabeledData generate(const SimDesign& design, std::uint64_t rep);

}  // namespace mfhd
