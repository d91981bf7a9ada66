#include "mfhd/data_gen.hpp"

#include <cmath>

#include "mfhd/errors.hpp"
#include "mfhd/rng.hpp"

namespace mfhd {

SimModel parse_model(const std::string& name) {
  if (name == "I" || name == "1") return SimModel::I;
  if (name == "II" || name == "2") return SimModel::II;
  if (name == "III" || name == "3") return SimModel::III;
  if (name == "IV" || name == "4") return SimModel::IV;
  if (name == "V" || name == "5") return SimModel::V;
  throw InputError("unknown model '" + name + "' (expected I, II, III, IV or V)");
}

std::string model_name(SimModel model) {
  switch (model) {
    case SimModel::I: return "I";
    case SimModel::II: return "II";
    case SimModel::III: return "III";
    case SimModel::IV: return "IV";
    case SimModel::V: return "V";
  }
  return "?";
}

namespace {

int min_columns(SimModel model, int sparsity) {
  switch (model) {
    case SimModel::I: return 2;
    case SimModel::II: return 4;
    case SimModel::III: return 4;
    case SimModel::IV: return sparsity;
    case SimModel::V: return sparsity + 2;
  }
  return 1;
}

void check_sparsity(SimModel model, int p, int sparsity) {
  if (model == SimModel::IV && sparsity < 1) throw InputError("Model IV needs sparsity >= 1");
  if (model == SimModel::V && sparsity < 3) {
    throw InputError("Model V needs sparsity >= 3 (two denominator terms plus one numerator)");
  }
  if (p < min_columns(model, sparsity)) {
    throw InputError("model " + model_name(model) + " needs more predictors for this sparsity");
  }
}

}  // namespace

void SimDesign::validate() const {
  if (n < 1 || p < 1) throw InputError("design needs n, p >= 1");
  if (!(std::abs(rho) < 1.0)) throw InputError("AR(1) correlation must satisfy |rho| < 1");
  check_sparsity(model, p, sparsity);
}

Eigen::MatrixXd gen_ar1_gaussian(int n, int p, double rho, std::uint64_t seed,
                                 std::uint64_t stream) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("AR(1) correlation must satisfy |rho| < 1");
  Philox rng(seed, stream);
  const double innovation = std::sqrt(1.0 - rho * rho);
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    double prev = 0.0;
    for (int k = 0; k < p; ++k) {
      const double e = rng.normal();
      prev = k == 0 ? e : rho * prev + innovation * e;
      X(i, k) = prev;
    }
  }
  return X;
}

std::vector<Index> active_set(SimModel model, int p, int sparsity) {
  check_sparsity(model, p, sparsity);
  std::vector<Index> out;
  switch (model) {
    case SimModel::I: out = {0, 1}; break;
    case SimModel::II: out = {0, 1, 2, 3}; break;
    case SimModel::III: out = {0, 2, p - 1}; break;
    case SimModel::IV:
      for (int k = 0; k < sparsity; ++k) out.push_back(k);
      break;
    case SimModel::V:
      for (int k = 0; k < sparsity - 2; ++k) out.push_back(k);
      out.push_back(p - 3);
      out.push_back(p - 2);
      break;
  }
  return out;
}

Eigen::VectorXd response_from_noise(SimModel model, const Eigen::MatrixXd& X,
                                    int sparsity, const Eigen::VectorXd& noise) {
  const auto p = static_cast<int>(X.cols());
  check_sparsity(model, p, sparsity);
  if (noise.size() != X.rows()) throw InputError("noise length differs from row count");
  const Eigen::Index n = X.rows();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto x = X.row(i);
    const double e = noise[i];
    switch (model) {
      case SimModel::I:
        y[i] = x[0] + x[1] + e;
        break;
      case SimModel::II: {
        const double shift = 1.5 + x[2] + x[3];
        y[i] = (x[0] + x[1]) / (0.5 + shift * shift) + 0.1 * e;
        break;
      }
      case SimModel::III:
        y[i] = 3.0 * std::sin(x[0]) + 3.0 * std::sin(x[p - 1]) + std::exp(-2.0 * x[2]) * e;
        break;
      case SimModel::IV:
        y[i] = x.head(sparsity).sum() + e;
        break;
      case SimModel::V: {
        // X_{p-1} and X_{p-2} in 1-based terms.
        const double shift = 1.5 + x[p - 2] + x[p - 3];
        y[i] = x.head(sparsity - 2).sum() / (0.5 + shift * shift) + 0.1 * e;
        break;
      }
    }
  }
  return y;
}

GeneratedResponse gen_response(SimModel model, const Eigen::MatrixXd& X,
                               int sparsity, std::uint64_t seed,
                               std::uint64_t stream) {
  Philox rng(seed, stream);
  Eigen::VectorXd noise(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) noise[i] = rng.normal();
  return {response_from_noise(model, X, sparsity, noise),
          active_set(model, static_cast<int>(X.cols()), sparsity)};
}

LabeledData generate(const SimDesign& design, std::uint64_t rep) {
  design.validate();
  LabeledData out;
  out.X = gen_ar1_gaussian(design.n, design.p, design.rho, design.seed, 2 * rep);
  auto response = gen_response(design.model, out.X, design.sparsity, design.seed, 2 * rep + 1);
  out.y = std::move(response.y);
  out.active = std::move(response.active);
  return out;
}

}  // namespace mfhd
