#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "mfhd/chi2.hpp"
#include "mfhd/data_gen.hpp"
#include "mfhd/errors.hpp"
#include "mfhd/rng.hpp"
#include "mfhd/score_test.hpp"
#include "mfhd/simulation.hpp"

using namespace mfhd;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

Dataset as_dataset(const LabeledData& d) {
  Dataset out;
  out.X = d.X;
  out.y = d.y;
  return out;
}

// Two-sided z-test of one OLS coefficient, the classical oracle for h = 1.
bool ols_rejects(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Index j) {
  const Index n = X.rows(), p = X.cols();
  Eigen::MatrixXd design(n, p + 1);
  design << Eigen::VectorXd::Ones(n), X;
  const Eigen::MatrixXd inv = (design.transpose() * design).inverse();
  const Eigen::VectorXd b = inv * design.transpose() * y;
  const double sigma2 = (y - design * b).squaredNorm() / static_cast<double>(n - p - 1);
  const double t = b[j + 1] / std::sqrt(sigma2 * inv(j + 1, j + 1));
  return std::abs(t) > 1.959963984540054;
}

}  // namespace

TEST_CASE("score vector") {
  Eigen::MatrixXd eta(2, 1);
  eta << 1, -1;
  CHECK(score_vector(vec({1, 1}), eta)[0] == 0.0);
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 1);
  CHECK(score_vector(vec({1, 2, 3}), ones)[0] == doctest::Approx(6.0 / std::sqrt(3.0)));
  CHECK(score_vector(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Random(3, 4)).isZero(0.0));
  CHECK_THROWS_AS(score_vector(vec({1, 2}), ones), InputError);
}

TEST_CASE("score covariance estimate") {
  Eigen::MatrixXd eta(2, 2);
  eta << 1, 0, 0, 1;
  CHECK(estimate_omega(vec({1, 1}), eta).isApprox(0.5 * Eigen::Matrix2d::Identity()));

  const Eigen::VectorXd x = vec({0.5, -1.0, 2.0});
  const Eigen::MatrixXd col = vec({1.0, 3.0, -2.0});
  const Eigen::MatrixXd h1 = estimate_omega(x, col);
  CHECK(h1(0, 0) == doctest::Approx((0.25 * 1 + 1 * 9 + 4 * 4) / 3.0));

  Eigen::MatrixXd same(3, 3);
  same << col, col, col;
  const Eigen::MatrixXd rank1 = estimate_omega(x, same);
  CHECK((rank1.array() - h1(0, 0)).abs().maxCoeff() < 1e-14);

  Philox g(3, 3);
  Eigen::MatrixXd e(40, 5);
  Eigen::VectorXd r(40);
  for (int i = 0; i < 40; ++i) {
    r[i] = g.normal();
    for (int k = 0; k < 5; ++k) e(i, k) = g.normal();
  }
  const Eigen::MatrixXd om = estimate_omega(r, e);
  CHECK(om == om.transpose());
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(om).eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("Wald statistic") {
  const WaldResult zero = wald_statistic(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  CHECK(zero.statistic == 0.0);
  CHECK(zero.p_value == 1.0);

  const Eigen::VectorXd z = vec({0.3, -1.2, 2.0, 0.1});
  const WaldResult id = wald_statistic(z, Eigen::MatrixXd::Identity(4, 4));
  CHECK(id.statistic == doctest::Approx(z.squaredNorm()).epsilon(1e-14));
  CHECK(id.p_value == doctest::Approx(chi2_survival(z.squaredNorm(), {4, 0.0})).epsilon(1e-14));
  CHECK_FALSE(id.regularized);

  const WaldResult diag = wald_statistic(vec({2, 1}), Eigen::Vector2d(4, 1).asDiagonal().toDenseMatrix());
  CHECK(diag.statistic == doctest::Approx(2.0).epsilon(1e-14));

  Eigen::Matrix2d singular;
  singular << 1, 1, 1, 1;
  const WaldResult ridged = wald_statistic(vec({1, 1}), singular);
  CHECK(ridged.regularized);
  CHECK(ridged.statistic == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(wald_statistic(vec({1, 1}), Eigen::Matrix2d::Zero()), DegenerateTestError);
  CHECK_THROWS_AS(wald_statistic(vec({1, 1, 1}), singular), InputError);
}

TEST_CASE("local power") {
  const Eigen::MatrixXd om = Eigen::MatrixXd::Identity(5, 5);
  CHECK(local_power(Eigen::VectorXd::Zero(5), om, 1.0, 5, 0.05) == doctest::Approx(0.05).epsilon(1e-10));
  // ncp = delta^2 b' omega^-1 b = 10
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(5, std::sqrt(2.0));
  const double power = local_power(b, om, 1.0, 5, 0.05);
  boost::math::non_central_chi_squared law(5, 10.0);
  CHECK(power == doctest::Approx(boost::math::cdf(boost::math::complement(law, 11.070497693516351)))
                     .epsilon(1e-9));
  CHECK(std::abs(power - 0.6774) < 0.0005);

  // Monte-Carlo noncentral chi-square with the noncentrality on one axis.
  Philox g(10, 10);
  const double crit = chi2_quantile(0.05, {5, 0.0});
  const int draws = 1000000;
  int hits = 0;
  for (int i = 0; i < draws; ++i) {
    double w = 0.0;
    for (int k = 0; k < 5; ++k) {
      const double z = g.normal() + (k == 0 ? std::sqrt(10.0) : 0.0);
      w += z * z;
    }
    hits += w >= crit;
  }
  CHECK(std::abs(power - static_cast<double>(hits) / draws) < 0.005);

  double prev = 0.0;
  for (double delta : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double pw = local_power(b, om, delta, 5, 0.05);
    CHECK(pw >= prev - 1e-15);
    prev = pw;
  }
  CHECK(prev > 0.999999);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(5, 5);
  bad(4, 4) = 0.0;
  CHECK_THROWS_AS(local_power(b, bad, 1.0, 5, 0.05), DegenerateTestError);
  CHECK_THROWS_AS(local_power(b, om, 1.0, 5, 1.0), DomainError);
}

TEST_CASE("delta_hat") {
  const Eigen::VectorXd x = vec({1.0, -2.0, 0.5, 3.0});
  CHECK(delta_hat(x, x) == doctest::Approx(x.squaredNorm() / 4.0));
  CHECK(delta_hat(x, Eigen::VectorXd::Zero(4)) == 0.0);

  const Eigen::MatrixXd X = gen_ar1_gaussian(2000, 50, 0.5, 31, 0);
  TestConfig config;
  config.seed = 2;
  const NuisanceModel model(X, config);
  for (Index j : {10, 25, 40}) CHECK(std::abs(model.fit(j).delta_hat - 0.6) < 0.1);
}

TEST_CASE("response transforms") {
  const Eigen::VectorXd y = vec({3, 1, 4, 1, 5, 9, 2, 6});
  CHECK(response_transforms(y, 1) == Eigen::MatrixXd(y));
  const Eigen::MatrixXd F = response_transforms(y, 4);
  CHECK(F.cols() == 4);
  CHECK((F.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(response_transforms(y, 0), DomainError);
}

TEST_CASE("configuration and input guards") {
  TestConfig bad;
  bad.h = 0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = TestConfig{};
  bad.n_folds = 1;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = TestConfig{};
  bad.lambda = LambdaMode::rate(-1.0);
  CHECK_THROWS_AS(bad.validate(), DomainError);

  SimDesign design;
  design.n = 19;
  design.p = 5;
  const Dataset small = as_dataset(generate(design, 0));
  CHECK_THROWS_AS(test_coordinate(small, 0, TestConfig{}), InputError);

  design.n = 40;
  const Dataset data = as_dataset(generate(design, 0));
  CHECK_THROWS_AS(test_coordinate(data, 5, TestConfig{}), InputError);
  CHECK_THROWS_AS(test_coordinate(data, -1, TestConfig{}), InputError);

  Dataset ties = data;
  for (Index i = 0; i < ties.n(); ++i) ties.y[i] = static_cast<double>(i % 3);
  CHECK_THROWS_AS(test_coordinate(ties, 0, TestConfig{}), DegenerateBasisError);
}

TEST_CASE("result invariants") {
  SimDesign design;
  design.p = 60;
  design.seed = 4;
  const Dataset data = as_dataset(generate(design, 0));
  TestConfig config;
  config.seed = 9;
  const auto all = test_coordinates(data, {}, config, 1);
  REQUIRE(all.size() == 60);
  for (const CoordinateTestResult& r : all) {
    CHECK(r.omega.isApprox(r.omega.transpose(), 0.0));
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r.omega).eigenvalues().minCoeff() > -1e-10);
    const WaldResult again = wald_statistic(r.score, r.omega);
    CHECK(std::abs(again.statistic - r.statistic) <= 1e-8 * std::max(1.0, r.statistic));
    CHECK(r.p_value == doctest::Approx(chi2_survival(r.statistic, {5, 0.0})).epsilon(1e-12));
    CHECK(r.statistic >= 0.0);
  }
  const std::vector<Index> some{0, 7, 59};
  const auto threaded = test_coordinates(data, some, config, 4);
  for (std::size_t i = 0; i < some.size(); ++i) {
    CHECK(threaded[i].j == some[i]);
    CHECK(threaded[i].statistic == all[static_cast<std::size_t>(some[i])].statistic);
  }
  const auto direct = test_coordinate(data, 7, config);
  const auto direct_many = test_coordinates(data, std::vector<Index>{7}, config, 1, GammaMode::Direct);
  CHECK(direct.statistic == direct_many[0].statistic);
}

TEST_CASE("Model I: strong rejection for X1, nominal size far from the signal") {
  SimDesign design;
  design.seed = 5;
  TestConfig config;
  const int reps = 200;
  int strong = 0, false_alarms = 0;
  for (int rep = 0; rep < reps; ++rep) {
    const Dataset data = as_dataset(generate(design, rep));
    config.seed = replication_seed(design.seed, rep);
    strong += test_coordinate(data, 0, config).p_value < 0.001;
    false_alarms += test_coordinate(data, 99, config).p_value < 0.05;
  }
  CHECK(strong >= 0.99 * reps);
  CHECK(std::abs(static_cast<double>(false_alarms) / reps - 0.05) <= 0.03);
}

TEST_CASE("permuting the response gives uniform p-values") {
  SimDesign design;
  design.p = 50;
  design.seed = 6;
  TestConfig config;
  std::vector<double> pvalues;
  for (int rep = 0; rep < 500; ++rep) {
    Dataset data = as_dataset(generate(design, rep));
    Philox g(design.seed, 1000 + rep);
    for (Index i = data.n() - 1; i > 0; --i) {
      std::swap(data.y[i], data.y[static_cast<Index>(g.below(static_cast<std::uint64_t>(i + 1)))]);
    }
    config.seed = rep;
    pvalues.push_back(test_coordinate(data, 0, config).p_value);
  }
  const KsResult ks = ks_test(pvalues, [](double u) { return std::clamp(u, 0.0, 1.0); });
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("rescaling the tested column leaves W unchanged with unpenalized fits") {
  SimDesign design;
  design.n = 100;
  design.p = 6;
  design.seed = 7;
  TestConfig config;
  config.lambda = LambdaMode::rate(0.0);
  config.solver.tol = 1e-12;
  for (int rep = 0; rep < 5; ++rep) {
    Dataset data = as_dataset(generate(design, rep));
    const double base = test_coordinate(data, 2, config).statistic;
    for (double c : {0.01, 7.0}) {
      Dataset scaled = data;
      scaled.X.col(2) *= c;
      CHECK(std::abs(test_coordinate(scaled, 2, config).statistic - base) < 1e-3);
    }
  }
}

TEST_CASE("h = 1 agrees with the OLS z-test in a low-dimensional linear model") {
  const int reps = 200, n = 500, p = 5;
  TestConfig config;
  config.h = 1;
  int agree = 0, rejections = 0;
  for (int rep = 0; rep < reps; ++rep) {
    Dataset data;
    data.X = gen_ar1_gaussian(n, p, 0.5, 8, 2 * rep);
    Philox g(8, 2 * rep + 1);
    data.y = data.X.col(0) + 0.1 * data.X.col(2);
    for (Index i = 0; i < n; ++i) data.y[i] += g.normal();
    config.seed = rep;
    const bool ours = test_coordinate(data, 2, config).p_value < 0.05;
    const bool classical = ols_rejects(data.X, data.y, 2);
    agree += ours == classical;
    rejections += classical;
  }
  MESSAGE("OLS rejections: " << rejections << " of " << reps);
  CHECK(agree >= 0.95 * reps);
}
