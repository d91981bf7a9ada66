#include "mfhd/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mfhd/chi2.hpp"
#include "mfhd/errors.hpp"
#include "mfhd/parallel.hpp"
#include "mfhd/rng.hpp"

namespace mfhd {

std::vector<Index> reported_coordinates(int p) {
  std::set<Index> picked;
  for (int k = 0; k < std::min(p, 5); ++k) picked.insert(k);
  for (int k = std::max(0, p - 5); k < p; ++k) picked.insert(k);
  return {picked.begin(), picked.end()};
}

MonteCarloCell summarize(const std::vector<double>& values) {
  MonteCarloCell cell;
  if (values.empty()) return cell;
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  cell.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - cell.mean) * (v - cell.mean);
    cell.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return cell;
}

std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t rep) {
  return mix_seed(seed, rep + 0x5EED);
}

namespace {

std::vector<bool> mark_active(const std::vector<Index>& coords,
                              const std::vector<Index>& active) {
  std::vector<bool> out;
  for (Index j : coords) {
    out.push_back(std::find(active.begin(), active.end(), j) != active.end());
  }
  return out;
}

void check_study(const SimDesign& design, const std::vector<Index>& coords, int reps) {
  design.validate();
  if (reps < 1) throw InputError("need at least one replication");
  for (Index j : coords) {
    if (j < 0 || j >= design.p) throw InputError("requested coordinate outside 1..p");
  }
}

TestConfig for_replication(TestConfig config, const SimDesign& design, int rep) {
  config.seed = replication_seed(design.seed, static_cast<std::uint64_t>(rep));
  return config;
}

}  // namespace

RejectionStudy simulate_rejections(const SimDesign& design,
                                   const std::vector<Index>& coords,
                                   const TestConfig& config, int reps,
                                   double level, int threads) {
  check_study(design, coords, reps);
  config.validate();
  RejectionStudy study;
  study.coords = coords;
  study.reps = reps;
  study.active = mark_active(coords, active_set(design.model, design.p, design.sparsity));
  const std::size_t m = coords.size();
  study.statistic.assign(m, std::vector<double>(static_cast<std::size_t>(reps)));
  study.p_value.assign(m, std::vector<double>(static_cast<std::size_t>(reps)));
  std::vector<int> ridged(static_cast<std::size_t>(reps), 0);

  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    const int rep = static_cast<int>(r);
    const LabeledData data = generate(design, r);
    const TestConfig cfg = for_replication(config, design, rep);
    const NuisanceModel nuisance(data.X, cfg);
    const TransformModel transforms(data.X, data.y, cfg, GammaMode::Shared);
    for (std::size_t c = 0; c < m; ++c) {
      const auto res = assemble_result(coords[c], nuisance.fit(coords[c]),
                                       transforms.eta(coords[c]));
      study.statistic[c][r] = res.statistic;
      study.p_value[c][r] = res.p_value;
      ridged[r] += res.regularized ? 1 : 0;
    }
  });

  for (std::size_t c = 0; c < m; ++c) {
    std::vector<double> hits;
    for (double pv : study.p_value[c]) hits.push_back(pv < level ? 1.0 : 0.0);
    study.rate.push_back(summarize(hits));
  }
  for (int k : ridged) study.regularized += k;
  return study;
}

FdrStudy simulate_fdr(const SimDesign& design, const TestConfig& config,
                      const FdrConfig& fdr, int reps, int threads) {
  check_study(design, {}, reps);
  config.validate();
  fdr.validate();
  const auto truth = active_set(design.model, design.p, design.sparsity);
  const auto all = all_except(design.p, -1);
  std::vector<double> fdp(static_cast<std::size_t>(reps)), power(fdp), fallback(fdp),
      size(fdp);

  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    const LabeledData data = generate(design, r);
    const TestConfig cfg = for_replication(config, design, static_cast<int>(r));
    const NuisanceModel nuisance(data.X, cfg);
    const TransformModel transforms(data.X, data.y, cfg, GammaMode::Shared);
    std::vector<double> stats(all.size());
    for (std::size_t j = 0; j < all.size(); ++j) {
      stats[j] = assemble_result(all[j], nuisance.fit(all[j]), transforms.eta(all[j]))
                     .statistic;
    }
    const FdrSelection sel = find_threshold(stats, fdr);
    const SelectionQuality q = evaluate_selection(sel, truth);
    fdp[r] = q.fdp;
    power[r] = q.power;
    fallback[r] = sel.used_fallback ? 1.0 : 0.0;
    size[r] = static_cast<double>(sel.rejected.size());
  });

  FdrStudy out;
  out.reps = reps;
  out.fdr = summarize(fdp);
  out.power = summarize(power);
  out.fallback = summarize(fallback);
  out.rejected = summarize(size);
  return out;
}

PowerSweep power_sweep(const SimDesign& design, const std::vector<Index>& coords,
                       const TestConfig& config, const std::vector<int>& h_values,
                       int reps, double level, int threads) {
  check_study(design, coords, reps);
  if (h_values.empty()) throw InputError("power sweep needs at least one h");
  for (int h : h_values) {
    if (h < 1) throw InputError("h values must be >= 1");
  }
  config.validate();
  PowerSweep sweep;
  sweep.h_values = h_values;
  sweep.coords = coords;
  sweep.reps = reps;
  sweep.active = mark_active(coords, active_set(design.model, design.p, design.sparsity));
  const std::size_t nh = h_values.size();
  const std::size_t m = coords.size();
  // hits[h][coord][rep]
  std::vector<std::vector<std::vector<double>>> hits(
      nh, std::vector<std::vector<double>>(m, std::vector<double>(static_cast<std::size_t>(reps))));

  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    const LabeledData data = generate(design, r);
    TestConfig cfg = for_replication(config, design, static_cast<int>(r));
    const NuisanceModel nuisance(data.X, cfg);
    std::vector<NuisanceFit> fits;
    fits.reserve(m);
    for (Index j : coords) fits.push_back(nuisance.fit(j));
    for (std::size_t hi = 0; hi < nh; ++hi) {
      cfg.h = h_values[hi];
      const TransformModel transforms(data.X, data.y, cfg, GammaMode::Shared);
      for (std::size_t c = 0; c < m; ++c) {
        const auto res = assemble_result(coords[c], fits[c], transforms.eta(coords[c]));
        hits[hi][c][r] = res.p_value < level ? 1.0 : 0.0;
      }
    }
  });

  sweep.rate.resize(nh);
  for (std::size_t hi = 0; hi < nh; ++hi) {
    for (std::size_t c = 0; c < m; ++c) sweep.rate[hi].push_back(summarize(hits[hi][c]));
  }
  return sweep;
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw InputError("KS test needs a nonempty sample");
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  KsResult out;
  out.statistic = d;
  const double root = std::sqrt(n);
  const double lambda = (root + 0.12 + 0.11 / root) * d;
  if (lambda < 0.2) return out;  // series converges poorly; p is ~1 here
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  out.p_value = std::clamp(sum, 0.0, 1.0);
  return out;
}

}  // namespace mfhd
