#include "mfhd/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mfhd/data_gen.hpp"
#include "mfhd/dataset.hpp"
#include "mfhd/errors.hpp"
#include "mfhd/fdr.hpp"
#include "mfhd/parallel.hpp"
#include "mfhd/score_test.hpp"
#include "mfhd/simulation.hpp"

namespace mfhd {

namespace {

using json = nlohmann::ordered_json;

struct FitOptions {
  int h = kDefaultNumTransforms;
  std::string penalty = "lasso";
  double scad_a = 3.7;
  double lambda_rate = -1.0;  // negative: cross-validation
  int folds = 5;
  int grid = 30;
  std::uint64_t seed = 42;
  int threads = 0;
  std::string format = "tsv";
};

struct DataOptions {
  std::string input;
  std::string response = "y";
};

struct DesignOptions {
  std::string model = "I";
  int n = 200;
  int p = 200;
  double rho = 0.5;
  int sparsity = 4;
  int reps = 500;
  std::string coords = "reported";
  double level = 0.05;
};

void add_fit_options(CLI::App* cmd, FitOptions& o) {
  cmd->add_option("--h", o.h, "number of response transforms")->check(CLI::PositiveNumber);
  cmd->add_option("--penalty", o.penalty, "lasso or scad")
      ->check(CLI::IsMember({"lasso", "scad"}));
  cmd->add_option("--scad-a", o.scad_a, "SCAD shape parameter (> 2)");
  cmd->add_option("--lambda-rate", o.lambda_rate,
                  "use lambda = C sqrt(log p / n) instead of cross-validation");
  cmd->add_option("--folds", o.folds, "cross-validation folds");
  cmd->add_option("--grid", o.grid, "lambda grid size");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--threads", o.threads, "worker threads (MFHD_THREADS overrides)");
  cmd->add_option("--format", o.format, "tsv or json")->check(CLI::IsMember({"tsv", "json"}));
}

void add_data_options(CLI::App* cmd, DataOptions& o) {
  cmd->add_option("--input", o.input, "CSV file with a header row")->required();
  cmd->add_option("--response", o.response, "response column name or 1-based index");
}

void add_design_options(CLI::App* cmd, DesignOptions& o) {
  cmd->add_option("--model", o.model, "simulation model: I, II, III, IV or V");
  cmd->add_option("--n", o.n, "sample size");
  cmd->add_option("--p", o.p, "number of predictors");
  cmd->add_option("--rho", o.rho, "AR(1) predictor correlation");
  cmd->add_option("--sparsity", o.sparsity, "sparsity level (models IV and V)");
  cmd->add_option("--reps", o.reps, "replications");
  cmd->add_option("--coords", o.coords,
                  "coordinates: 'reported' (first and last five), 'all', or a list like 1,2,5");
  cmd->add_option("--level", o.level, "nominal level of each test");
}

TestConfig make_config(const FitOptions& o) {
  TestConfig cfg;
  cfg.h = o.h;
  cfg.penalty = o.penalty == "scad" ? PenaltyFamily::Scad : PenaltyFamily::Lasso;
  cfg.scad_a = o.scad_a;
  if (o.lambda_rate >= 0.0) cfg.lambda = LambdaMode::rate(o.lambda_rate);
  cfg.n_folds = o.folds;
  cfg.grid_size = o.grid;
  cfg.seed = o.seed;
  cfg.validate();
  return cfg;
}

SimDesign make_design(const DesignOptions& o, std::uint64_t seed) {
  SimDesign d;
  d.model = parse_model(o.model);
  d.n = o.n;
  d.p = o.p;
  d.rho = o.rho;
  d.sparsity = o.sparsity;
  d.seed = seed;
  d.validate();
  return d;
}

std::vector<Index> parse_index_list(const std::string& text, Index p) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    long long value = 0;
    try {
      value = std::stoll(item, &used);
    } catch (const std::exception&) {
      throw InputError("bad coordinate '" + item + "'");
    }
    if (used != item.size()) throw InputError("bad coordinate '" + item + "'");
    if (value < 1 || value > p) {
      throw InputError("coordinate " + item + " outside 1.." + std::to_string(p));
    }
    out.push_back(static_cast<Index>(value - 1));
  }
  if (out.empty()) throw InputError("empty coordinate list");
  return out;
}

std::vector<Index> resolve_coords(const std::string& spec, int p) {
  if (spec == "reported") return reported_coordinates(p);
  if (spec == "all") return all_except(p, -1);
  return parse_index_list(spec, p);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string name_of(const Dataset& data, Index j) {
  return data.predictor_names.empty() ? "X" + std::to_string(j + 1)
                                      : data.predictor_names[static_cast<std::size_t>(j)];
}

int cmd_test(const DataOptions& d, const FitOptions& f, const std::string& j_list,
             const std::string& gamma, std::ostream& out, std::ostream& err) {
  const Dataset data = read_dataset_file(d.input, d.response);
  const TestConfig cfg = make_config(f);
  const auto coords = j_list.empty() ? all_except(data.p(), -1)
                                     : parse_index_list(j_list, data.p());
  GammaMode mode = coords.size() == 1 ? GammaMode::Direct : GammaMode::Shared;
  if (gamma == "shared") mode = GammaMode::Shared;
  if (gamma == "direct") mode = GammaMode::Direct;
  err << "mfhd test: n = " << data.n() << ", p = " << data.p() << ", " << coords.size()
      << " coordinate(s), h = " << cfg.h << "\n";
  const auto results = test_coordinates(data, coords, cfg, resolve_threads(f.threads), mode);
  for (const auto& r : results) {
    if (r.regularized) {
      err << "warning: omega for coordinate " << r.j + 1 << " needed ridge regularization\n";
    }
  }
  if (f.format == "json") {
    json doc{{"command", "test"}, {"n", data.n()}, {"p", data.p()}, {"h", cfg.h}};
    json rows = json::array();
    for (const auto& r : results) {
      rows.push_back({{"j", r.j + 1},
                      {"name", name_of(data, r.j)},
                      {"statistic", r.statistic},
                      {"p_value", r.p_value},
                      {"delta_hat", r.delta_hat},
                      {"regularized", r.regularized}});
    }
    doc["results"] = rows;
    out << doc.dump(2) << "\n";
  } else {
    out << "j\tname\tstatistic\tp_value\tdelta_hat\tregularized\n";
    for (const auto& r : results) {
      out << r.j + 1 << '\t' << name_of(data, r.j) << '\t' << fmt(r.statistic) << '\t'
          << fmt(r.p_value) << '\t' << fmt(r.delta_hat) << '\t' << (r.regularized ? 1 : 0)
          << '\n';
    }
  }
  return kExitOk;
}

FdrConfig make_fdr(double alpha, int h, const std::string& d0, double cap, double fallback) {
  FdrConfig cfg;
  cfg.alpha = alpha;
  cfg.h = h;
  if (d0 != "auto") {
    try {
      std::size_t used = 0;
      cfg.d0 = std::stod(d0, &used);
      if (used != d0.size()) throw std::invalid_argument(d0);
    } catch (const std::exception&) {
      throw InputError("--d0 must be 'auto' or a number");
    }
  }
  if (cap >= 0.0) cfg.search_cap_override = cap;
  if (fallback >= 0.0) cfg.fallback_override = fallback;
  cfg.validate();
  return cfg;
}

int cmd_fdr(const DataOptions& d, const FitOptions& f, const FdrConfig& fdr,
            std::ostream& out, std::ostream& err) {
  const Dataset data = read_dataset_file(d.input, d.response);
  const TestConfig cfg = make_config(f);
  err << "mfhd fdr: n = " << data.n() << ", p = " << data.p() << ", alpha = " << fdr.alpha
      << "\n";
  const auto results = test_coordinates(data, {}, cfg, resolve_threads(f.threads));
  std::vector<double> stats;
  int ridged = 0;
  for (const auto& r : results) {
    stats.push_back(r.statistic);
    ridged += r.regularized ? 1 : 0;
  }
  if (ridged > 0) err << "warning: " << ridged << " coordinate(s) needed ridge regularization\n";
  const FdrSelection sel = find_threshold(stats, fdr);
  if (f.format == "json") {
    json doc{{"command", "fdr"},          {"n", data.n()},
             {"p", data.p()},             {"h", cfg.h},
             {"alpha", fdr.alpha},        {"d0", fdr.resolved_d0()},
             {"threshold", sel.threshold}, {"search_cap", sel.search_cap},
             {"used_fallback", sel.used_fallback}, {"fdp_estimate", sel.fdp_estimate}};
    json rows = json::array();
    for (Index j : sel.rejected) {
      const auto& r = results[static_cast<std::size_t>(j)];
      rows.push_back({{"j", j + 1},
                      {"name", name_of(data, j)},
                      {"statistic", r.statistic},
                      {"p_value", r.p_value}});
    }
    doc["rejected"] = rows;
    out << doc.dump(2) << "\n";
  } else {
    out << "# threshold\t" << fmt(sel.threshold) << '\n'
        << "# search_cap\t" << fmt(sel.search_cap) << '\n'
        << "# used_fallback\t" << (sel.used_fallback ? 1 : 0) << '\n'
        << "# fdp_estimate\t" << fmt(sel.fdp_estimate) << '\n'
        << "j\tname\tstatistic\tp_value\n";
    for (Index j : sel.rejected) {
      const auto& r = results[static_cast<std::size_t>(j)];
      out << j + 1 << '\t' << name_of(data, j) << '\t' << fmt(r.statistic) << '\t'
          << fmt(r.p_value) << '\n';
    }
  }
  return kExitOk;
}

int cmd_simulate(const DesignOptions& o, const FitOptions& f, const std::string& mode_flag,
                 double alpha, const std::string& export_path, std::ostream& out,
                 std::ostream& err) {
  const SimDesign design = make_design(o, f.seed);
  const TestConfig cfg = make_config(f);
  const int threads = resolve_threads(f.threads);

  if (!export_path.empty()) {
    const LabeledData sim = generate(design, 0);
    Dataset data{sim.X, sim.y, {}, "y"};
    std::ofstream file(export_path, std::ios::binary);
    if (!file) throw InputError("cannot write '" + export_path + "'");
    write_dataset(file, data);
    err << "mfhd simulate: wrote replication 0 of model " << model_name(design.model)
        << " to " << export_path << "\n";
    return kExitOk;
  }

  bool fdr_mode = design.model == SimModel::IV || design.model == SimModel::V;
  if (mode_flag == "rates") fdr_mode = false;
  if (mode_flag == "fdr") fdr_mode = true;
  err << "mfhd simulate: model " << model_name(design.model) << ", n = " << design.n
      << ", p = " << design.p << ", " << o.reps << " replications on " << threads
      << " thread(s)\n";
  const auto start = std::chrono::steady_clock::now();

  json doc{{"command", "simulate"}, {"model", model_name(design.model)},
           {"n", design.n},         {"p", design.p},
           {"rho", design.rho},     {"h", cfg.h},
           {"reps", o.reps},        {"seed", f.seed}};
  if (fdr_mode) {
    FdrConfig fdr;
    fdr.alpha = alpha;
    fdr.h = cfg.h;
    const FdrStudy s = simulate_fdr(design, cfg, fdr, o.reps, threads);
    if (f.format == "json") {
      doc["sparsity"] = design.sparsity;
      doc["alpha"] = alpha;
      auto cell = [](const MonteCarloCell& c) { return json{{"mean", c.mean}, {"se", c.se}}; };
      doc["fdr"] = cell(s.fdr);
      doc["power"] = cell(s.power);
      doc["fallback"] = cell(s.fallback);
      doc["rejected"] = cell(s.rejected);
      out << doc.dump(2) << "\n";
    } else {
      out << "metric\tmean\tse\treps\n";
      const std::pair<const char*, MonteCarloCell> rows[] = {
          {"fdr", s.fdr}, {"power", s.power}, {"fallback", s.fallback}, {"rejected", s.rejected}};
      for (const auto& [name, c] : rows) {
        out << name << '\t' << fmt(c.mean) << '\t' << fmt(c.se) << '\t' << s.reps << '\n';
      }
    }
  } else {
    const auto coords = resolve_coords(o.coords, design.p);
    const RejectionStudy s = simulate_rejections(design, coords, cfg, o.reps, o.level, threads);
    if (s.regularized > 0) {
      err << "warning: " << s.regularized << " test(s) needed ridge regularization\n";
    }
    if (f.format == "json") {
      doc["level"] = o.level;
      json cells = json::array();
      for (std::size_t c = 0; c < s.coords.size(); ++c) {
        cells.push_back({{"j", s.coords[c] + 1},
                         {"active", static_cast<bool>(s.active[c])},
                         {"rate", s.rate[c].mean},
                         {"se", s.rate[c].se}});
      }
      doc["cells"] = cells;
      out << doc.dump(2) << "\n";
    } else {
      out << "j\tactive\trate\tse\treps\n";
      for (std::size_t c = 0; c < s.coords.size(); ++c) {
        out << s.coords[c] + 1 << '\t' << (s.active[c] ? 1 : 0) << '\t' << fmt(s.rate[c].mean)
            << '\t' << fmt(s.rate[c].se) << '\t' << s.reps << '\n';
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  err << "mfhd simulate: done in " << fmt(secs) << " s\n";
  return kExitOk;
}

int cmd_power_sweep(const DesignOptions& o, const FitOptions& f, int h_min, int h_max,
                    std::ostream& out, std::ostream& err) {
  const SimDesign design = make_design(o, f.seed);
  const TestConfig cfg = make_config(f);
  if (h_min < 1 || h_max < h_min) throw InputError("need 1 <= h-min <= h-max");
  std::vector<int> hs;
  for (int h = h_min; h <= h_max; ++h) hs.push_back(h);
  const auto coords = resolve_coords(o.coords, design.p);
  const int threads = resolve_threads(f.threads);
  err << "mfhd power-sweep: model " << model_name(design.model) << ", h = " << h_min << ".."
      << h_max << ", " << o.reps << " replications on " << threads << " thread(s)\n";
  const PowerSweep s = power_sweep(design, coords, cfg, hs, o.reps, o.level, threads);
  if (f.format == "json") {
    json doc{{"command", "power-sweep"}, {"model", model_name(design.model)},
             {"n", design.n},            {"p", design.p},
             {"reps", o.reps},           {"level", o.level},
             {"seed", f.seed}};
    json cells = json::array();
    for (std::size_t hi = 0; hi < s.h_values.size(); ++hi) {
      for (std::size_t c = 0; c < s.coords.size(); ++c) {
        cells.push_back({{"h", s.h_values[hi]},
                         {"j", s.coords[c] + 1},
                         {"active", static_cast<bool>(s.active[c])},
                         {"rate", s.rate[hi][c].mean},
                         {"se", s.rate[hi][c].se}});
      }
    }
    doc["cells"] = cells;
    out << doc.dump(2) << "\n";
  } else {
    out << "h\tj\tactive\trate\tse\treps\n";
    for (std::size_t hi = 0; hi < s.h_values.size(); ++hi) {
      for (std::size_t c = 0; c < s.coords.size(); ++c) {
        out << s.h_values[hi] << '\t' << s.coords[c] + 1 << '\t' << (s.active[c] ? 1 : 0)
            << '\t' << fmt(s.rate[hi][c].mean) << '\t' << fmt(s.rate[hi][c].se) << '\t'
            << s.reps << '\n';
      }
    }
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model-free significance tests and FDR selection for high-dimensional data",
               "mfhd"};
  app.set_help_flag("--help", "print this help message and exit");
  app.require_subcommand(1);

  FitOptions test_fit, fdr_fit, sim_fit, sweep_fit;
  DataOptions test_data, fdr_data;
  DesignOptions sim_design, sweep_design;
  sweep_design.reps = 200;

  auto* test = app.add_subcommand("test", "score test for selected coordinates");
  add_data_options(test, test_data);
  add_fit_options(test, test_fit);
  std::string j_list, gamma = "auto";
  test->add_option("--j", j_list, "1-based coordinates, comma separated (default: all)");
  test->add_option("--gamma", gamma, "auto, shared or direct transform fits")
      ->check(CLI::IsMember({"auto", "shared", "direct"}));

  auto* fdr = app.add_subcommand("fdr", "FDR-controlled selection over all coordinates");
  add_data_options(fdr, fdr_data);
  add_fit_options(fdr, fdr_fit);
  double alpha = 0.1, cap = -1.0, fallback = -1.0;
  std::string d0 = "auto";
  fdr->add_option("--alpha", alpha, "target FDR level");
  fdr->add_option("--d0", d0, "'auto' or the d0 of the search cap 2 log p + 2 d0 log log p");
  fdr->add_option("--cap", cap, "explicit search cap (overrides d0)");
  fdr->add_option("--fallback", fallback, "explicit fallback threshold");

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo rejection rates or FDR/power");
  add_design_options(sim, sim_design);
  add_fit_options(sim, sim_fit);
  std::string sim_mode = "auto", export_path;
  double sim_alpha = 0.1;
  sim->add_option("--mode", sim_mode, "auto, rates or fdr")
      ->check(CLI::IsMember({"auto", "rates", "fdr"}));
  sim->add_option("--alpha", sim_alpha, "target FDR level in fdr mode");
  sim->add_option("--export", export_path, "write replication 0 as CSV and exit");

  auto* sweep = app.add_subcommand("power-sweep", "rejection rate as a function of h");
  add_design_options(sweep, sweep_design);
  add_fit_options(sweep, sweep_fit);
  int h_min = 1, h_max = 20;
  sweep->add_option("--h-min", h_min, "smallest h");
  sweep->add_option("--h-max", h_max, "largest h");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*test) return cmd_test(test_data, test_fit, j_list, gamma, out, err);
    if (*fdr) {
      return cmd_fdr(fdr_data, fdr_fit, make_fdr(alpha, fdr_fit.h, d0, cap, fallback), out,
                     err);
    }
    if (*sim) return cmd_simulate(sim_design, sim_fit, sim_mode, sim_alpha, export_path, out, err);
    if (*sweep) return cmd_power_sweep(sweep_design, sweep_fit, h_min, h_max, out, err);
  } catch (const DegenerateTestError& e) {
    err << "mfhd: degenerate test: " << e.what() << "\n";
    return kExitDegenerateTest;
  } catch (const InputError& e) {
    err << "mfhd: input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::domain_error& e) {
    err << "mfhd: invalid argument: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "mfhd: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"mfhd"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mfhd
