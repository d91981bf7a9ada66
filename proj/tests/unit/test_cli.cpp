#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mfhd/cli.hpp"
#include "mfhd/data_gen.hpp"
#include "mfhd/dataset.hpp"
#include "mfhd/score_test.hpp"

using namespace mfhd;
using json = nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string tmp_path(const std::string& name) {
  std::filesystem::create_directories(MFHD_TEST_TMPDIR);
  return std::string(MFHD_TEST_TMPDIR) + "/" + name;
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

// Writes a simulated replication to disk and returns the path.
std::string export_model(const std::string& model, int n, int p, const std::string& name) {
  const std::string path = tmp_path(name);
  const Run r = cli({"simulate", "--model", model, "--n", std::to_string(n), "--p",
                     std::to_string(p), "--seed", "11", "--export", path});
  REQUIRE(r.code == kExitOk);
  return path;
}

}  // namespace

TEST_CASE("help and usage errors") {
  const Run help = cli({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("simulate") != std::string::npos);
  CHECK(cli({}).code == kExitInputError);
  CHECK(cli({"frobnicate"}).code == kExitInputError);
  CHECK(cli({"test"}).code == kExitInputError);  // --input is required
  CHECK(cli({"simulate", "--model", "VII"}).code == kExitInputError);
  CHECK(cli({"simulate", "--format", "xml"}).code == kExitInputError);
}

TEST_CASE("export then test reproduces the library result") {
  const std::string path = export_model("I", 120, 15, "model1.csv");
  const Run r = cli({"test", "--input", path, "--j", "1,2,15", "--format", "json"});
  REQUIRE(r.code == kExitOk);
  const json doc = json::parse(r.out);
  CHECK(doc["command"] == "test");
  CHECK(doc["n"] == 120);
  CHECK(doc["p"] == 15);
  CHECK(doc["h"] == 5);
  REQUIRE(doc["results"].size() == 3);

  const Dataset data = read_dataset_file(path, "y");
  TestConfig cfg;
  cfg.seed = 42;
  const std::vector<Index> coords{0, 1, 14};
  const auto api = test_coordinates(data, coords, cfg, 1, GammaMode::Shared);
  for (std::size_t k = 0; k < coords.size(); ++k) {
    const json& row = doc["results"][k];
    CHECK(row["j"] == coords[k] + 1);
    CHECK(row["name"] == "X" + std::to_string(coords[k] + 1));
    CHECK(row["statistic"].get<double>() == doctest::Approx(api[k].statistic).epsilon(1e-10));
    CHECK(row["p_value"].get<double>() == doctest::Approx(api[k].p_value).epsilon(1e-10));
    CHECK(row["delta_hat"].is_number());
    CHECK(row["regularized"].is_boolean());
  }
  CHECK(doc["results"][0]["p_value"].get<double>() < 1e-3);

  // A single coordinate defaults to the direct transform fit.
  const Run one = cli({"test", "--input", path, "--j", "2"});
  REQUIRE(one.code == kExitOk);
  const auto direct = test_coordinates(data, std::vector<Index>{1}, cfg, 1, GammaMode::Direct);
  const auto rows = lines(one.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "j\tname\tstatistic\tp_value\tdelta_hat\tregularized");
  CHECK(std::stod(rows[1].substr(rows[1].find('\t', 2) + 1)) ==
        doctest::Approx(direct[0].statistic).epsilon(1e-9));
  CHECK(one.err.find("mfhd test") != std::string::npos);
}

TEST_CASE("test command input errors") {
  const std::string path = export_model("I", 60, 6, "small.csv");
  CHECK(cli({"test", "--input", path, "--j", "7"}).code == kExitInputError);
  CHECK(cli({"test", "--input", path, "--j", "0"}).code == kExitInputError);
  CHECK(cli({"test", "--input", path, "--j", "x"}).code == kExitInputError);
  CHECK(cli({"test", "--input", path, "--response", "nope"}).code == kExitInputError);
  CHECK(cli({"test", "--input", tmp_path("missing.csv")}).code == kExitInputError);

  const std::string bad = tmp_path("bad.csv");
  write_file(bad, "x1,y\n1,2\n3,oops\n");
  const Run r = cli({"test", "--input", bad});
  CHECK(r.code == kExitInputError);
  CHECK(r.err.find("line 3") != std::string::npos);
  CHECK(r.out.empty());

  // Three distinct response values cannot support five transforms.
  std::ostringstream csv;
  csv << "x1,x2,y\n";
  for (int i = 0; i < 40; ++i) csv << i << ',' << (i * 7) % 11 << ',' << i % 3 << '\n';
  const std::string coarse = tmp_path("coarse.csv");
  write_file(coarse, csv.str());
  CHECK(cli({"test", "--input", coarse}).code == kExitInputError);
  CHECK(cli({"test", "--input", coarse, "--h", "2"}).code == kExitOk);
}

TEST_CASE("simulate output schemas") {
  const Run tsv = cli({"simulate", "--model", "I", "--n", "80", "--p", "12", "--reps", "3",
                       "--coords", "1,2,12"});
  REQUIRE(tsv.code == kExitOk);
  const auto rows = lines(tsv.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "j\tactive\trate\tse\treps");
  CHECK(rows[1].rfind("1\t1\t", 0) == 0);
  CHECK(rows[3].rfind("12\t0\t", 0) == 0);

  const Run js = cli({"simulate", "--model", "II", "--n", "80", "--p", "12", "--reps", "2",
                      "--format", "json"});
  REQUIRE(js.code == kExitOk);
  const json doc = json::parse(js.out);
  CHECK(doc["model"] == "II");
  CHECK(doc["reps"] == 2);
  CHECK(doc["seed"] == 42);
  REQUIRE(doc["cells"].size() == 10);
  CHECK(doc["cells"][0]["j"] == 1);
  CHECK(doc["cells"][0]["active"] == true);
  CHECK(doc["cells"][9]["j"] == 12);
  CHECK(doc["cells"][9]["rate"].is_number());

  const Run fdr = cli({"simulate", "--model", "IV", "--n", "100", "--p", "30", "--reps", "2"});
  REQUIRE(fdr.code == kExitOk);
  CHECK(first_line(fdr.out) == "metric\tmean\tse\treps");
  CHECK(lines(fdr.out).size() == 5);
  CHECK(cli({"simulate", "--n", "80", "--p", "12", "--reps", "2", "--coords", "13"}).code ==
        kExitInputError);
}

TEST_CASE("power sweep schema") {
  const Run r = cli({"power-sweep", "--n", "80", "--p", "10", "--reps", "2", "--h-min", "1",
                     "--h-max", "3", "--coords", "1,10", "--format", "json"});
  REQUIRE(r.code == kExitOk);
  const json doc = json::parse(r.out);
  CHECK(doc["command"] == "power-sweep");
  REQUIRE(doc["cells"].size() == 6);
  CHECK(doc["cells"][0]["h"] == 1);
  CHECK(doc["cells"][5]["h"] == 3);
  CHECK(doc["cells"][5]["j"] == 10);
  CHECK(cli({"power-sweep", "--h-min", "4", "--h-max", "2"}).code == kExitInputError);
}

TEST_CASE("fdr command") {
  const std::string path = export_model("IV", 200, 40, "model4.csv");
  const Run r = cli({"fdr", "--input", path, "--format", "json"});
  REQUIRE(r.code == kExitOk);
  const json doc = json::parse(r.out);
  for (const char* key : {"threshold", "search_cap", "fdp_estimate", "alpha", "d0"}) {
    CHECK(doc[key].is_number());
  }
  CHECK(doc["used_fallback"].is_boolean());
  int hits = 0;
  for (const auto& row : doc["rejected"]) {
    CHECK(row["statistic"].get<double>() >= doc["threshold"].get<double>());
    const int j = row["j"].get<int>();
    if (j >= 1 && j <= 4) ++hits;
  }
  CHECK(hits >= 3);

  const Run tsv = cli({"fdr", "--input", path});
  REQUIRE(tsv.code == kExitOk);
  const auto rows = lines(tsv.out);
  REQUIRE(rows.size() >= 5);
  CHECK(rows[0].rfind("# threshold\t", 0) == 0);
  CHECK(rows[2].rfind("# used_fallback\t", 0) == 0);
  CHECK(rows[4] == "j\tname\tstatistic\tp_value");
  CHECK(rows.size() - 5 == doc["rejected"].size());

  // Pure noise: nothing should pass a huge explicit fallback.
  std::ostringstream csv;
  const LabeledData noise = [] {
    SimDesign d;
    d.n = 100;
    d.p = 20;
    d.seed = 3;
    LabeledData g = generate(d, 0);
    g.y = gen_ar1_gaussian(100, 1, 0.0, 77).col(0);
    return g;
  }();
  Dataset data{noise.X, noise.y, {}, "y"};
  const std::string noise_path = tmp_path("noise.csv");
  {
    std::ofstream f(noise_path, std::ios::binary);
    write_dataset(f, data);
  }
  const Run quiet = cli({"fdr", "--input", noise_path, "--cap", "1", "--fallback", "1000",
                         "--format", "json"});
  REQUIRE(quiet.code == kExitOk);
  const json qd = json::parse(quiet.out);
  CHECK(qd["used_fallback"] == true);
  CHECK(qd["threshold"] == 1000.0);
  CHECK(qd["rejected"].empty());

  CHECK(cli({"fdr", "--input", path, "--alpha", "1.5"}).code == kExitInputError);
  CHECK(cli({"fdr", "--input", path, "--d0", "abc"}).code == kExitInputError);
}
