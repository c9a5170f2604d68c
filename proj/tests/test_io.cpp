#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "wotlab/checkpoint.hpp"
#include "wotlab/checks.hpp"
#include "wotlab/config.hpp"
#include "wotlab/csv.hpp"
#include "wotlab/errors.hpp"
#include "wotlab/svg.hpp"
#include "wotlab/toml_lite.hpp"

using namespace wotlab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "wotlab_io_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  REQUIRE(file.good());
  return std::string(std::istreambuf_iterator<char>(file),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("toml: scalars, sections, arrays, comments") {
  const std::string text = R"(# top comment
title = "weak transport"   # trailing comment
count = 42
ratio = 0.5
flag = true
big = 1_000_000

[section.sub]
name = "nested"
values = [1.0, 2.0,
          3.0,]
words = ["a", "b"]

[other]
deep.key = -7
)";
  const auto doc = parse_toml(text);
  CHECK(doc["title"] == "weak transport");
  CHECK(doc["count"] == 42);
  CHECK(doc["count"].is_number_integer());
  CHECK(doc["ratio"] == 0.5);
  CHECK(doc["ratio"].is_number_float());
  CHECK(doc["flag"] == true);
  CHECK(doc["big"] == 1000000);
  CHECK(doc["section"]["sub"]["name"] == "nested");
  CHECK(doc["section"]["sub"]["values"].size() == 3);
  CHECK(doc["section"]["sub"]["values"][2] == 3.0);
  CHECK(doc["section"]["sub"]["words"][1] == "b");
  CHECK(doc["other"]["deep"]["key"] == -7);
}

TEST_CASE("toml: string escapes and floats in many shapes") {
  const auto doc = parse_toml(
      "s = \"line\\nbreak \\\"quoted\\\" back\\\\slash\"\n"
      "a = 1e-3\nb = 2.5E2\nc = -0.125\n");
  CHECK(doc["s"] == "line\nbreak \"quoted\" back\\slash");
  CHECK(doc["a"] == 1e-3);
  CHECK(doc["b"] == 250.0);
  CHECK(doc["c"] == -0.125);
}

TEST_CASE("toml: errors carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_toml("x = 1\ny = \n"),
                       doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_toml("x = 1\nx = 2\n"),
                       doctest::Contains("duplicate"), ConfigError);
  CHECK_THROWS_AS(parse_toml("[[table]]\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("x = \"unterminated\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("x = [1, 2\n"), ConfigError);
}

TEST_CASE("csv: quoting, layout, and round-trippable doubles") {
  const std::string text = csv_to_string(
      {"name", "value", "note"},
      {{CsvCell{std::string("plain")}, CsvCell{1.5}, CsvCell{std::string("a,b")}},
       {CsvCell{std::string("quote\"inside")}, CsvCell{static_cast<long>(-3)},
        CsvCell{std::string("line\nbreak")}}});
  CHECK(text ==
        "name,value,note\n"
        "plain,1.5,\"a,b\"\n"
        "\"quote\"\"inside\",-3,\"line\nbreak\"\n");

  const double pi = 3.14159265358979323846;
  CHECK(std::strtod(format_double(pi).c_str(), nullptr) == pi);
  CHECK(std::strtod(format_double(1e-17).c_str(), nullptr) == 1e-17);
  CHECK(format_double(2.0) == "2");

  CHECK_THROWS_AS(
      csv_to_string({"a", "b"}, {{CsvCell{1.0}}}),
      std::invalid_argument);
}

TEST_CASE("csv: file writer emits exact bytes") {
  const fs::path path = temp_dir() / "table.csv";
  write_csv(path.string(), {"x", "y"},
            {{CsvCell{static_cast<long>(1)}, CsvCell{0.5}},
             {CsvCell{static_cast<long>(2)}, CsvCell{-0.25}}});
  CHECK(slurp(path) == "x,y\n1,0.5\n2,-0.25\n");
  write_metrics_csv((temp_dir() / "metrics.csv").string(),
                    {{"alpha", 1.0}, {"beta", 0.125}});
  CHECK(slurp(temp_dir() / "metrics.csv") ==
        "name,value\nalpha,1\nbeta,0.125\n");
  fs::remove_all(temp_dir());
}

TEST_CASE("svg: deterministic bytes, sane structure") {
  Eigen::MatrixXd pts(3, 2);
  pts << 0.0, 0.0, 1.0, 2.0, -1.0, 0.5;
  std::vector<ScatterGroup> groups;
  groups.push_back({pts, {"#ff0000", 2.0, 0.8}, "cloud"});
  PlotAxes axes = auto_axes(groups);
  axes.title = "test";
  const std::string a = svg_scatter_to_string(groups, axes);
  const std::string b = svg_scatter_to_string(groups, axes);
  CHECK(a == b);
  CHECK(a.find("<svg") != std::string::npos);
  CHECK(a.find("circle") != std::string::npos);
  CHECK(a.find("#ff0000") != std::string::npos);
  CHECK(a.find("cloud") != std::string::npos);

  // Empty input still renders a frame but no markers.
  std::vector<ScatterGroup> empty;
  const std::string frame = svg_scatter_to_string(empty, auto_axes(empty));
  CHECK(frame.find("<svg") != std::string::npos);
  CHECK(frame.find("circle") == std::string::npos);

  // Non-finite points are dropped rather than serialized.
  Eigen::MatrixXd bad(2, 2);
  bad << 0.0, 0.0, std::nan(""), 1.0;
  std::vector<ScatterGroup> with_bad;
  with_bad.push_back({bad, {}, ""});
  const std::string filtered =
      svg_scatter_to_string(with_bad, auto_axes(with_bad));
  CHECK(filtered.find("nan") == std::string::npos);
}

TEST_CASE("svg: line plots incl. log scale") {
  Eigen::VectorXd x(4), y(4);
  x << 1, 2, 3, 4;
  y << 1e-3, 1e-2, 1e-1, 1.0;
  std::vector<LineSeries> series;
  series.push_back({x, y, "#00aa00", "decades"});
  PlotAxes axes = auto_axes(series, true);
  const std::string svg = svg_lines_to_string(series, axes);
  CHECK(svg.find("polyline") != std::string::npos);
  PlotAxes broken = axes;
  broken.log_y = true;
  broken.y_min = 0.0;
  CHECK_THROWS_AS(svg_lines_to_string(series, broken), std::invalid_argument);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const fs::path path = temp_dir() / "net.bin";
  const MlpNet net = make_mlp({3, 16, 16, 2}, 77);
  save_checkpoint(net, path.string());
  const MlpNet loaded = load_checkpoint(path.string());
  REQUIRE(loaded.layer_sizes == net.layer_sizes);
  CHECK(loaded.activation == net.activation);
  CHECK((flatten_params(loaded) - flatten_params(net)).cwiseAbs().maxCoeff() ==
        0.0);

  // The activation tag survives for the non-default choice too.
  const MlpNet soft = make_mlp({2, 4, 1}, 78, Activation::kSoftplus);
  save_checkpoint(soft, path.string());
  const MlpNet soft_loaded = load_checkpoint(path.string());
  CHECK(soft_loaded.activation == Activation::kSoftplus);
  CHECK((flatten_params(soft_loaded) - flatten_params(soft))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // Corrupted magic and truncation both fail loudly.
  {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    file << "NOTMAGIC";
  }
  CHECK_THROWS_AS(load_checkpoint(path.string()), std::runtime_error);
  {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    file << "WOTMLP01";  // header only, no payload
  }
  CHECK_THROWS_AS(load_checkpoint(path.string()), std::runtime_error);
  fs::remove_all(temp_dir());
}

TEST_CASE("experiment config: parsing, defaults, validation") {
  const std::string text = R"(
experiment = "toy2d"
seed = 5
n_samples = 128
out_dir = "out/test"

[source]
family = "gaussian"
mean = [0.0, 0.0]
cov_diag = [0.25, 0.25]

[target]
family = "gaussian"
mean = [0.0, 0.0]
cov_diag = [1.0, 1.0]

[cost]
kernel = "distance"
alpha = 1.0
gamma = 0.5

[trainer]
total_f_iters = 50
batch_x = 16
)";
  const ExperimentConfig config = parse_experiment_config(parse_toml(text));
  CHECK(config.experiment == "toy2d");
  CHECK(config.seed == 5);
  CHECK(config.n_samples == 128);
  CHECK(config.out_dir == "out/test");
  REQUIRE(config.source.has_value());
  CHECK(family_name(*config.source) == "gaussian");
  CHECK(std::get<DistanceInduced>(config.cost.kernel).alpha == 1.0);
  CHECK(config.cost.gamma == 0.5);
  CHECK(config.trainer.total_f_iters == 50);
  CHECK(config.trainer.batch_x == 16);
  CHECK(config.trainer.k_t == 10);       // default preserved
  CHECK(config.trainer.seed == 5);       // inherited from the top level
  CHECK(config.trainer.latent_dim == 2); // 2D source default
  CHECK(config.trainer.cost.gamma == 0.5);
  CHECK(!config.solver.gap_tol.has_value());
  CHECK(config.sweep_gammas.size() == 4);

  const auto echo = config_echo(config);
  CHECK(echo["experiment"] == "toy2d");
  CHECK(echo["trainer"]["total_f_iters"] == 50);
  CHECK(echo["solver"]["gap_tol"] == "auto");
  CHECK(echo["cost"]["kernel"] == "distance");
}

TEST_CASE("experiment config: rejections") {
  const auto base = [](const std::string& tweak) {
    return parse_toml("experiment = \"toy1d\"\n" + tweak +
                      "[source]\nfamily = \"gaussian\"\nmean = [0.0]\n"
                      "cov_diag = [1.0]\n"
                      "[target]\nfamily = \"gaussian\"\nmean = [0.0]\n"
                      "cov_diag = [4.0]\n"
                      "[cost]\nkernel = \"bilinear\"\ngamma = 1.0\n");
  };
  CHECK_NOTHROW(parse_experiment_config(base("")));
  CHECK_THROWS_AS(parse_experiment_config(base("bogus = 1\n")), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(base("n_samples = 1\n")),
                  ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(base("seed = -4\n")), ConfigError);

  // toy1d requires one-dimensional marginals.
  auto doc = base("");
  doc["source"]["mean"] = {0.0, 0.0};
  doc["source"]["cov_diag"] = {1.0, 1.0};
  CHECK_THROWS_AS(parse_experiment_config(doc), ConfigError);

  // A missing cost table is an error outside checks/fake_demo.
  auto no_cost = base("");
  no_cost.erase("cost");
  CHECK_THROWS_AS(parse_experiment_config(no_cost), ConfigError);

  // checks needs no marginals at all.
  CHECK_NOTHROW(parse_experiment_config(parse_toml("experiment = \"checks\"\n")));

  // Unknown kernels and families are named in the error.
  auto bad_kernel = base("");
  bad_kernel["cost"]["kernel"] = "sobolev";
  CHECK_THROWS_AS(parse_experiment_config(bad_kernel), ConfigError);
}

TEST_CASE("mutation hook: a biased pair divisor trips the unbiasedness suite") {
  CheckOptions options;
  options.unbias_fixed_batches = 20000;
  options.unbias_random_specs = 6;
  options.unbias_random_batches = 1500;

  const CheckResult healthy = check_unbiasedness(options);
  CHECK(healthy.passed);

  // Same estimator but with the pair term divided by n^2 instead of
  // n (n - 1): biased low, which the randomized section must detect.
  options.estimator = [](const WeakCostSpec& spec, const Eigen::VectorXd& x,
                         const Eigen::MatrixXd& outputs) {
    const int n = static_cast<int>(outputs.rows());
    double diag = 0.0, cross = 0.0, pair = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd oi = outputs.row(i).transpose();
      diag += kernel_eval(spec.kernel, oi, oi);
      cross += kernel_eval(spec.kernel, x, oi);
      for (int j = 0; j < n; ++j) {
        if (j != i) {
          pair += kernel_eval(spec.kernel, oi, outputs.row(j).transpose());
        }
      }
    }
    return 0.5 * kernel_eval(spec.kernel, x, x) +
           0.5 * (1.0 - spec.gamma) * diag / n - cross / n +
           0.5 * spec.gamma * pair / (n * n);
  };
  const CheckResult broken = check_unbiasedness(options);
  CHECK(!broken.passed);
  CHECK(!broken.detail.empty());
}
