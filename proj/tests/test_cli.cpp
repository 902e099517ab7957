#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cli_fixture.hpp"
#include "tsinterp/attribution_io.hpp"
#include "tsinterp/config.hpp"
#include "tsinterp/csv.hpp"
#include "tsinterp/errors.hpp"
#include "tsinterp/linear_model.hpp"
#include "tsinterp/manifest.hpp"
#include "tsinterp/model_io.hpp"
#include "tsinterp/pipeline.hpp"

using namespace tsinterp;
using testing::CommandResult;
using testing::ScratchDir;
using testing::read_file;
namespace fs = std::filesystem;

namespace {

const std::string kCli = TSINTERP_CLI_PATH;
const std::string kServer = FAKE_SERVER_PATH;

/// A scratch directory holding the synthetic dataset and a config file.
struct Workspace {
  explicit Workspace(const std::string& name, const std::string& methods, const std::string& extra = "")
      : dir(name), task(testing::write_synthetic_dataset(dir.path(), SyntheticConfig{})) {
    write_config(testing::synthetic_config(task, methods, extra));
  }

  void write_config(const std::string& text) const { testing::write_file(config(), text); }
  fs::path config() const { return dir / "run.ini"; }
  fs::path run() const { return dir / "run"; }

  CommandResult cli(std::vector<std::string> args) const {
    args.insert(args.begin(), {"--config", config().string()});
    return testing::run_cli(kCli, args, dir / "cli.log");
  }
  RunConfig loaded() const { return load_config(config()); }

  ScratchDir dir;
  SyntheticTruthTask task;
};

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

std::vector<std::vector<std::string>> read_rows(const fs::path& path) {
  std::ifstream in(path);
  CsvReader reader(in, path.string());
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  while (reader.next(row)) rows.push_back(row);
  return rows;
}

double number(const std::string& text) {
  double v = 0.0;
  REQUIRE(parse_double(text, v));
  return v;
}

}  // namespace

TEST_CASE("config parsing: defaults, overrides, path resolution and errors") {
  std::istringstream minimal("[data]\ninput = raw/data.csv\n");
  const RunConfig c = parse_config(minimal, "mem.ini", "/base");
  CHECK(c.seed == 7);
  CHECK(c.workers == 0);
  CHECK(c.resolved_workers() >= 1);
  CHECK(c.k_bins == std::vector<double>{5.0, 10.0});
  CHECK(c.methods.empty());
  CHECK(c.permutation_batch == 32);
  CHECK(c.input == fs::path("/base/raw/data.csv"));
  CHECK(c.output == fs::path("/base/out"));

  std::istringstream full(
      "[data]\nfeatures = pop:static, vax:dynamic, cases:target\ncalendar = month, weekday\n"
      "[interpret]\nmethods = feature_ablation, integrated_gradients\nig_rule = riemann_midpoint\n"
      "[evaluate]\nk_bins = 1, 2.5\n[run]\nseed = 42\noutput = /abs/run\n");
  const RunConfig f = parse_config(full, "mem.ini", "/base");
  REQUIRE(f.features.size() == 3);
  CHECK(f.features[0].role == FeatureRole::static_input);
  CHECK(f.full_schema().size() == 5);
  CHECK(f.full_schema()[4].role == FeatureRole::known_future);
  CHECK(f.methods == std::vector<Method>{Method::feature_ablation, Method::integrated_gradients});
  CHECK(f.ig_rule == PathRule::riemann_midpoint);
  CHECK(f.k_bins == std::vector<double>{1.0, 2.5});
  CHECK(f.seed == 42);
  CHECK(f.output == fs::path("/abs/run"));

  std::istringstream commented("[window]\nlookback = 21   ; three weeks\n[model]\nendpoint = stdio:serve;x\n");
  const RunConfig cm = parse_config(commented, "mem.ini", "/base");
  CHECK(cm.window.lookback == 21);
  CHECK(cm.endpoint == "stdio:serve;x");

  // The snapshot is itself a config that resolves to the same settings.
  std::istringstream again(config_snapshot(f));
  CHECK(config_snapshot(parse_config(again, "snapshot", "/elsewhere")) == config_snapshot(f));

  auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_config(in, "bad.ini", "/");
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("[run]\nsede = 3\n").find("sede") != std::string::npos);
  CHECK(error_of("[runn]\nseed = 3\n").find("runn") != std::string::npos);
  CHECK(error_of("[window]\nlookback = many\n").find("window.lookback") != std::string::npos);
  CHECK(error_of("[data]\nfeatures = cases\n").find("cases") != std::string::npos);
  CHECK(error_of("[interpret]\nmethods = saliency\n").find("saliency") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/run.ini"), ValidationError);
}

TEST_CASE("preprocess writes three splits and a stats sidecar, and reruns reproduce them") {
  const Workspace ws("pre", "feature_ablation");
  const auto first = ws.cli({"preprocess"});
  REQUIRE_MESSAGE(first.code == 0, first.output);
  for (const char* name : {"train.csv", "validation.csv", "test.csv", "stats.txt"}) {
    CHECK(fs::is_regular_file(ws.run() / "preprocessed" / name));
  }
  const auto digests = [&] {
    std::map<std::string, std::string> d;
    for (const char* name : {"train.csv", "validation.csv", "test.csv", "stats.txt"}) {
      d[name] = sha256_file(ws.run() / "preprocessed" / name);
    }
    return d;
  };
  const auto before = digests();
  REQUIRE(ws.cli({"preprocess"}).code == 0);
  CHECK(digests() == before);

  // Evaluation splits carry exactly L steps of context before their own range.
  const RunConfig config = ws.loaded();
  const PreparedData data = load_prepared(config);
  CHECK(data.explain.owned_begin == config.window.lookback);
  CHECK(data.explain.time_count() == config.window.lookback + config.test_len);
  CHECK(data.train.time_count() == 200 - 14 - 28);
}

TEST_CASE("preprocess: a missing column exits 1 and names it") {
  const Workspace ws("missing_col", "feature_ablation");
  std::string text = read_file(ws.config());
  ws.write_config(replace(text, "cases:target", "group_9:dynamic, cases:target"));
  const auto r = ws.cli({"preprocess"});
  CHECK(r.code == 1);
  CHECK(r.output.find("group_9") != std::string::npos);
}

TEST_CASE("interpret: an empty method list exits 1") {
  const Workspace ws("no_methods", "feature_ablation");
  REQUIRE(ws.cli({"preprocess"}).code == 0);
  ws.write_config(replace(read_file(ws.config()), "methods = feature_ablation", "methods ="));
  const auto r = ws.cli({"interpret"});
  CHECK(r.code == 1);
  CHECK(r.output.find("methods") != std::string::npos);
}

TEST_CASE("interpret: the feature ablation file equals the literal two-pass relevance") {
  const Workspace ws("fa_oracle", "feature_ablation");
  REQUIRE(ws.cli({"preprocess"}).code == 0);
  const auto r = ws.cli({"interpret"});
  REQUIRE_MESSAGE(r.code == 0, r.output);

  const RunConfig config = ws.loaded();
  const PreparedData data = load_prepared(config);
  const ModelShape shape = model_shape(config, data.train_windows);
  const auto model = open_model(config, shape);
  std::ifstream in(attribution_path(config, Method::feature_ablation));
  const auto phis = read_attribution_csv(in, "fa", data.explain_windows.input_features, tensor_shape(shape));
  REQUIRE(phis.size() == data.explain_windows.instances.size());
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const auto& x = data.explain_windows.instances[i].input;
    for (std::size_t j = 0; j < shape.features; ++j) {
      for (std::size_t l = 0; l < shape.lookback; ++l) {
        const Grid expected = brute_force_relevance(*model, x, j, l, 0.0);
        for (std::size_t tau = 0; tau < shape.horizon; ++tau) {
          if (phis[i].at(0, tau, j, l) != expected(0, tau)) ++mismatches;
        }
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("interpret: stochastic methods are reproducible and independent of the worker count") {
  const std::string methods =
      "feature_permutation, morris_sensitivity, feature_occlusion, augmented_feature_occlusion, gradient_shap";
  const Workspace ws("determinism", methods);
  REQUIRE(ws.cli({"preprocess"}).code == 0);
  REQUIRE(ws.cli({"--workers", "1", "interpret"}).code == 0);
  const auto one = ws.loaded();
  std::map<std::string, std::string> serial;
  for (Method m : one.methods) serial[std::string(to_string(m))] = read_file(attribution_path(one, m));

  REQUIRE(ws.cli({"--workers", "3", "interpret"}).code == 0);
  for (Method m : one.methods) {
    CHECK_MESSAGE(read_file(attribution_path(one, m)) == serial[std::string(to_string(m))], to_string(m));
  }

  REQUIRE(ws.cli({"--seed", "8", "interpret"}).code == 0);
  CHECK(read_file(attribution_path(one, Method::feature_occlusion)) != serial["feature_occlusion"]);
}

TEST_CASE("evaluate: a missing attribution file exits 1 naming the method") {
  const Workspace ws("missing_attr", "feature_ablation");
  REQUIRE(ws.cli({"preprocess"}).code == 0);
  REQUIRE(ws.cli({"interpret"}).code == 0);
  ws.write_config(replace(read_file(ws.config()), "methods = feature_ablation",
                          "methods = feature_ablation, integrated_gradients"));
  const auto r = ws.cli({"evaluate"});
  CHECK(r.code == 1);
  CHECK(r.output.find("integrated_gradients") != std::string::npos);
}

TEST_CASE("evaluate: group evaluation without a truth file is a configuration error") {
  const Workspace ws("no_truth", "feature_ablation");
  std::string text = replace(read_file(ws.config()), "truth = truth.csv", "groups = group_0, group_1, group_2");
  ws.write_config(text);
  REQUIRE(ws.cli({"preprocess"}).code == 0);
  REQUIRE(ws.cli({"interpret"}).code == 0);
  const auto r = ws.cli({"evaluate"});
  CHECK(r.code == 1);
  CHECK(r.output.find("truth") != std::string::npos);
}

TEST_CASE("evaluate: the synthetic task recovers the planted group shares") {
  const Workspace ws("synthetic", "feature_ablation, morris_sensitivity, integrated_gradients");
  for (const char* stage : {"preprocess", "interpret", "evaluate"}) {
    const auto r = ws.cli({stage});
    REQUIRE_MESSAGE(r.code == 0, r.output);
  }
  const auto rows = read_rows(ws.run() / "evaluation" / "groundtruth_summary.csv");
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    INFO(row[0]);
    CHECK(number(row[1]) < 0.01);
    CHECK(number(row[3]) >= 0.95);
  }
}

TEST_CASE("evaluate: a constant model yields zero faithfulness rows") {
  const Workspace ws("constant", "feature_ablation, feature_occlusion, gradient_shap");
  REQUIRE(ws.cli({"preprocess"}).code == 0);
  const RunConfig config = ws.loaded();
  const PreparedData data = load_prepared(config);
  const ModelShape shape = model_shape(config, data.train_windows);
  const fs::path model = ws.dir / "constant.json";
  save_model(model, ReferenceLinearModel(shape, std::vector<double>(shape.output_size() * shape.cells(), 0.0),
                                         std::vector<double>(shape.output_size(), 3.0)));
  const std::string text = replace(read_file(ws.config()), "kind = linear", "kind = linear\npath = constant.json");
  ws.write_config(text);
  REQUIRE(ws.cli({"interpret"}).code == 0);

  // Zero attribution mass has no group shares to compare.
  const auto with_truth = ws.cli({"evaluate"});
  CHECK(with_truth.code == 1);
  CHECK(with_truth.output.find("feature_ablation") != std::string::npos);

  ws.write_config(replace(text, "truth = truth.csv\n", ""));
  const auto r = ws.cli({"evaluate"});
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const auto rows = read_rows(ws.run() / "evaluation" / "faithfulness.csv");
  CHECK(rows.size() == 12);
  for (const auto& row : rows) CHECK(number(row[4]) == 0.0);
  for (const auto& row : read_rows(ws.run() / "evaluation" / "faithfulness_instances.csv")) {
    CHECK(number(row[4]) == 0.0);
  }
}

TEST_CASE("the manifest holds a digest for every output file") {
  const Workspace ws("manifest", "feature_ablation, integrated_gradients");
  for (const char* stage : {"preprocess", "interpret", "evaluate", "report"}) {
    REQUIRE(ws.cli({stage}).code == 0);
  }
  const auto doc = nlohmann::json::parse(read_file(ws.run() / "manifest.json"));
  CHECK(doc["version"] == kEngineVersion);
  CHECK(doc["seed"] == 7);
  CHECK(doc["config"].get<std::string>().find("methods = feature_ablation, integrated_gradients") !=
        std::string::npos);
  CHECK(doc["inputs"].size() == 2);  // raw panel and truth
  for (const char* stage : {"preprocess", "interpret", "evaluate"}) CHECK(doc["stages"].contains(stage));
  CHECK(doc["stages"]["interpret"]["methods"].contains("integrated_gradients"));

  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(ws.run())) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
    ++files;
    const auto rel = fs::relative(entry.path(), ws.run()).generic_string();
    INFO(rel);
    REQUIRE(doc["outputs"].contains(rel));
    CHECK(doc["outputs"][rel] == sha256_file(entry.path()));
  }
  CHECK(files == doc["outputs"].size());
}

TEST_CASE("sha256 of known inputs") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("report: full runs, single-method runs, partial runs and corrupted files") {
  SUBCASE("one method gives one-row tables") {
    const Workspace ws("report_one", "feature_ablation");
    for (const char* stage : {"preprocess", "interpret", "evaluate", "report"}) REQUIRE(ws.cli({stage}).code == 0);
    const std::string summary = read_file(ws.run() / "summary.txt");
    CHECK(summary.find("feature_ablation") != std::string::npos);
    CHECK(summary.find("integrated_gradients") == std::string::npos);
    CHECK(summary.find("not available") == std::string::npos);
    const auto faith = summary.substr(summary.find("Faithfulness"));
    const auto table = faith.substr(0, faith.find("\n\n"));
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);  // title, header, rule
  }
  SUBCASE("a run without evaluation lists the gaps") {
    const Workspace ws("report_partial", "feature_ablation");
    REQUIRE(ws.cli({"preprocess"}).code == 0);
    REQUIRE(ws.cli({"report"}).code == 0);
    const std::string summary = read_file(ws.run() / "summary.txt");
    CHECK(summary.find("interpret   not run") != std::string::npos);
    CHECK(summary.find("faithfulness.csv is missing") != std::string::npos);
  }
  SUBCASE("a corrupted CSV is named with its line") {
    const Workspace ws("report_corrupt", "feature_ablation, integrated_gradients");
    for (const char* stage : {"preprocess", "interpret", "evaluate"}) REQUIRE(ws.cli({stage}).code == 0);
    const fs::path faith = ws.run() / "evaluation" / "faithfulness.csv";
    std::string text = read_file(faith);
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    lines[3] = lines[3].substr(0, lines[3].rfind(',')) + ",oops";
    std::string joined;
    for (const auto& l : lines) joined += l + "\n";
    testing::write_file(faith, joined);
    const auto r = ws.cli({"report"});
    CHECK(r.code == 1);
    CHECK(r.output.find("faithfulness.csv:4") != std::string::npos);
    CHECK(r.output.find("oops") != std::string::npos);
  }
}

TEST_CASE("external models: handshake failures exit 2 and served models reproduce in-process attributions") {
  const Workspace ws("external", "feature_ablation, integrated_gradients");
  REQUIRE(ws.cli({"preprocess"}).code == 0);
  REQUIRE(ws.cli({"interpret"}).code == 0);
  const RunConfig local = ws.loaded();
  const std::string fa = read_file(attribution_path(local, Method::feature_ablation));
  const std::string ig = read_file(attribution_path(local, Method::integrated_gradients));
  const fs::path served = ws.dir / "served.json";
  fs::copy_file(ws.run() / "model.json", served);

  const std::string base = read_file(ws.config());
  ws.write_config(replace(base, "kind = linear", "kind = external\nendpoint = stdio:" + kServer + " --sum 1,1,1,1,0"));
  const auto bad = ws.cli({"interpret"});
  CHECK(bad.code == 2);
  CHECK(bad.output.find("protocol") != std::string::npos);

  ws.write_config(replace(base, "kind = linear", "kind = external\nendpoint = stdio:" + kServer + " --model " +
                                                     served.string()));
  const auto good = ws.cli({"interpret"});
  REQUIRE_MESSAGE(good.code == 0, good.output);
  const RunConfig remote = ws.loaded();
  const PreparedData data = load_prepared(remote);
  const TensorShape shape = tensor_shape(model_shape(remote, data.train_windows));
  for (auto [method, reference] : {std::pair{Method::feature_ablation, fa}, std::pair{Method::integrated_gradients, ig}}) {
    std::istringstream a(reference);
    std::ifstream b(attribution_path(remote, method));
    const auto expected = read_attribution_csv(a, "local", data.explain_windows.input_features, shape);
    const auto got = read_attribution_csv(b, "remote", data.explain_windows.input_features, shape);
    REQUIRE(expected.size() == got.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      for (std::size_t c = 0; c < got[i].values.size(); ++c) {
        worst = std::max(worst, std::abs(got[i].values[c] - expected[i].values[c]));
      }
    }
    CHECK_MESSAGE(worst <= 1e-9, to_string(method));
  }
  REQUIRE(ws.cli({"evaluate"}).code == 0);
}

TEST_CASE("CLI usage errors") {
  const ScratchDir dir("usage");
  CHECK(testing::run_cli(kCli, {}, dir / "log").code == 1);
  CHECK(testing::run_cli(kCli, {"interpret"}, dir / "log").code == 1);
  CHECK(testing::run_cli(kCli, {"--help"}, dir / "log").code == 0);
  const auto missing = testing::run_cli(kCli, {"--config", (dir / "none.ini").string(), "preprocess"}, dir / "log");
  CHECK(missing.code == 1);
  CHECK(missing.output.find("none.ini") != std::string::npos);
}
