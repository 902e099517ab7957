#include "tsinterp/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "tsinterp/attribution_io.hpp"
#include "tsinterp/baseline.hpp"
#include "tsinterp/csv.hpp"
#include "tsinterp/errors.hpp"
#include "tsinterp/external_model.hpp"
#include "tsinterp/faithfulness.hpp"
#include "tsinterp/groundtruth.hpp"
#include "tsinterp/linear_model.hpp"
#include "tsinterp/manifest.hpp"
#include "tsinterp/metrics.hpp"
#include "tsinterp/mlp_model.hpp"
#include "tsinterp/model_io.hpp"
#include "tsinterp/parallel.hpp"
#include "tsinterp/rng.hpp"

namespace tsinterp {

namespace fs = std::filesystem;

namespace {

const char* kSplitNames[] = {"train", "validation", "test"};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void log(const std::string& message) { std::cerr << "tsinterp: " << message << '\n'; }

/// Writes through a temporary file so readers never see a partial output.
void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    body(out);
    out.flush();
    if (!out) throw ValidationError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void require_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw ValidationError(what + " is not configured");
  if (!fs::is_regular_file(path)) throw ValidationError(what + " not found: " + path.string());
}

fs::path preprocessed_path(const RunConfig& config, const std::string& split) {
  return config.output / run_layout::kPreprocessed / (split + ".csv");
}

LoadOptions load_options(const RunConfig& config) { return {config.entity_column, config.date_column}; }

std::size_t resolve_train_end(const RunConfig& config, const TimeSeriesPanel& panel) {
  const std::size_t T = panel.time_count();
  if (config.train_end.empty()) {
    const std::size_t held_out = config.val_len + config.test_len;
    if (held_out + 1 > T) {
      throw ValidationError("split: " + std::to_string(held_out) + " validation/test steps leave no training data in " +
                            std::to_string(T) + " time steps");
    }
    return T - held_out - 1;
  }
  TimePoint date;
  if (parse_time(config.train_end, date)) {
    const auto it = std::upper_bound(panel.time_index.begin(), panel.time_index.end(), date);
    if (it == panel.time_index.begin()) {
      throw ValidationError("split.train_end " + config.train_end + " precedes the first date of the data");
    }
    return static_cast<std::size_t>(it - panel.time_index.begin()) - 1;
  }
  try {
    std::size_t used = 0;
    const long long index = std::stoll(config.train_end, &used);
    if (used != config.train_end.size() || index < 0) throw std::invalid_argument(config.train_end);
    return static_cast<std::size_t>(index);
  } catch (const std::exception&) {
    throw ValidationError("split.train_end must be a date or a step index, got '" + config.train_end + "'");
  }
}

TimeSeriesPanel load_split(const RunConfig& config, const std::string& split, const KeyValues& stats_kv) {
  const fs::path path = preprocessed_path(config, split);
  require_file(path, "preprocessed " + split + " split (run preprocess first)");
  const auto schema = config.full_schema();
  TimeSeriesPanel panel = load_panel(path, schema, load_options(config));
  const auto owned = stats_kv.find("split." + split + ".owned_begin");
  if (owned == stats_kv.end()) throw ValidationError(config.output.string() + "/" + run_layout::kStats +
                                                     ": missing split." + split + ".owned_begin");
  TimePoint begin;
  if (!parse_time(owned->second, begin)) {
    throw ValidationError("stats sidecar: bad date for split." + split + ".owned_begin");
  }
  const auto it = std::lower_bound(panel.time_index.begin(), panel.time_index.end(), begin);
  if (it == panel.time_index.end() || *it != begin) {
    throw ValidationError(path.string() + ": split start " + owned->second + " is not in the file");
  }
  panel.owned_begin = static_cast<std::size_t>(it - panel.time_index.begin());
  return panel;
}

/// Counterfactual distribution named in the config: zero, gaussian,
/// bootstrap (training values) or a numeric constant.
BaselineGenerator parse_baseline(const std::string& name, const TimeSeriesPanel& train,
                                 std::span<const std::string> features, const std::string& key) {
  if (name == "zero") return BaselineGenerator::zero();
  if (name == "gaussian") return BaselineGenerator::gaussian(0.0, 1.0);
  if (name == "bootstrap") return BaselineGenerator::bootstrap_from_panel(train, features);
  double value = 0.0;
  if (parse_double(name, value)) return BaselineGenerator::constant(value);
  throw ValidationError(key + " must be zero, gaussian, bootstrap or a number, got '" + name + "'");
}

std::string default_mask_baseline(const RunConfig& config, Method method) {
  switch (method) {
    case Method::feature_ablation:
      return config.ablation_baseline;
    case Method::feature_permutation:
    case Method::augmented_feature_occlusion:
      return "bootstrap";
    case Method::feature_occlusion:
    case Method::gradient_shap:
      return "gaussian";
    case Method::morris_sensitivity:
    case Method::integrated_gradients:
      return "zero";
  }
  return "zero";
}

void validate_interpret_settings(const RunConfig& config) {
  if (config.methods.empty()) throw ValidationError("interpret.methods is empty; list at least one method");
  if (config.permutation_batch < 2) throw ValidationError("interpret.permutation_batch must be at least 2");
  if (config.ig_steps == 0) throw ValidationError("interpret.ig_steps must be positive");
  if (config.gs_samples == 0) throw ValidationError("interpret.gs_samples must be positive");
  if (!(config.gs_noise >= 0.0)) throw ValidationError("interpret.gs_noise must be nonnegative");
  if (!(config.fd_eps > 0.0)) throw ValidationError("interpret.fd_eps must be positive");
  if (config.morris_trajectories == 0) throw ValidationError("interpret.morris_trajectories must be positive");
  if (config.model_kind != "linear" && config.model_kind != "mlp" && config.model_kind != "external") {
    throw ValidationError("model.kind must be linear, mlp or external, got '" + config.model_kind + "'");
  }
  if (config.model_kind == "external" && config.endpoint.empty()) {
    throw ValidationError("model.kind = external needs model.endpoint");
  }
}

std::vector<ModelInput> inputs_of(const WindowSet& windows) {
  std::vector<ModelInput> inputs;
  inputs.reserve(windows.instances.size());
  for (const auto& w : windows.instances) inputs.push_back(w.input);
  return inputs;
}

/// Groups consecutive instances into permutation batches of the configured
/// size; a trailing singleton joins the previous batch.
std::vector<std::pair<std::size_t, std::size_t>> permutation_batches(std::size_t n, std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t begin = 0; begin < n; begin += batch) ranges.emplace_back(begin, std::min(n, begin + batch));
  if (ranges.size() > 1 && ranges.back().second - ranges.back().first == 1) {
    ranges[ranges.size() - 2].second = n;
    ranges.pop_back();
  }
  return ranges;
}

std::vector<AttributionTensor> run_method(Method method, const RunConfig& config, const ForecastOracle& oracle,
                                          const PreparedData& data) {
  const auto& instances = data.explain_windows.instances;
  const auto& features = data.explain_windows.input_features;
  const std::size_t n = instances.size();
  const std::string tag(to_string(method));
  std::vector<AttributionTensor> out(n);
  const std::size_t workers = config.resolved_workers();

  auto per_instance = [&](const std::function<AttributionTensor(const ModelInput&, std::uint64_t)>& fn) {
    parallel_for(n, workers, [&](std::size_t i) { out[i] = fn(instances[i].input, derive_seed(config.seed, tag, i)); });
  };

  switch (method) {
    case Method::feature_ablation: {
      const auto baseline =
          parse_baseline(config.ablation_baseline, data.train, features, "interpret.ablation_baseline");
      per_instance([&](const ModelInput& x, std::uint64_t seed) {
        return feature_ablation(oracle, x, baseline, seed, config.granularity);
      });
      break;
    }
    case Method::feature_permutation: {
      if (n < 2) throw ValidationError("feature_permutation needs at least two explained instances");
      const auto batches = permutation_batches(n, config.permutation_batch);
      parallel_for(batches.size(), workers, [&](std::size_t b) {
        const auto [begin, end] = batches[b];
        std::vector<ModelInput> batch;
        for (std::size_t i = begin; i < end; ++i) batch.push_back(instances[i].input);
        auto result = feature_permutation(oracle, batch, derive_seed(config.seed, tag, b));
        for (std::size_t i = begin; i < end; ++i) out[i] = std::move(result[i - begin]);
      });
      break;
    }
    case Method::morris_sensitivity: {
      const auto bounds = feature_bounds(data.train, features);
      per_instance([&](const ModelInput& x, std::uint64_t seed) {
        MorrisConfig mc;
        mc.trajectories = config.morris_trajectories;
        mc.levels = config.morris_levels;
        mc.bounds = bounds;
        mc.start = config.morris_start;
        mc.seed = seed;
        return morris_sensitivity(oracle, x, mc);
      });
      break;
    }
    case Method::feature_occlusion:
      per_instance([&](const ModelInput& x, std::uint64_t seed) {
        return feature_occlusion(oracle, x, seed, config.granularity);
      });
      break;
    case Method::augmented_feature_occlusion: {
      const auto bootstrap = BaselineGenerator::bootstrap_from_panel(data.train, features);
      per_instance([&](const ModelInput& x, std::uint64_t seed) {
        return augmented_feature_occlusion(oracle, x, bootstrap, seed, config.granularity);
      });
      break;
    }
    case Method::integrated_gradients: {
      IntegratedGradientsConfig ig;
      ig.steps = config.ig_steps;
      ig.rule = config.ig_rule;
      ig.fd_eps = config.fd_eps;
      per_instance([&](const ModelInput& x, std::uint64_t) {
        return integrated_gradients(oracle, x, Grid(x.past.rows(), x.past.cols()), ig);
      });
      break;
    }
    case Method::gradient_shap: {
      const auto baseline = BaselineGenerator::gaussian(0.0, 1.0);
      per_instance([&](const ModelInput& x, std::uint64_t seed) {
        GradientShapConfig gs;
        gs.samples = config.gs_samples;
        gs.noise = config.gs_noise;
        gs.seed = seed;
        gs.fd_eps = config.fd_eps;
        return gradient_shap(oracle, x, baseline, gs);
      });
      break;
    }
  }
  const bool with_time = data.explain.has_time_of_day();
  for (std::size_t i = 0; i < n; ++i) {
    out[i].method = tag;
    out[i].entity = instances[i].entity;
    out[i].anchor = format_time(instances[i].anchor_time, with_time);
  }
  return out;
}

/// Attribution tensors of one method, matched to the explained instances.
std::vector<AttributionTensor> load_attributions(const RunConfig& config, Method method, const PreparedData& data,
                                                 const TensorShape& shape) {
  const fs::path path = attribution_path(config, method);
  if (!fs::is_regular_file(path)) {
    throw ValidationError("no attributions for method " + std::string(to_string(method)) + " (expected " +
                          path.string() + "; run interpret first)");
  }
  std::ifstream in(path);
  auto tensors = read_attribution_csv(in, path.string(), data.explain_windows.input_features, shape);
  const auto& instances = data.explain_windows.instances;
  const bool with_time = data.explain.has_time_of_day();
  if (tensors.size() != instances.size()) {
    throw ValidationError(path.string() + ": has " + std::to_string(tensors.size()) + " instances but " +
                          std::to_string(instances.size()) + " are being evaluated (rerun interpret)");
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto anchor = format_time(instances[i].anchor_time, with_time);
    if (tensors[i].entity != instances[i].entity || tensors[i].anchor != anchor) {
      throw ValidationError(path.string() + ": instance " + std::to_string(i) + " is " + tensors[i].entity + " " +
                            tensors[i].anchor + " but " + instances[i].entity + " " + anchor +
                            " was expected (rerun interpret)");
    }
    if (tensors[i].method != to_string(method)) {
      throw ValidationError(path.string() + ": rows are labelled '" + tensors[i].method + "', expected '" +
                            std::string(to_string(method)) + "'");
    }
  }
  return tensors;
}

struct ForecastRow {
  std::string split;
  std::size_t instances = 0;
  double mae = 0.0, rmse = 0.0, rmsle = 0.0;
  std::optional<double> r2;
};

ForecastRow forecast_accuracy(const std::string& split, const ForecastOracle& oracle, const WindowSet& windows,
                              const StandardizationStats& stats, const std::string& target) {
  ForecastRow row;
  row.split = split;
  row.instances = windows.instances.size();
  if (windows.instances.empty()) throw ValidationError("no " + split + " windows to score the forecaster on");
  const auto inputs = inputs_of(windows);
  const auto preds = predict_chunked(oracle, inputs);
  std::vector<double> p, t;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Grid& y = windows.instances[i].targets;
    for (std::size_t r = 0; r < y.rows(); ++r) {
      for (std::size_t c = 0; c < y.cols(); ++c) {
        p.push_back(stats.invert(target, preds[i](r, c)));
        t.push_back(stats.invert(target, y(r, c)));
      }
    }
  }
  row.mae = mae(p, t);
  row.rmse = rmse(p, t);
  row.rmsle = rmsle(p, t);
  try {
    row.r2 = r2_score(p, t);
  } catch (const ValidationError&) {
    row.r2.reset();
  }
  return row;
}

}  // namespace

std::string instance_label(const WindowedInstance& instance, bool with_time) {
  return instance.entity + "@" + format_time(instance.anchor_time, with_time);
}

fs::path attribution_path(const RunConfig& config, Method method) {
  return config.output / run_layout::kAttributions / (std::string(to_string(method)) + ".csv");
}

ModelShape model_shape(const RunConfig& config, const WindowSet& windows) {
  ModelShape shape;
  shape.features = windows.input_features.size();
  shape.lookback = config.window.lookback;
  shape.horizon = config.window.horizon;
  shape.outputs = config.window.outputs;
  shape.known_future = windows.known_future_features.size();
  return shape;
}

void cmd_preprocess(const RunConfig& config) {
  const Stopwatch clock;
  require_file(config.input, "data.input");
  if (config.features.empty()) throw ValidationError("data.features is empty");
  validate_schema(config.features);
  config.window.validate();
  config.preprocess.validate();

  TimeSeriesPanel raw = load_panel(config.input, config.features, load_options(config));
  TimeSeriesPanel panel = add_calendar_features(raw, config.calendar);
  std::vector<ClipRecord> clip_records;
  if (config.clip) {
    auto clipped = clip_outliers(panel, config.preprocess);
    panel = std::move(clipped.panel);
    clip_records = std::move(clipped.records);
    for (const auto& r : clip_records) {
      if (r.skipped) log("clipping skipped for " + r.entity + "/" + r.feature + ": " + r.message);
    }
  }
  panel = interpolate_missing(panel);

  const std::size_t train_end = resolve_train_end(config, panel);
  const SplitPanels splits = split_chronological(panel, train_end, config.val_len, config.test_len);
  const Standardized train = standardize(splits.train);
  const TimeSeriesPanel parts[] = {
      train.panel,
      trim_context(standardize(splits.validation, train.stats).panel, config.window.lookback),
      trim_context(standardize(splits.test, train.stats).panel, config.window.lookback),
  };

  RunManifest manifest(config.output);
  manifest.set_config(config_snapshot(config), config.seed);
  manifest.record_input(config.input);

  const bool with_time = panel.has_time_of_day();
  KeyValues kv;
  put_stats(kv, train.stats);
  put_clip_records(kv, clip_records);
  for (const auto& f : config.full_schema()) kv["schema." + f.name] = std::string(to_string(f.role));
  kv["window.lookback"] = std::to_string(config.window.lookback);
  kv["window.horizon"] = std::to_string(config.window.horizon);
  kv["split.train_end"] = format_time(panel.time_index[train_end], with_time);
  for (std::size_t s = 0; s < 3; ++s) {
    const TimeSeriesPanel& part = parts[s];
    const std::string name = kSplitNames[s];
    kv["split." + name + ".owned_begin"] =
        part.owned_begin < part.time_count() ? format_time(part.time_index[part.owned_begin], with_time) : "";
    kv["split." + name + ".steps"] = std::to_string(part.time_count() - part.owned_begin);
    const fs::path path = preprocessed_path(config, name);
    write_file(path, [&](std::ostream& out) { write_panel_csv(out, part, load_options(config)); });
    manifest.record_output(path);
  }
  const fs::path stats_path = config.output / run_layout::kStats;
  write_file(stats_path, [&](std::ostream& out) { write_key_values(out, kv, "preprocessing statistics"); });
  manifest.record_output(stats_path);
  manifest.record_stage("preprocess", clock.seconds());
  manifest.save();
  log("preprocess: wrote " + (config.output / run_layout::kPreprocessed).string());
}

PreparedData load_prepared(const RunConfig& config) {
  const fs::path stats_path = config.output / run_layout::kStats;
  require_file(stats_path, "preprocessing statistics (run preprocess first)");
  std::ifstream in(stats_path);
  const KeyValues kv = read_key_values(in, stats_path.string());

  const std::string& split = config.explain_split;
  if (split != "train" && split != "validation" && split != "test") {
    throw ValidationError("interpret.split must be train, validation or test, got '" + split + "'");
  }
  PreparedData data;
  data.stats = get_stats(kv);
  data.train = load_split(config, "train", kv);
  data.explain = split == "train" ? data.train : load_split(config, split, kv);
  data.train_windows = make_windows(data.train, config.window);
  data.explain_windows = make_windows(data.explain, config.window);
  if (data.train_windows.instances.empty()) throw ValidationError("the training split yields no windows");
  if (data.explain_windows.instances.empty()) throw ValidationError("the " + split + " split yields no windows");
  if (config.max_instances > 0 && data.explain_windows.instances.size() > config.max_instances) {
    data.explain_windows.instances.resize(config.max_instances);
  }
  return data;
}

std::unique_ptr<ForecastOracle> open_model(const RunConfig& config, const ModelShape& shape) {
  if (config.model_kind == "external") {
    return ExternalModelHandle::connect(Endpoint::parse(config.endpoint), shape);
  }
  const fs::path path = config.model_path.empty() ? config.output / run_layout::kModel : config.model_path;
  require_file(path, "model file (run interpret first)");
  auto model = load_model(path);
  const ModelShape got = model->shape();
  if (got.features != shape.features || got.lookback != shape.lookback || got.horizon != shape.horizon ||
      got.outputs != shape.outputs) {
    throw ValidationError(path.string() + ": model shape " + got.describe() + " does not match the data " +
                          shape.describe());
  }
  return model;
}

void cmd_interpret(const RunConfig& config) {
  const Stopwatch clock;
  validate_interpret_settings(config);
  const PreparedData data = load_prepared(config);
  const ModelShape shape = model_shape(config, data.train_windows);

  RunManifest manifest(config.output);
  manifest.set_config(config_snapshot(config), config.seed);

  std::unique_ptr<ForecastOracle> oracle;
  const fs::path model_file = config.output / run_layout::kModel;
  if (config.model_kind == "external") {
    oracle = open_model(config, shape);
  } else if (!config.model_path.empty()) {
    oracle = open_model(config, shape);
    manifest.record_input(config.model_path);
  } else {
    const auto& train = data.train_windows.instances;
    if (config.model_kind == "linear") {
      auto fit = fit_linear(train, config.ridge);
      save_model(model_file, fit.model);
      log("interpret: fitted linear model, training MSE " + format_double(fit.train_loss));
    } else {
      auto fit = fit_mlp(train, config.mlp, derive_seed(config.seed, "mlp_fit"));
      save_model(model_file, fit.model);
      log("interpret: fitted MLP, training MSE " + format_double(fit.train_loss));
    }
    manifest.record_output(model_file);
    oracle = load_model(model_file);
  }

  for (Method method : config.methods) {
    const Stopwatch method_clock;
    const auto tensors = run_method(method, config, *oracle, data);
    const fs::path path = attribution_path(config, method);
    write_file(path, [&](std::ostream& out) {
      write_attribution_csv(out, tensors, data.explain_windows.input_features);
    });
    const double seconds = method_clock.seconds();
    manifest.record_method(std::string(to_string(method)), seconds, tensors.size());
    manifest.record_output(path);
    std::ostringstream msg;
    msg << "interpret: " << to_string(method) << " on " << tensors.size() << " instances in " << std::fixed
        << std::setprecision(3) << seconds << " s";
    log(msg.str());
  }
  manifest.record_stage("interpret", clock.seconds());
  manifest.save();
}

void cmd_evaluate(const RunConfig& config) {
  const Stopwatch clock;
  if (config.methods.empty()) throw ValidationError("interpret.methods is empty; nothing to evaluate");
  if (config.k_bins.empty()) throw ValidationError("evaluate.k_bins is empty");
  if (!config.groups.empty() && config.truth.empty()) {
    throw ValidationError("evaluate: data.groups is set but no ground-truth CSV (data.truth) is configured");
  }
  if (!config.truth.empty()) require_file(config.truth, "data.truth");

  const PreparedData data = load_prepared(config);
  const ModelShape shape = model_shape(config, data.train_windows);
  const auto oracle = open_model(config, shape);
  const TensorShape tshape = tensor_shape(shape);
  const auto& features = data.explain_windows.input_features;
  const auto inputs = inputs_of(data.explain_windows);
  const bool with_time = data.explain.has_time_of_day();

  RunManifest manifest(config.output);
  manifest.set_config(config_snapshot(config), config.seed);
  const fs::path eval_dir = config.output / run_layout::kEvaluation;

  std::map<Method, std::vector<AttributionTensor>> attributions;
  for (Method method : config.methods) attributions[method] = load_attributions(config, method, data, tshape);

  std::vector<FaithfulnessEntry> entries;
  for (Method method : config.methods) {
    const std::string tag(to_string(method));
    const std::string baseline_name =
        config.mask_baseline.empty() ? default_mask_baseline(config, method) : config.mask_baseline;
    AopcrConfig ac;
    ac.k_bins = config.k_bins;
    ac.baseline = parse_baseline(baseline_name, data.train, features, "evaluate.mask_baseline");
    ac.seed = derive_seed(config.seed, "faithfulness/" + tag);
    entries.push_back({tag, config.k_bins, aopcr(*oracle, inputs, attributions[method], ac)});
  }
  std::vector<std::string> labels;
  for (const auto& w : data.explain_windows.instances) labels.push_back(instance_label(w, with_time));

  const fs::path faith = eval_dir / "faithfulness.csv";
  write_file(faith, [&](std::ostream& out) { write_faithfulness_csv(out, entries); });
  manifest.record_output(faith);
  const fs::path faith_inst = eval_dir / "faithfulness_instances.csv";
  write_file(faith_inst, [&](std::ostream& out) { write_faithfulness_instances_csv(out, entries, labels); });
  manifest.record_output(faith_inst);

  const std::string target = data.train.features[data.train.target_index()].name;
  const auto all_explain = make_windows(data.explain, config.window);
  const ForecastRow rows[] = {
      forecast_accuracy("train", *oracle, data.train_windows, data.stats, target),
      forecast_accuracy(config.explain_split, *oracle, all_explain, data.stats, target),
  };
  const fs::path forecast = eval_dir / "forecast_metrics.csv";
  write_file(forecast, [&](std::ostream& out) {
    out << "split,instances,MAE,RMSE,RMSLE,R2\n";
    for (const auto& r : rows) {
      out << r.split << ',' << r.instances << ',' << format_double(r.mae) << ',' << format_double(r.rmse) << ','
          << format_double(r.rmsle) << ',' << (r.r2 ? format_double(*r.r2) : "NA") << '\n';
    }
  });
  manifest.record_output(forecast);

  const fs::path importance = eval_dir / "feature_importance.csv";
  write_file(importance, [&](std::ostream& out) {
    out << "method,feature,importance_percent,rank\n";
    for (Method method : config.methods) {
      const auto pct = feature_importance(attributions[method]);
      const auto ranks = descending_ranks(pct);
      for (std::size_t j = 0; j < features.size(); ++j) {
        out << to_string(method) << ',' << csv_escape(features[j]) << ',' << format_double(pct[j]) << ','
            << ranks[j] << '\n';
      }
    }
  });
  manifest.record_output(importance);

  if (!config.truth.empty()) {
    const GroupTruth truth = load_group_truth(config.truth);
    manifest.record_input(config.truth);
    const std::vector<std::string> groups = config.groups.empty() ? truth.groups : config.groups;
    if (groups != truth.groups) {
      throw ValidationError("data.groups must list the truth file's groups in its order (" + config.truth.string() +
                            ")");
    }
    const auto rows_of_groups = group_rows(features, groups);
    const auto calendar = PeriodCalendar::weekly(truth.periods);
    std::vector<SensitivityComparison> comparisons;
    for (Method method : config.methods) {
      std::vector<GroupScoreRecord> records;
      const auto& phis = attributions[method];
      for (std::size_t i = 0; i < phis.size(); ++i) {
        records.push_back({data.explain_windows.instances[i].anchor_time,
                           aggregate_group_attribution(phis[i], rows_of_groups)});
      }
      const auto scores = rollup_to_periods(records, data.explain_windows.step_seconds, calendar);
      try {
        comparisons.push_back(compare_to_truth(std::string(to_string(method)), scores, truth));
      } catch (const ValidationError& e) {
        throw ValidationError("ground-truth comparison for " + std::string(to_string(method)) + ": " + e.what());
      }
    }
    const fs::path cmp = eval_dir / "groundtruth_comparison.csv";
    write_file(cmp, [&](std::ostream& out) { write_comparison_csv(out, comparisons); });
    manifest.record_output(cmp);
    const fs::path summary = eval_dir / "groundtruth_summary.csv";
    write_file(summary, [&](std::ostream& out) { write_comparison_summary_csv(out, comparisons); });
    manifest.record_output(summary);
  }
  manifest.record_stage("evaluate", clock.seconds());
  manifest.save();
  log("evaluate: wrote " + eval_dir.string());
}

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a CSV into a table, checking that the named columns hold numbers.
std::optional<Table> read_table(const fs::path& path, std::span<const std::string> numeric_columns) {
  if (!fs::is_regular_file(path)) return std::nullopt;
  std::ifstream in(path);
  CsvReader reader(in, path.string());
  Table table;
  table.header = reader.header();
  std::vector<std::size_t> numeric;
  for (const auto& c : numeric_columns) numeric.push_back(reader.require_column(c));
  std::vector<std::string> row;
  while (reader.next(row)) {
    for (std::size_t c : numeric) {
      double v = 0.0;
      if (row[c] != "NA" && !parse_double(row[c], v)) {
        throw ValidationError(path.string() + ":" + std::to_string(reader.line_number()) + ": column '" +
                              table.header[c] + "' has non-numeric value '" + row[c] + "'");
      }
    }
    table.rows.push_back(row);
  }
  return table;
}

std::string fixed(const std::string& text, int digits) {
  double v = 0.0;
  if (!parse_double(text, v)) return text;
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      out << "  " << std::left << std::setw(static_cast<int>(width[c])) << (c < cells.size() ? cells[c] : "");
    }
    out << '\n';
  };
  line(header);
  std::vector<std::string> rule;
  for (auto w : width) rule.push_back(std::string(w, '-'));
  line(rule);
  for (const auto& r : rows) line(r);
}

void gap(std::ostream& out, const fs::path& missing) {
  out << "  not available: " << missing.filename().string() << " is missing (stage not run)\n";
}

}  // namespace

fs::path cmd_report(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw ValidationError("run directory not found: " + run_dir.string());
  std::ostringstream out;
  out << "tsinterp run summary\n====================\n\n";

  nlohmann::json manifest;
  const fs::path manifest_path = run_dir / "manifest.json";
  if (fs::is_regular_file(manifest_path)) {
    std::ifstream in(manifest_path);
    try {
      manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(manifest_path.string() + ": invalid JSON (" + e.what() + ")");
    }
  }
  out << "Run\n";
  if (manifest.is_object()) {
    out << "  engine version: " << manifest.value("version", std::string("unknown")) << '\n';
    if (manifest.contains("seed")) out << "  seed: " << manifest["seed"].dump() << '\n';
    std::vector<std::vector<std::string>> rows;
    for (const char* stage : {"preprocess", "interpret", "evaluate"}) {
      if (manifest.contains("stages") && manifest["stages"].contains(stage)) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(3) << manifest["stages"][stage].value("seconds", 0.0);
        rows.push_back({stage, s.str()});
      } else {
        rows.push_back({stage, "not run"});
      }
    }
    print_table(out, {"stage", "seconds"}, rows);
  } else {
    gap(out, manifest_path);
  }

  out << "\nInterpretation time per method\n";
  if (manifest.is_object() && manifest.contains("stages") && manifest["stages"].contains("interpret") &&
      manifest["stages"]["interpret"].contains("methods")) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [method, entry] : manifest["stages"]["interpret"]["methods"].items()) {
      std::ostringstream s;
      s << std::fixed << std::setprecision(3) << entry.value("seconds", 0.0);
      rows.push_back({method, std::to_string(entry.value("instances", 0)), s.str()});
    }
    print_table(out, {"method", "instances", "seconds"}, rows);
  } else {
    out << "  not available: no interpretation recorded in manifest.json\n";
  }

  const fs::path eval = run_dir / run_layout::kEvaluation;
  out << "\nForecast accuracy (original scale)\n";
  const std::vector<std::string> forecast_cols{"MAE", "RMSE", "RMSLE", "R2"};
  if (auto t = read_table(eval / "forecast_metrics.csv", forecast_cols)) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : t->rows) rows.push_back({r[0], r[1], fixed(r[2], 4), fixed(r[3], 4), fixed(r[4], 4), fixed(r[5], 4)});
    print_table(out, {"split", "instances", "MAE", "RMSE", "RMSLE", "R2"}, rows);
  } else {
    gap(out, eval / "forecast_metrics.csv");
  }

  out << "\nFaithfulness (AOPCR; higher comprehensiveness and lower sufficiency are better)\n";
  const std::vector<std::string> value_col{"value"};
  if (auto t = read_table(eval / "faithfulness.csv", value_col)) {
    std::vector<std::string> methods;
    std::map<std::string, std::map<std::string, std::string>> cells;
    for (const auto& r : t->rows) {
      if (std::find(methods.begin(), methods.end(), r[0]) == methods.end()) methods.push_back(r[0]);
      cells[r[0]][r[1] + "_" + r[2]] = fixed(r[4], 6);
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : methods) {
      rows.push_back({m, cells[m]["comprehensiveness_MAE"], cells[m]["comprehensiveness_MSE"],
                      cells[m]["sufficiency_MAE"], cells[m]["sufficiency_MSE"]});
    }
    print_table(out, {"method", "comp MAE", "comp MSE", "suff MAE", "suff MSE"}, rows);
  } else {
    gap(out, eval / "faithfulness.csv");
  }

  out << "\nGround-truth comparison (group shares)\n";
  const std::vector<std::string> gt_cols{"MAE", "RMSE", "NDCG"};
  if (auto t = read_table(eval / "groundtruth_summary.csv", gt_cols)) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : t->rows) rows.push_back({r[0], fixed(r[1], 4), fixed(r[2], 4), fixed(r[3], 4)});
    print_table(out, {"method", "MAE", "RMSE", "NDCG"}, rows);
  } else {
    out << "  not available: no ground truth configured or evaluate not run\n";
  }

  out << "\nFeature importance (% of mean |attribution|)\n";
  const std::vector<std::string> imp_cols{"importance_percent", "rank"};
  if (auto t = read_table(eval / "feature_importance.csv", imp_cols)) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : t->rows) rows.push_back({r[0], r[1], fixed(r[2], 3), r[3]});
    print_table(out, {"method", "feature", "percent", "rank"}, rows);
  } else {
    gap(out, eval / "feature_importance.csv");
  }

  const fs::path summary = run_dir / run_layout::kSummary;
  write_file(summary, [&](std::ostream& o) { o << out.str(); });
  if (manifest.is_object()) {
    RunManifest m(run_dir);
    m.record_output(summary);
    m.save();
  }
  return summary;
}

}  // namespace tsinterp
