#include "tsinterp/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "tsinterp/csv.hpp"
#include "tsinterp/errors.hpp"

namespace tsinterp {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"data", {"input", "entity_column", "date_column", "features", "calendar", "truth", "groups"}},
      {"window", {"lookback", "horizon", "outputs"}},
      {"preprocess", {"clip", "iqr_multiplier", "smoothing_window", "clip_features"}},
      {"split", {"train_end", "val_len", "test_len"}},
      {"model", {"kind", "ridge", "hidden", "learning_rate", "epochs", "batch_size", "endpoint", "path"}},
      {"interpret",
       {"methods", "split", "max_instances", "granularity", "ablation_baseline", "morris_trajectories",
        "morris_levels", "morris_start", "ig_steps", "ig_rule", "gs_samples", "gs_noise", "permutation_batch",
        "fd_eps"}},
      {"evaluate", {"k_bins", "mask_baseline"}},
      {"run", {"seed", "workers", "output"}},
  };
  return keys;
}

/// Drops a trailing "; comment" (the semicolon must follow whitespace or
/// start the value).
std::string strip_comment(const std::string& value) {
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (value[i] == ';' && (i == 0 || value[i - 1] == ' ' || value[i - 1] == '\t')) return value.substr(0, i);
  }
  return value;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string source) : tree_(tree), source_(std::move(source)) {}

  std::optional<std::string> get(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    return trim(strip_comment(*v));
  }

  std::string text(const std::string& key, const std::string& fallback) const { return get(key).value_or(fallback); }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    const auto v = get(key);
    if (!v || v->empty()) return fallback;
    try {
      std::size_t used = 0;
      const long long n = std::stoll(*v, &used);
      if (used != v->size() || n < 0) throw std::invalid_argument(*v);
      return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw ValidationError(source_ + ": " + key + " must be a nonnegative integer, got '" + *v + "'");
    }
  }

  double real(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v || v->empty()) return fallback;
    double out = 0.0;
    if (!parse_double(*v, out)) throw ValidationError(source_ + ": " + key + " must be a number, got '" + *v + "'");
    return out;
  }

  bool flag(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v || v->empty()) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1" || *v == "on") return true;
    if (*v == "false" || *v == "no" || *v == "0" || *v == "off") return false;
    throw ValidationError(source_ + ": " + key + " must be true or false, got '" + *v + "'");
  }

  const std::string& source() const { return source_; }

 private:
  const pt::ptree& tree_;
  std::string source_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i];
  return s;
}

}  // namespace

std::vector<FeatureSpec> RunConfig::full_schema() const {
  std::vector<FeatureSpec> schema = features;
  for (auto field : calendar) schema.push_back({std::string(to_string(field)), FeatureRole::known_future});
  return schema;
}

std::size_t RunConfig::resolved_workers() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

RunConfig parse_config(std::istream& in, const std::string& source, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    auto known = known_keys().find(section);
    if (known == known_keys().end()) throw ValidationError(source + ": unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) throw ValidationError(source + ": unknown key '" + key + "' in [" + section + "]");
    }
  }
  const Reader r(tree, source);
  RunConfig c;

  c.input = resolve(base_dir, r.text("data.input", ""));
  c.entity_column = r.text("data.entity_column", c.entity_column);
  c.date_column = r.text("data.date_column", c.date_column);
  for (const auto& item : split_list(r.text("data.features", ""))) {
    const auto colon = item.rfind(':');
    if (colon == std::string::npos) {
      throw ValidationError(source + ": feature '" + item + "' needs a role (name:static|dynamic|known-future|target)");
    }
    c.features.push_back({trim(item.substr(0, colon)), parse_feature_role(trim(item.substr(colon + 1)))});
  }
  for (const auto& item : split_list(r.text("data.calendar", ""))) c.calendar.push_back(parse_calendar_field(item));
  c.truth = resolve(base_dir, r.text("data.truth", ""));
  c.groups = split_list(r.text("data.groups", ""));

  c.window.lookback = r.count("window.lookback", c.window.lookback);
  c.window.horizon = r.count("window.horizon", c.window.horizon);
  c.window.outputs = r.count("window.outputs", c.window.outputs);

  c.clip = r.flag("preprocess.clip", c.clip);
  c.preprocess.iqr_multiplier = r.real("preprocess.iqr_multiplier", c.preprocess.iqr_multiplier);
  c.preprocess.smoothing_window = r.count("preprocess.smoothing_window", c.preprocess.smoothing_window);
  c.preprocess.clip_features = split_list(r.text("preprocess.clip_features", ""));

  c.train_end = r.text("split.train_end", "");
  c.val_len = r.count("split.val_len", c.val_len);
  c.test_len = r.count("split.test_len", c.test_len);

  c.model_kind = r.text("model.kind", c.model_kind);
  c.ridge = r.real("model.ridge", c.ridge);
  c.mlp.hidden = r.count("model.hidden", c.mlp.hidden);
  c.mlp.learning_rate = r.real("model.learning_rate", c.mlp.learning_rate);
  c.mlp.epochs = r.count("model.epochs", c.mlp.epochs);
  c.mlp.batch_size = r.count("model.batch_size", c.mlp.batch_size);
  c.endpoint = r.text("model.endpoint", "");
  c.model_path = resolve(base_dir, r.text("model.path", ""));

  for (const auto& item : split_list(r.text("interpret.methods", ""))) c.methods.push_back(parse_method(item));
  c.explain_split = r.text("interpret.split", c.explain_split);
  c.max_instances = r.count("interpret.max_instances", c.max_instances);
  const auto gran = r.text("interpret.granularity", "cell");
  if (gran == "cell") c.granularity = Granularity::cell;
  else if (gran == "feature") c.granularity = Granularity::feature;
  else throw ValidationError(source + ": interpret.granularity must be cell or feature, got '" + gran + "'");
  c.ablation_baseline = r.text("interpret.ablation_baseline", c.ablation_baseline);
  c.morris_trajectories = r.count("interpret.morris_trajectories", c.morris_trajectories);
  c.morris_levels = r.count("interpret.morris_levels", c.morris_levels);
  const auto start = r.text("interpret.morris_start", "instance");
  if (start == "instance") c.morris_start = MorrisConfig::Start::instance;
  else if (start == "grid") c.morris_start = MorrisConfig::Start::grid;
  else throw ValidationError(source + ": interpret.morris_start must be instance or grid, got '" + start + "'");
  c.ig_steps = r.count("interpret.ig_steps", c.ig_steps);
  c.ig_rule = parse_path_rule(r.text("interpret.ig_rule", "gauss_legendre"));
  c.gs_samples = r.count("interpret.gs_samples", c.gs_samples);
  c.gs_noise = r.real("interpret.gs_noise", c.gs_noise);
  c.permutation_batch = r.count("interpret.permutation_batch", c.permutation_batch);
  c.fd_eps = r.real("interpret.fd_eps", c.fd_eps);

  if (const auto bins = r.get("evaluate.k_bins"); bins && !bins->empty()) {
    c.k_bins.clear();
    for (const auto& item : split_list(*bins)) {
      double v = 0.0;
      if (!parse_double(item, v)) throw ValidationError(source + ": k_bins entry '" + item + "' is not a number");
      c.k_bins.push_back(v);
    }
  }
  c.mask_baseline = r.text("evaluate.mask_baseline", "");

  if (const auto seed = r.get("run.seed"); seed && !seed->empty()) {
    try {
      std::size_t used = 0;
      c.seed = std::stoull(*seed, &used);
      if (used != seed->size()) throw std::invalid_argument(*seed);
    } catch (const std::exception&) {
      throw ValidationError(source + ": run.seed must be a nonnegative integer, got '" + *seed + "'");
    }
  }
  c.workers = r.count("run.workers", c.workers);
  c.output = resolve(base_dir, r.text("run.output", "out"));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  return parse_config(in, path.string(), path.parent_path());
}

std::string config_snapshot(const RunConfig& c) {
  std::ostringstream o;
  std::vector<std::string> features, calendar, methods, bins;
  for (const auto& f : c.features) features.push_back(f.name + ":" + std::string(to_string(f.role)));
  for (auto f : c.calendar) calendar.emplace_back(to_string(f));
  for (auto m : c.methods) methods.emplace_back(to_string(m));
  for (double k : c.k_bins) bins.push_back(format_double(k));
  o << "[data]\ninput = " << c.input.string() << "\nentity_column = " << c.entity_column
    << "\ndate_column = " << c.date_column << "\nfeatures = " << join(features) << "\ncalendar = " << join(calendar)
    << "\ntruth = " << c.truth.string() << "\ngroups = " << join(c.groups) << "\n\n";
  o << "[window]\nlookback = " << c.window.lookback << "\nhorizon = " << c.window.horizon
    << "\noutputs = " << c.window.outputs << "\n\n";
  o << "[preprocess]\nclip = " << (c.clip ? "true" : "false")
    << "\niqr_multiplier = " << format_double(c.preprocess.iqr_multiplier)
    << "\nsmoothing_window = " << c.preprocess.smoothing_window
    << "\nclip_features = " << join(c.preprocess.clip_features) << "\n\n";
  o << "[split]\ntrain_end = " << c.train_end << "\nval_len = " << c.val_len << "\ntest_len = " << c.test_len
    << "\n\n";
  o << "[model]\nkind = " << c.model_kind << "\nridge = " << format_double(c.ridge) << "\nhidden = " << c.mlp.hidden
    << "\nlearning_rate = " << format_double(c.mlp.learning_rate) << "\nepochs = " << c.mlp.epochs
    << "\nbatch_size = " << c.mlp.batch_size << "\nendpoint = " << c.endpoint << "\npath = " << c.model_path.string()
    << "\n\n";
  o << "[interpret]\nmethods = " << join(methods) << "\nsplit = " << c.explain_split
    << "\nmax_instances = " << c.max_instances
    << "\ngranularity = " << (c.granularity == Granularity::cell ? "cell" : "feature")
    << "\nablation_baseline = " << c.ablation_baseline << "\nmorris_trajectories = " << c.morris_trajectories
    << "\nmorris_levels = " << c.morris_levels
    << "\nmorris_start = " << (c.morris_start == MorrisConfig::Start::instance ? "instance" : "grid")
    << "\nig_steps = " << c.ig_steps << "\nig_rule = " << to_string(c.ig_rule) << "\ngs_samples = " << c.gs_samples
    << "\ngs_noise = " << format_double(c.gs_noise) << "\npermutation_batch = " << c.permutation_batch
    << "\nfd_eps = " << format_double(c.fd_eps) << "\n\n";
  o << "[evaluate]\nk_bins = " << join(bins) << "\nmask_baseline = " << c.mask_baseline << "\n\n";
  o << "[run]\nseed = " << c.seed << "\nworkers = " << c.workers << "\noutput = " << c.output.string() << "\n";
  return o.str();
}

}  // namespace tsinterp
