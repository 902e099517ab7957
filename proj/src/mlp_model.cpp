#include "tsinterp/mlp_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsinterp/errors.hpp"
#include "tsinterp/rng.hpp"

namespace tsinterp {

ReferenceMLP::ReferenceMLP(ModelShape shape, Parameters params)
    : shape_(shape), params_(std::move(params)) {
  const std::size_t D = shape_.cells();
  const std::size_t K = shape_.output_size();
  const std::size_t H = params_.hidden;
  if (H == 0 || params_.input_weights.size() != H * D || params_.input_bias.size() != H ||
      params_.output_weights.size() != K * H || params_.output_bias.size() != K) {
    throw ValidationError("MLP parameters do not match shape " + shape_.describe());
  }
}

ReferenceMLP ReferenceMLP::initialized(ModelShape shape, std::size_t hidden, std::uint64_t seed) {
  if (hidden == 0) throw ValidationError("MLP hidden width must be at least 1");
  const std::size_t D = shape.cells();
  const std::size_t K = shape.output_size();
  Rng rng(seed);
  Parameters p;
  p.hidden = hidden;
  const double lim1 = std::sqrt(6.0 / static_cast<double>(D + hidden));
  const double lim2 = std::sqrt(6.0 / static_cast<double>(hidden + K));
  std::uniform_real_distribution<double> u1(-lim1, lim1), u2(-lim2, lim2);
  p.input_weights.resize(hidden * D);
  for (auto& v : p.input_weights) v = u1(rng);
  p.input_bias.assign(hidden, 0.0);
  p.output_weights.resize(K * hidden);
  for (auto& v : p.output_weights) v = u2(rng);
  p.output_bias.assign(K, 0.0);
  return ReferenceMLP(shape, std::move(p));
}

std::vector<double> ReferenceMLP::hidden_activations(const ModelInput& input) const {
  const std::size_t D = shape_.cells();
  const auto x = input.past.flat();
  std::vector<double> h(params_.hidden);
  for (std::size_t i = 0; i < params_.hidden; ++i) {
    const double* u = params_.input_weights.data() + i * D;
    double z = params_.input_bias[i];
    for (std::size_t d = 0; d < D; ++d) z += u[d] * x[d];
    h[i] = std::tanh(z);
  }
  return h;
}

std::vector<Grid> ReferenceMLP::predict(std::span<const ModelInput> batch) const {
  std::vector<Grid> out;
  out.reserve(batch.size());
  const std::size_t H = params_.hidden;
  for (const auto& in : batch) {
    check_input_shape(shape_, in);
    const auto h = hidden_activations(in);
    Grid y(shape_.outputs, shape_.horizon);
    for (std::size_t k = 0; k < shape_.output_size(); ++k) {
      const double* v = params_.output_weights.data() + k * H;
      double acc = params_.output_bias[k];
      for (std::size_t i = 0; i < H; ++i) acc += v[i] * h[i];
      y[k] = acc;
    }
    out.push_back(std::move(y));
  }
  return out;
}

Grid ReferenceMLP::gradient(const ModelInput& input, OutputIndex index) const {
  check_input_shape(shape_, input);
  check_output_index(shape_, index);
  const std::size_t D = shape_.cells();
  const std::size_t H = params_.hidden;
  const std::size_t k = index.output * shape_.horizon + index.step;
  const auto h = hidden_activations(input);
  Grid g(shape_.features, shape_.lookback);
  for (std::size_t i = 0; i < H; ++i) {
    const double coef = params_.output_weights[k * H + i] * (1.0 - h[i] * h[i]);
    const double* u = params_.input_weights.data() + i * D;
    for (std::size_t d = 0; d < D; ++d) g[d] += coef * u[d];
  }
  return g;
}

std::vector<Grid> ReferenceMLP::jacobian(const ModelInput& input) const {
  check_input_shape(shape_, input);
  const std::size_t D = shape_.cells();
  const std::size_t H = params_.hidden;
  const auto h = hidden_activations(input);
  std::vector<Grid> jac(shape_.output_size(), Grid(shape_.features, shape_.lookback));
  for (std::size_t k = 0; k < shape_.output_size(); ++k) {
    Grid& g = jac[k];
    for (std::size_t i = 0; i < H; ++i) {
      const double coef = params_.output_weights[k * H + i] * (1.0 - h[i] * h[i]);
      const double* u = params_.input_weights.data() + i * D;
      for (std::size_t d = 0; d < D; ++d) g[d] += coef * u[d];
    }
  }
  return jac;
}

double mean_squared_error(const ForecastOracle& oracle, std::span<const WindowedInstance> data) {
  if (data.empty()) throw ValidationError("mean squared error over an empty set");
  std::vector<ModelInput> inputs;
  inputs.reserve(data.size());
  for (const auto& d : data) inputs.push_back(d.input);
  const auto pred = predict_chunked(oracle, inputs);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < pred[i].size(); ++k) {
      const double r = pred[i][k] - data[i].targets[k];
      sum += r * r;
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

namespace {

struct Adam {
  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  void step(std::vector<double>& params, const std::vector<double>& grad, double lr, long t) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
  std::vector<double> m, v;
};

}  // namespace

MlpFit fit_mlp(std::span<const WindowedInstance> train, const MlpHyperparams& hp, std::uint64_t seed) {
  if (train.empty()) throw ValidationError("fit_mlp needs at least one instance");
  if (hp.hidden == 0 || hp.epochs == 0 || hp.batch_size == 0 || !(hp.learning_rate > 0.0)) {
    throw ValidationError("MLP hyperparameters need hidden, epochs, batch_size >= 1 and learning_rate > 0");
  }
  const auto& first = train.front();
  const ModelShape shape{first.input.past.rows(), first.input.past.cols(), first.targets.cols(),
                         first.targets.rows(), first.input.known_future.rows()};
  const std::size_t D = shape.cells();
  const std::size_t K = shape.output_size();
  const std::size_t H = hp.hidden;
  for (const auto& inst : train) {
    if (inst.input.past.rows() != shape.features || inst.input.past.cols() != shape.lookback ||
        inst.targets.rows() != shape.outputs || inst.targets.cols() != shape.horizon) {
      throw ValidationError("training instances do not share one window shape");
    }
  }

  auto p = ReferenceMLP::initialized(shape, H, derive_seed(seed, "mlp-init")).parameters();
  std::vector<double> gU(p.input_weights.size()), ga(H), gV(p.output_weights.size()), gc(K);
  Adam aU(gU.size()), aa(H), aV(gV.size()), ac(K);
  Rng shuffle_rng(derive_seed(seed, "mlp-shuffle"));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> h(H), dh(H), y(K), dy(K);
  std::vector<double> history;
  long step = 0;

  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      const double scale = 2.0 / static_cast<double>(K * (end - start));
      std::fill(gU.begin(), gU.end(), 0.0);
      std::fill(ga.begin(), ga.end(), 0.0);
      std::fill(gV.begin(), gV.end(), 0.0);
      std::fill(gc.begin(), gc.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto& inst = train[order[b]];
        const auto x = inst.input.past.flat();
        for (std::size_t i = 0; i < H; ++i) {
          double z = p.input_bias[i];
          const double* u = p.input_weights.data() + i * D;
          for (std::size_t d = 0; d < D; ++d) z += u[d] * x[d];
          h[i] = std::tanh(z);
        }
        for (std::size_t k = 0; k < K; ++k) {
          double acc = p.output_bias[k];
          const double* v = p.output_weights.data() + k * H;
          for (std::size_t i = 0; i < H; ++i) acc += v[i] * h[i];
          dy[k] = scale * (acc - inst.targets[k]);
        }
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t k = 0; k < K; ++k) {
          gc[k] += dy[k];
          double* gv = gV.data() + k * H;
          const double* v = p.output_weights.data() + k * H;
          for (std::size_t i = 0; i < H; ++i) {
            gv[i] += dy[k] * h[i];
            dh[i] += dy[k] * v[i];
          }
        }
        for (std::size_t i = 0; i < H; ++i) {
          const double dz = dh[i] * (1.0 - h[i] * h[i]);
          ga[i] += dz;
          double* gu = gU.data() + i * D;
          for (std::size_t d = 0; d < D; ++d) gu[d] += dz * x[d];
        }
      }
      ++step;
      aU.step(p.input_weights, gU, hp.learning_rate, step);
      aa.step(p.input_bias, ga, hp.learning_rate, step);
      aV.step(p.output_weights, gV, hp.learning_rate, step);
      ac.step(p.output_bias, gc, hp.learning_rate, step);
    }
    const double loss = mean_squared_error(ReferenceMLP(shape, p), train);
    if (!std::isfinite(loss)) {
      throw NumericError("MLP training diverged at epoch " + std::to_string(epoch));
    }
    history.push_back(loss);
  }
  const double final_loss = history.back();
  return {ReferenceMLP(shape, std::move(p)), final_loss, std::move(history)};
}

}  // namespace tsinterp
