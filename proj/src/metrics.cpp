#include "tsinterp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "tsinterp/errors.hpp"

namespace tsinterp {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw ValidationError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw ValidationError(std::string(what) + ": empty input");
}

double dcg(std::span<const double> relevance, const std::vector<std::size_t>& order) {
  double total = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) total += relevance[order[i]] / std::log2(static_cast<double>(i) + 2.0);
  return total;
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double rmsle(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, "rmsle");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = std::log1p(std::max(pred[i], 0.0)) - std::log1p(std::max(truth[i], 0.0));
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double r2_score(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, "r2");
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) throw ValidationError("r2: true values have zero variance");
  return 1.0 - ss_res / ss_tot;
}

double ndcg(std::span<const double> relevance, std::span<const double> scores) {
  check_pair(relevance, scores, "ndcg");
  for (double r : relevance) {
    if (!(r >= 0.0)) throw ValidationError("ndcg: relevance values must be nonnegative");
  }
  const double ideal = dcg(relevance, descending_order(relevance));
  if (ideal == 0.0) throw ValidationError("ndcg: all true relevances are zero");
  return dcg(relevance, descending_order(scores)) / ideal;
}

}  // namespace tsinterp
