#include "tsinterp/groundtruth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include "tsinterp/csv.hpp"
#include "tsinterp/errors.hpp"
#include "tsinterp/metrics.hpp"

namespace tsinterp {

void GroupTruth::validate() const {
  if (periods.empty() || groups.empty()) throw ValidationError("group truth is empty");
  if (counts.rows() != periods.size() || counts.cols() != groups.size()) {
    throw ValidationError("group truth counts do not match its periods and groups");
  }
  for (std::size_t p = 1; p < periods.size(); ++p) {
    if (periods[p] <= periods[p - 1]) throw ValidationError("group truth periods must be increasing");
  }
  for (double c : counts.flat()) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("group truth counts must be finite and nonnegative");
  }
}

Grid GroupTruth::shares() const {
  std::vector<std::string> labels;
  for (auto p : periods) labels.push_back(format_time(p, false));
  return normalize_shares(counts, labels);
}

std::optional<std::size_t> GroupTruth::period_index(TimePoint start) const {
  auto it = std::lower_bound(periods.begin(), periods.end(), start);
  if (it == periods.end() || *it != start) return std::nullopt;
  return static_cast<std::size_t>(it - periods.begin());
}

GroupTruth read_group_truth(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  const auto c_week = reader.require_column("week_start_date");
  const auto c_group = reader.require_column("group");
  const auto c_cases = reader.require_column("cases");

  std::map<TimePoint, std::map<std::string, double>> rows;
  std::vector<std::string> groups;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const auto where = source + ":" + std::to_string(reader.line_number());
    TimePoint week;
    if (!parse_time(trim(fields[c_week]), week)) {
      throw ValidationError(where + ": cannot parse week_start_date '" + fields[c_week] + "'");
    }
    const std::string group = trim(fields[c_group]);
    double cases = 0.0;
    if (!parse_double(fields[c_cases], cases) || cases < 0.0) {
      throw ValidationError(where + ": cases must be a nonnegative number, got '" + fields[c_cases] + "'");
    }
    if (std::find(groups.begin(), groups.end(), group) == groups.end()) groups.push_back(group);
    if (!rows[week].emplace(group, cases).second) {
      throw ValidationError(where + ": duplicate row for week " + format_time(week, false) + " group " + group);
    }
  }
  GroupTruth truth;
  truth.groups = groups;
  truth.counts = Grid(rows.size(), groups.size());
  std::size_t p = 0;
  for (const auto& [week, by_group] : rows) {
    truth.periods.push_back(week);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      auto it = by_group.find(groups[g]);
      if (it == by_group.end()) {
        throw ValidationError(source + ": week " + format_time(week, false) + " has no row for group " + groups[g]);
      }
      truth.counts(p, g) = it->second;
    }
    ++p;
  }
  truth.validate();
  return truth;
}

GroupTruth load_group_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open ground-truth file " + path.string());
  return read_group_truth(in, path.string());
}

void write_group_truth(std::ostream& out, const GroupTruth& truth) {
  out << "week_start_date,group,cases\n";
  for (std::size_t p = 0; p < truth.periods.size(); ++p) {
    for (std::size_t g = 0; g < truth.groups.size(); ++g) {
      out << format_time(truth.periods[p], false) << ',' << csv_escape(truth.groups[g]) << ','
          << format_double(truth.counts(p, g)) << '\n';
    }
  }
}

Grid normalize_shares(const Grid& scores, std::span<const std::string> row_labels) {
  Grid out(scores.rows(), scores.cols());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    double norm = 0.0;
    for (std::size_t c = 0; c < scores.cols(); ++c) norm += std::abs(scores(r, c));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      const std::string label = r < row_labels.size() ? row_labels[r] : "row " + std::to_string(r);
      throw ValidationError("cannot normalize shares: " + label + " has no positive mass");
    }
    for (std::size_t c = 0; c < scores.cols(); ++c) out(r, c) = std::abs(scores(r, c)) / norm;
  }
  return out;
}

std::vector<double> normalize_shares(std::span<const double> scores) {
  Grid row(1, scores.size());
  std::copy(scores.begin(), scores.end(), row.flat().begin());
  const Grid n = normalize_shares(row);
  return std::vector<double>(n.flat().begin(), n.flat().end());
}

std::vector<std::size_t> group_rows(std::span<const std::string> feature_names,
                                    std::span<const std::string> groups) {
  if (groups.empty()) throw ValidationError("no group features configured");
  std::vector<std::size_t> rows;
  for (const auto& g : groups) {
    auto it = std::find(feature_names.begin(), feature_names.end(), g);
    if (it == feature_names.end()) throw ValidationError("group feature '" + g + "' is not a model input feature");
    rows.push_back(static_cast<std::size_t>(it - feature_names.begin()));
  }
  return rows;
}

Grid aggregate_group_attribution(const AttributionTensor& phi, std::span<const std::size_t> rows) {
  const auto& s = phi.shape;
  Grid out(s.horizon, rows.size());
  for (std::size_t h = 0; h < s.horizon; ++h) {
    for (std::size_t g = 0; g < rows.size(); ++g) {
      if (rows[g] >= s.features) throw ValidationError("group row outside the attribution tensor");
      double total = 0.0;
      for (std::size_t l = 0; l < s.lookback; ++l) total += std::abs(phi.at(0, h, rows[g], l));
      out(h, g) = total;
    }
  }
  return out;
}

PeriodCalendar::PeriodCalendar(std::vector<TimePoint> starts, std::chrono::seconds length)
    : starts_(std::move(starts)), length_(length) {
  if (starts_.empty()) throw ValidationError("period calendar is empty");
  if (length_.count() <= 0) throw ValidationError("period length must be positive");
  if (!std::is_sorted(starts_.begin(), starts_.end())) throw ValidationError("period starts must be increasing");
}

std::optional<std::size_t> PeriodCalendar::find(TimePoint t) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), t);
  if (it == starts_.begin()) return std::nullopt;
  --it;
  if (t >= *it + length_) return std::nullopt;
  return static_cast<std::size_t>(it - starts_.begin());
}

PeriodScores rollup_to_periods(std::span<const GroupScoreRecord> records, std::int64_t step_seconds,
                               const PeriodCalendar& calendar) {
  if (records.empty()) throw ValidationError("no attribution records to roll up");
  if (step_seconds <= 0) throw ValidationError("time step must be positive");
  const std::size_t groups = records.front().scores.cols();
  std::map<std::size_t, std::vector<double>> sums;
  for (const auto& rec : records) {
    if (rec.scores.cols() != groups) throw ValidationError("group score records disagree on the group count");
    for (std::size_t h = 0; h < rec.scores.rows(); ++h) {
      const TimePoint day = rec.anchor_time + std::chrono::seconds(step_seconds * static_cast<std::int64_t>(h + 1));
      const auto p = calendar.find(day);
      if (!p) throw ValidationError("prediction date " + format_time(day, !is_midnight(day)) +
                                    " lies outside the ground-truth periods");
      auto& row = sums.try_emplace(*p, groups, 0.0).first->second;
      for (std::size_t g = 0; g < groups; ++g) row[g] += rec.scores(h, g);
    }
  }
  PeriodScores out;
  out.sums = Grid(sums.size(), groups);
  std::size_t r = 0;
  for (const auto& [p, row] : sums) {
    out.periods.push_back(calendar.starts()[p]);
    for (std::size_t g = 0; g < groups; ++g) out.sums(r, g) = row[g];
    ++r;
  }
  return out;
}

SensitivityComparison compare_to_truth(const std::string& method, const PeriodScores& predicted,
                                       const GroupTruth& truth) {
  truth.validate();
  if (predicted.sums.cols() != truth.groups.size()) {
    throw ValidationError("predicted scores have " + std::to_string(predicted.sums.cols()) +
                          " groups but the ground truth has " + std::to_string(truth.groups.size()));
  }
  if (predicted.periods.empty()) throw ValidationError("no predicted periods to compare");
  std::vector<std::string> labels;
  for (auto p : predicted.periods) labels.push_back(format_time(p, false));
  const Grid truth_shares = truth.shares();

  SensitivityComparison cmp;
  cmp.method = method;
  cmp.periods = predicted.periods;
  cmp.groups = truth.groups;
  cmp.predicted = predicted.shares(labels);
  cmp.truth = Grid(predicted.periods.size(), truth.groups.size());
  for (std::size_t r = 0; r < predicted.periods.size(); ++r) {
    const auto p = truth.period_index(predicted.periods[r]);
    if (!p) throw ValidationError("ground truth has no period starting " + labels[r]);
    for (std::size_t g = 0; g < truth.groups.size(); ++g) cmp.truth(r, g) = truth_shares(*p, g);
    cmp.ndcg_per_period.push_back(ndcg(cmp.truth.row(r), cmp.predicted.row(r)));
  }
  cmp.mae = mae(cmp.predicted.flat(), cmp.truth.flat());
  cmp.rmse = rmse(cmp.predicted.flat(), cmp.truth.flat());
  cmp.ndcg = std::accumulate(cmp.ndcg_per_period.begin(), cmp.ndcg_per_period.end(), 0.0) /
             static_cast<double>(cmp.ndcg_per_period.size());
  return cmp;
}

void write_comparison_csv(std::ostream& out, std::span<const SensitivityComparison> comparisons) {
  out << "method,period,group,predicted_share,true_share\n";
  for (const auto& c : comparisons) {
    for (std::size_t r = 0; r < c.periods.size(); ++r) {
      for (std::size_t g = 0; g < c.groups.size(); ++g) {
        out << c.method << ',' << format_time(c.periods[r], false) << ',' << csv_escape(c.groups[g]) << ','
            << format_double(c.predicted(r, g)) << ',' << format_double(c.truth(r, g)) << '\n';
      }
    }
  }
}

void write_comparison_summary_csv(std::ostream& out, std::span<const SensitivityComparison> comparisons) {
  out << "method,MAE,RMSE,NDCG\n";
  for (const auto& c : comparisons) {
    out << c.method << ',' << format_double(c.mae) << ',' << format_double(c.rmse) << ',' << format_double(c.ndcg)
        << '\n';
  }
}

std::vector<double> feature_importance(std::span<const AttributionTensor> attributions) {
  if (attributions.empty()) throw ValidationError("no attributions to summarize");
  const auto shape = attributions.front().shape;
  std::vector<double> totals(shape.features, 0.0);
  for (const auto& phi : attributions) {
    if (!(phi.shape == shape)) throw ValidationError("attribution tensors disagree on shape");
    for (std::size_t o = 0; o < shape.outputs; ++o)
      for (std::size_t h = 0; h < shape.horizon; ++h)
        for (std::size_t j = 0; j < shape.features; ++j)
          for (std::size_t l = 0; l < shape.lookback; ++l) totals[j] += std::abs(phi.at(o, h, j, l));
  }
  const double sum = std::accumulate(totals.begin(), totals.end(), 0.0);
  if (!(sum > 0.0)) return std::vector<double>(shape.features, 0.0);
  for (double& v : totals) v = 100.0 * v / sum;
  return totals;
}

std::vector<std::size_t> descending_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<std::size_t> ranks(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) ranks[order[i]] = i + 1;
  return ranks;
}

}  // namespace tsinterp
