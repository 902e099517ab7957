#pragma once

#include <span>

namespace tsinterp {

/// Regression metrics over all elements of two equally sized sequences.
/// Shape mismatches and empty inputs throw ValidationError.
double mae(std::span<const double> pred, std::span<const double> truth);
double rmse(std::span<const double> pred, std::span<const double> truth);
/// Negative values are clamped to zero before taking log(1 + x).
double rmsle(std::span<const double> pred, std::span<const double> truth);
/// 1 - SS_res / SS_tot; throws when `truth` has zero variance.
double r2_score(std::span<const double> pred, std::span<const double> truth);

/// Normalized discounted cumulative gain of the order induced by `scores`
/// (descending, ties by index) against nonnegative `relevance`. The gain of
/// the item at rank i (0-based) is its relevance, discounted by 1/log2(i + 2).
double ndcg(std::span<const double> relevance, std::span<const double> scores);

}  // namespace tsinterp
