#pragma once

// Metrics, the seven-condition grid and the intra-modality ratio sweep.

#include "hrlf/msm.hpp"
#include "hrlf/network.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace hrlf::eval {

/// Binarise by sign (> 0 positive) and return F1 of the positive class.
/// No predicted and no actual positives gives 1.0; only one of them empty
/// gives 0.0.
double metric_f1_binary(std::span<const double> scores, std::span<const double> labels);
double metric_mae(std::span<const double> scores, std::span<const double> labels);
/// One-vs-rest F1 per class from argmax predictions.
std::vector<double> metric_f1_per_class(const Matrix& logits, std::span<const std::int32_t> labels, int num_classes);

enum class Metric {
  f1_binary,  // sign of the score (regression) or logit margin of class 1 (K = 2)
  f1_macro,   // mean per-class F1
  mae,        // regression only
};

std::string_view metric_name(Metric metric);
Metric parse_metric(std::string_view name);
/// Binary F1 for regression and two classes, macro F1 otherwise.
Metric default_metric(data::TaskKind task, int num_classes);
[[nodiscard]] bool higher_is_better(Metric metric);

/// Scores `logits` against the samples' labels.
double score(Metric metric, const Matrix& logits, std::span<const data::MultimodalSample> samples);

/// Maps samples to logits, one row per sample.
using Predictor = std::function<Matrix(std::span<const data::MultimodalSample>)>;

Predictor network_predictor(const Network& network);

struct ConditionReport {
  Metric metric = Metric::f1_binary;
  /// In kTestingConditions order.
  std::array<double, 7> values{};
  /// Mean of the six missing-modality conditions.
  double average = 0.0;

  [[nodiscard]] double at(msm::TestingCondition c) const;
  [[nodiscard]] double complete() const { return at(msm::TestingCondition::lav); }
};

inline constexpr std::size_t kSweepPoints = 11;
inline constexpr std::size_t kSweepDraws = 3;

/// p = i / 10 for i = 0..10.
std::array<double, kSweepPoints> sweep_ratios();

struct SweepReport {
  Metric metric = Metric::f1_binary;
  std::vector<msm::TestingCondition> conditions;
  std::array<double, kSweepPoints> ratios = sweep_ratios();
  std::array<double, kSweepPoints> values{};
  std::uint64_t seed = 0;
};

ConditionReport run_condition_grid(const Predictor& predict, std::span<const data::MultimodalSample> samples,
                                   Metric metric);

/// For each p, masks a fraction p of frames in every retained modality of
/// each listed condition and averages over kSweepDraws mask draws and the
/// conditions. Draw seeds derive from `seed`, p and the condition.
SweepReport run_ratio_sweep(const Predictor& predict, std::span<const data::MultimodalSample> samples,
                            Metric metric, std::span<const msm::TestingCondition> conditions,
                            std::uint64_t seed);

}  // namespace hrlf::eval
