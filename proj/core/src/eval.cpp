#include "hrlf/eval.hpp"

#include "hrlf/errors.hpp"
#include "hrlf/trainer.hpp"

#include <cmath>
#include <string>

namespace hrlf::eval {

namespace {

double f1_from_counts(std::size_t tp, std::size_t predicted, std::size_t actual) {
  if (predicted == 0 && actual == 0) return 1.0;
  if (predicted == 0 || actual == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(predicted + actual);
}

void require_pair(std::size_t a, std::size_t b) {
  if (a == 0) throw ConfigError("metric of an empty set");
  if (a != b) throw ShapeError("scores and labels differ in length");
}

}  // namespace

double metric_f1_binary(std::span<const double> scores, std::span<const double> labels) {
  require_pair(scores.size(), labels.size());
  std::size_t tp = 0;
  std::size_t predicted = 0;
  std::size_t actual = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool p = scores[i] > 0.0;
    const bool a = labels[i] > 0.0;
    predicted += p;
    actual += a;
    tp += p && a;
  }
  return f1_from_counts(tp, predicted, actual);
}

double metric_mae(std::span<const double> scores, std::span<const double> labels) {
  require_pair(scores.size(), labels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) total += std::abs(scores[i] - labels[i]);
  return total / static_cast<double>(scores.size());
}

std::vector<double> metric_f1_per_class(const Matrix& logits, std::span<const std::int32_t> labels,
                                        int num_classes) {
  if (num_classes < 2) throw ConfigError("per-class F1 needs at least two classes");
  require_pair(static_cast<std::size_t>(logits.rows()), labels.size());
  if (logits.cols() != num_classes) throw ShapeError("logit width does not match class count");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> tp(k, 0);
  std::vector<std::size_t> predicted(k, 0);
  std::vector<std::size_t> actual(k, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Index best = 0;
    logits.row(static_cast<Index>(i)).maxCoeff(&best);
    const auto label = labels[i];
    if (label < 0 || label >= num_classes) throw ShapeError("class label out of range");
    ++predicted[static_cast<std::size_t>(best)];
    ++actual[static_cast<std::size_t>(label)];
    if (best == label) ++tp[static_cast<std::size_t>(label)];
  }
  std::vector<double> f1(k);
  for (std::size_t c = 0; c < k; ++c) f1[c] = f1_from_counts(tp[c], predicted[c], actual[c]);
  return f1;
}

std::string_view metric_name(Metric metric) {
  switch (metric) {
    case Metric::f1_binary: return "f1";
    case Metric::f1_macro: return "f1_macro";
    case Metric::mae: return "mae";
  }
  return "f1";
}

Metric parse_metric(std::string_view name) {
  if (name == "f1") return Metric::f1_binary;
  if (name == "f1_macro") return Metric::f1_macro;
  if (name == "mae") return Metric::mae;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

Metric default_metric(data::TaskKind task, int num_classes) {
  if (task == data::TaskKind::regression || num_classes == 2) return Metric::f1_binary;
  return Metric::f1_macro;
}

bool higher_is_better(Metric metric) { return metric != Metric::mae; }

double score(Metric metric, const Matrix& logits, std::span<const data::MultimodalSample> samples) {
  if (static_cast<std::size_t>(logits.rows()) != samples.size()) {
    throw ShapeError("prediction count does not match sample count");
  }
  const bool regression = logits.cols() == 1;
  std::vector<double> scores(samples.size());
  std::vector<double> labels(samples.size());
  switch (metric) {
    case Metric::mae:
      if (!regression) throw ConfigError("mae requires a regression model");
      for (std::size_t i = 0; i < samples.size(); ++i) {
        scores[i] = logits(static_cast<Index>(i), 0);
        labels[i] = samples[i].label.score;
      }
      return metric_mae(scores, labels);
    case Metric::f1_binary:
      if (!regression && logits.cols() != 2) throw ConfigError("binary F1 needs one score or two logits");
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto r = static_cast<Index>(i);
        if (regression) {
          scores[i] = logits(r, 0);
          labels[i] = samples[i].label.score;
        } else {
          scores[i] = logits(r, 1) - logits(r, 0);
          labels[i] = samples[i].label.class_index == 1 ? 1.0 : -1.0;
        }
      }
      return metric_f1_binary(scores, labels);
    case Metric::f1_macro: {
      if (regression) throw ConfigError("macro F1 requires a classification model");
      std::vector<std::int32_t> classes(samples.size());
      for (std::size_t i = 0; i < samples.size(); ++i) classes[i] = samples[i].label.class_index;
      const auto per_class = metric_f1_per_class(logits, classes, static_cast<int>(logits.cols()));
      double total = 0.0;
      for (double f : per_class) total += f;
      return total / static_cast<double>(per_class.size());
    }
  }
  throw ConfigError("unknown metric");
}

Predictor network_predictor(const Network& network) {
  return [&network](std::span<const data::MultimodalSample> samples) { return train::predict(network, samples); };
}

double ConditionReport::at(msm::TestingCondition c) const { return values[static_cast<std::size_t>(c)]; }

std::array<double, kSweepPoints> sweep_ratios() {
  std::array<double, kSweepPoints> ratios{};
  for (std::size_t i = 0; i < kSweepPoints; ++i) ratios[i] = static_cast<double>(i) / 10.0;
  return ratios;
}

ConditionReport run_condition_grid(const Predictor& predict, std::span<const data::MultimodalSample> samples,
                                   Metric metric) {
  ConditionReport report;
  report.metric = metric;
  double missing_total = 0.0;
  std::vector<data::MultimodalSample> masked(samples.size());
  for (std::size_t c = 0; c < msm::kTestingConditions.size(); ++c) {
    const auto condition = msm::kTestingConditions[c];
    for (std::size_t i = 0; i < samples.size(); ++i) masked[i] = msm::condition_mask(samples[i], condition);
    report.values[c] = score(metric, predict(masked), masked);
    if (!msm::is_complete(condition)) missing_total += report.values[c];
  }
  report.average = missing_total / 6.0;
  return report;
}

SweepReport run_ratio_sweep(const Predictor& predict, std::span<const data::MultimodalSample> samples,
                            Metric metric, std::span<const msm::TestingCondition> conditions,
                            std::uint64_t seed) {
  if (conditions.empty()) throw ConfigError("ratio sweep needs at least one condition");
  SweepReport report;
  report.metric = metric;
  report.conditions.assign(conditions.begin(), conditions.end());
  report.seed = seed;
  std::vector<data::MultimodalSample> masked(samples.size());
  for (std::size_t pi = 0; pi < kSweepPoints; ++pi) {
    double total = 0.0;
    for (auto condition : conditions) {
      for (std::size_t draw = 0; draw < kSweepDraws; ++draw) {
        const std::uint64_t draw_seed =
            derive_seed(derive_seed(derive_seed(seed, pi), static_cast<std::uint64_t>(condition)), draw);
        const auto spec = msm::MissingSpec::uniform(report.ratios[pi], msm::retained_modalities(condition), draw_seed);
        for (std::size_t i = 0; i < samples.size(); ++i) {
          auto per_sample = spec;
          per_sample.seed = derive_seed(draw_seed, i);
          masked[i] = msm::apply_msm(samples[i], per_sample).sample;
        }
        total += score(metric, predict(masked), masked);
      }
    }
    report.values[pi] = total / static_cast<double>(conditions.size() * kSweepDraws);
  }
  return report;
}

}  // namespace hrlf::eval
