#include "hrlf/msm.hpp"

#include "hrlf/errors.hpp"

#include <bit>
#include <cmath>

namespace hrlf::msm {

std::size_t ModalitySet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::string_view condition_name(TestingCondition c) {
  switch (c) {
    case TestingCondition::l: return "l";
    case TestingCondition::a: return "a";
    case TestingCondition::v: return "v";
    case TestingCondition::la: return "la";
    case TestingCondition::lv: return "lv";
    case TestingCondition::av: return "av";
    case TestingCondition::lav: return "lav";
  }
  return "?";
}

TestingCondition parse_condition(std::string_view name) {
  for (auto c : kTestingConditions) {
    if (condition_name(c) == name) return c;
  }
  throw ConfigError("unknown testing condition: '" + std::string(name) + "'");
}

ModalitySet retained_modalities(TestingCondition c) {
  ModalitySet set;
  for (char ch : condition_name(c)) {
    switch (ch) {
      case 'l': set.insert(Modality::language); break;
      case 'a': set.insert(Modality::audio); break;
      case 'v': set.insert(Modality::visual); break;
      default: break;
    }
  }
  return set;
}

bool is_complete(TestingCondition c) { return c == TestingCondition::lav; }

MissingSpec MissingSpec::uniform(double ratio, ModalitySet retained, std::uint64_t seed) {
  MissingSpec spec;
  spec.intra_ratio.fill(ratio);
  spec.retained = retained;
  spec.seed = seed;
  return spec;
}

void MissingSpec::validate() const {
  for (double p : intra_ratio) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("intra-modality ratio must lie in [0, 1]");
  }
  if (retained.empty()) throw ConfigError("missing spec retains no modality");
}

std::size_t dropped_frame_count(double ratio, std::size_t seq_len) {
  return static_cast<std::size_t>(std::round(ratio * static_cast<double>(seq_len)));
}

MaskedSample apply_msm(const MultimodalSample& sample, const MissingSpec& spec) {
  spec.validate();
  MaskedSample out{sample, {}};
  for (auto m : data::kModalities) {
    const auto mi = data::index_of(m);
    auto& x = out.sample.features[mi];
    const auto seq_len = static_cast<std::size_t>(x.rows());
    auto& mask = out.frame_mask[mi];
    if (!spec.retained.contains(m)) {
      x.setZero();
      mask.assign(seq_len, false);
      continue;
    }
    mask.assign(seq_len, true);
    const std::size_t drop = dropped_frame_count(spec.intra_ratio[mi], seq_len);
    if (drop == 0) continue;
    Rng rng(derive_seed(spec.seed, mi));
    for (std::size_t frame : rng.sample_without_replacement(seq_len, drop)) {
      x.row(static_cast<Eigen::Index>(frame)).setZero();
      mask[frame] = false;
    }
  }
  return out;
}

MultimodalSample condition_mask(const MultimodalSample& sample, TestingCondition condition) {
  MultimodalSample out = sample;
  const auto keep = retained_modalities(condition);
  for (auto m : data::kModalities) {
    if (!keep.contains(m)) out[m].setZero();
  }
  return out;
}

void MsmPolicy::validate() const {
  if (ratios.empty()) throw ConfigError("MSM policy needs at least one ratio");
  for (double p : ratios) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("MSM ratio must lie in [0, 1]");
  }
  if (conditions.empty()) throw ConfigError("MSM policy needs at least one retained subset");
}

MissingSpec MsmPolicy::sample(Rng& rng) const {
  const double ratio = ratios[rng.index(ratios.size())];
  const auto condition = conditions[rng.index(conditions.size())];
  return MissingSpec::uniform(ratio, retained_modalities(condition), rng.next_u64());
}

}  // namespace hrlf::msm
