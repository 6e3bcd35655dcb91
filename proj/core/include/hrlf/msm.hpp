#pragma once

// Modality Stochastic Missing: frame-level drops within a modality plus
// whole-modality removal, and the seven fixed testing conditions.

#include "hrlf/data.hpp"
#include "hrlf/rng.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hrlf::msm {

using data::Modality;
using data::MultimodalSample;

/// Subset of {language, audio, visual}.
class ModalitySet {
 public:
  constexpr ModalitySet() = default;
  constexpr explicit ModalitySet(std::uint8_t bits) : bits_(bits & 0x7U) {}
  static constexpr ModalitySet all() { return ModalitySet(0x7U); }
  static constexpr ModalitySet none() { return ModalitySet(0U); }

  [[nodiscard]] constexpr bool contains(Modality m) const {
    return (bits_ >> data::index_of(m)) & 1U;
  }
  constexpr ModalitySet& insert(Modality m) {
    bits_ = static_cast<std::uint8_t>(bits_ | (1U << data::index_of(m)));
    return *this;
  }
  [[nodiscard]] constexpr bool empty() const { return bits_ == 0; }
  [[nodiscard]] constexpr std::uint8_t bits() const { return bits_; }
  [[nodiscard]] std::size_t size() const;
  constexpr bool operator==(const ModalitySet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

/// The seven availability subsets, in report column order.
enum class TestingCondition : std::uint8_t { l, a, v, la, lv, av, lav };

inline constexpr std::array<TestingCondition, 7> kTestingConditions{
    TestingCondition::l,  TestingCondition::a,  TestingCondition::v,  TestingCondition::la,
    TestingCondition::lv, TestingCondition::av, TestingCondition::lav};

/// "l", "a", "v", "la", "lv", "av", "lav".
std::string_view condition_name(TestingCondition c);
TestingCondition parse_condition(std::string_view name);
ModalitySet retained_modalities(TestingCondition c);
[[nodiscard]] bool is_complete(TestingCondition c);

struct MissingSpec {
  /// Fraction of frames zeroed within each retained modality.
  std::array<double, data::kNumModalities> intra_ratio{};
  ModalitySet retained = ModalitySet::all();
  std::uint64_t seed = 0;

  /// Same ratio for every modality.
  static MissingSpec uniform(double ratio, ModalitySet retained, std::uint64_t seed);
  /// Throws ConfigError on ratios outside [0, 1] or an empty retained set.
  void validate() const;
};

struct MaskedSample {
  MultimodalSample sample;
  /// true = frame kept, per modality per frame.
  std::array<std::vector<bool>, data::kNumModalities> frame_mask;
};

/// round(p * T), halves away from zero.
std::size_t dropped_frame_count(double ratio, std::size_t seq_len);

/// Zeroes round(p*T) uniformly chosen frames in each retained modality and
/// every frame of each dropped modality. Deterministic in (sample, spec).
MaskedSample apply_msm(const MultimodalSample& sample, const MissingSpec& spec);

/// Zeroes every modality outside the condition; the rest pass through.
MultimodalSample condition_mask(const MultimodalSample& sample, TestingCondition condition);

/// Training-time sampling of missingness: one ratio for all retained
/// modalities, drawn from `ratios`, and one availability subset.
struct MsmPolicy {
  std::vector<double> ratios{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  std::vector<TestingCondition> conditions{kTestingConditions.begin(), kTestingConditions.end()};

  void validate() const;
  [[nodiscard]] MissingSpec sample(Rng& rng) const;
};

}  // namespace hrlf::msm
