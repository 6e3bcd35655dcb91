#pragma once

// A full teacher or student network: three modality encoders, the FRF
// factorisers, fusion/refinement, and the task head. Teacher and student
// share this structure but never parameters.

#include "hrlf/data.hpp"
#include "hrlf/encoder.hpp"
#include "hrlf/frf.hpp"
#include "hrlf/fusion.hpp"
#include "hrlf/nn.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace hrlf {

using ag::Index;
using ag::Matrix;
using ag::Var;

struct ModelConfig {
  std::array<Index, data::kNumModalities> input_dims{16, 12, 8};
  encoder::EncoderConfig encoder;
  data::TaskKind task = data::TaskKind::classification;
  /// K logits for classification, 1 for regression.
  Index num_outputs = 2;
  fusion::ScaleCombine combine = fusion::ScaleCombine::mean;
  /// Hidden width of the statistics networks; 0 means 4 * embed_dim.
  Index stats_hidden = 0;

  void validate() const;
  [[nodiscard]] Index dim() const { return encoder.embed_dim; }
  [[nodiscard]] Index statistics_width() const { return stats_hidden > 0 ? stats_hidden : 4 * dim(); }

  static ModelConfig for_dataset(const data::DatasetManifest& manifest,
                                 const encoder::EncoderConfig& encoder = {});
};

enum class Role { teacher, student };
std::string_view role_name(Role role);

/// Stacked inputs for one mini-batch.
struct Batch {
  std::array<Matrix, data::kNumModalities> inputs;  // (batch*T_m) x d_m
  std::array<Index, data::kNumModalities> seq_len{};
  Index size = 0;
  std::vector<data::Label> labels;
};

Batch make_batch(std::span<const data::MultimodalSample> samples);
Batch make_batch(std::span<const data::MultimodalSample* const> samples);

struct NetworkOutput {
  std::array<encoder::EncoderOutput, data::kNumModalities> encoded;
  std::array<frf::FactorizedPair, data::kNumModalities> factors;
  fusion::ScaleStack stack;
  Var logits;

  [[nodiscard]] frf::ModalityVars summaries() const;
};

class Network {
 public:
  Network() = default;
  Network(const ModelConfig& config, Role role, std::uint64_t seed);

  /// `dropout_rng` null means eval mode.
  [[nodiscard]] NetworkOutput forward(const Batch& batch, Rng* dropout_rng) const;

  [[nodiscard]] nn::ParamList parameters() const;
  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] Role role() const { return role_; }

  /// Copies every parameter value from `other` (structures must match).
  void copy_values_from(const Network& other);
  /// Deep copy with fresh parameter storage.
  [[nodiscard]] Network clone() const;

  std::array<encoder::ModalityEncoder, data::kNumModalities> encoders;
  frf::FrfParams frf;
  fusion::FusionParams fusion;
  nn::Linear head;

 private:
  ModelConfig config_;
  Role role_ = Role::teacher;
};

/// Same parameter names and shapes.
[[nodiscard]] bool same_structure(const Network& a, const Network& b);
/// No parameter storage shared between the two.
[[nodiscard]] bool parameter_disjoint(const Network& a, const Network& b);

/// Linear task head over H-tilde.
Var classify(const Var& refined, const nn::Linear& head);

/// Mean cross-entropy (classification) or mean squared error (regression).
Var loss_task(const Var& logits, std::span<const data::Label> labels, data::TaskKind task);

/// Classification: batch-mean KL(softmax(t/T) || softmax(s/T)).
/// Regression: mean squared difference. Teacher logits are detached.
Var loss_kl(const Var& teacher_logits, const Var& student_logits, data::TaskKind task,
            double temperature = 1.0);

}  // namespace hrlf
