#pragma once

// Per-modality encoder: same-padded temporal convolution plus sinusoidal
// positional embedding, then a pre-norm transformer encoder whose final
// frame is the modality summary.
//
// Batched sequences are (batch*seq) x channels with each sample's frames
// contiguous.

#include "hrlf/autograd.hpp"
#include "hrlf/nn.hpp"

#include <vector>

namespace hrlf::encoder {

using ag::Index;
using ag::Matrix;
using ag::Scalar;
using ag::Var;

struct EncoderConfig {
  Index embed_dim = 8;
  Index kernel_size = 3;
  Index layers = 2;
  Index heads = 2;
  Index ff_dim = 16;
  Scalar dropout = 0.1;

  void validate() const;
};

/// Sinusoidal table: even columns sin(pos / 10000^(2i/d)), odd columns cos.
Matrix positional_embedding(Index seq_len, Index dim);

struct EncoderOutput {
  Var embedded;  // R: (batch*seq) x d
  Var summary;   // Z: batch x d
};

class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(const EncoderConfig& config, Rng& rng);

  /// `dropout_rng` null means eval mode.
  [[nodiscard]] Var operator()(const Var& x, Index batch, Index seq, Rng* dropout_rng) const;
  void collect(nn::ParamList& out, std::string_view prefix) const;

  nn::Linear query, key, value, output, ff_in, ff_out;
  nn::LayerNorm attn_norm, ff_norm;

 private:
  Index heads_ = 1;
  Scalar dropout_ = 0.0;
};

class ModalityEncoder {
 public:
  ModalityEncoder() = default;
  ModalityEncoder(Index input_dim, const EncoderConfig& config, Rng& rng);

  /// R = Conv1D_k(x) + PE(T, d).
  [[nodiscard]] Var embed(const Var& x, Index batch, Index seq) const;
  /// Z = last frame of the transformer output over R.
  [[nodiscard]] Var encode(const Var& embedded, Index batch, Index seq, Rng* dropout_rng) const;
  [[nodiscard]] EncoderOutput operator()(const Var& x, Index batch, Index seq, Rng* dropout_rng) const;

  void collect(nn::ParamList& out, std::string_view prefix) const;

  [[nodiscard]] Index input_dim() const { return input_dim_; }
  [[nodiscard]] const EncoderConfig& config() const { return config_; }

  nn::Linear conv;  // (kernel*input_dim) -> embed_dim
  std::vector<TransformerLayer> layers;
  nn::LayerNorm final_norm;

 private:
  Index input_dim_ = 0;
  EncoderConfig config_;
};

}  // namespace hrlf::encoder
