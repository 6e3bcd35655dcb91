#pragma once

// Fine-grained representation factorization: each modality summary Z is
// split into a sentiment-relevant part Q and a modality-specific part U.
// A shared decoder translates (Q_a, U_b) back into modality b's domain; the
// translation and sentiment-reconstruction losses drive the split.

#include "hrlf/autograd.hpp"
#include "hrlf/data.hpp"
#include "hrlf/nn.hpp"

#include <array>

namespace hrlf::frf {

using ag::Index;
using ag::Var;
using data::kNumModalities;
using data::Modality;

using ModalityVars = std::array<Var, kNumModalities>;

struct FrfOptions {
  /// Squared Euclidean distance. With the plain norm the pull toward zero
  /// keeps a constant magnitude and training tends to collapse Q to 0.
  bool squared_norm = true;
  /// Treat the targets Z_b and Q_a as constants so the losses cannot be
  /// lowered by shrinking the representations they compare against.
  bool detach_targets = true;
};

struct FactorizedPair {
  Var sentiment;  // Q
  Var specific;   // U
};

class FrfParams {
 public:
  FrfParams() = default;
  /// Sentiment/modality encoders are d->d->d with ReLU after each layer;
  /// the decoder is 2d->2d->d with a linear output.
  FrfParams(Index dim, Rng& rng);

  void collect(nn::ParamList& out, std::string_view prefix) const;
  [[nodiscard]] Index dim() const { return dim_; }

  std::array<nn::Mlp, kNumModalities> sentiment_encoders;
  std::array<nn::Mlp, kNumModalities> modality_encoders;
  nn::Mlp decoder;

 private:
  Index dim_ = 0;
};

FactorizedPair factorize(const Var& z, Modality m, const FrfParams& params);

/// Decodes (Q_alpha || U_beta) into modality beta's representation domain.
Var translate(const Var& q_alpha, const Var& u_beta, const FrfParams& params);

struct TranslationLoss {
  Var self;   // mean over the n alpha==beta pairs
  Var cross;  // mean over the n^2-n ordered alpha!=beta pairs
  Var total;
};

struct FrfLoss {
  Var self;
  Var cross;
  Var translation;
  Var reconstruction;
  Var total;
};

TranslationLoss loss_trans(const ModalityVars& z, const FrfParams& params, FrfOptions options = {});

/// Mean over all n^2 ordered (beta, alpha) pairs of
/// || E^S_alpha(D(Q_beta, U_alpha)) - Q_alpha ||.
Var loss_recon(const ModalityVars& z, const FrfParams& params, FrfOptions options = {});

/// translation + reconstruction, sharing one factorization pass.
FrfLoss loss_frf(const ModalityVars& z, const FrfParams& params, FrfOptions options = {});

/// Batch mean of per-row distances between a and b.
Var mean_distance(const Var& a, const Var& b, FrfOptions options);

}  // namespace hrlf::frf
