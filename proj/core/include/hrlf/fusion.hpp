#pragma once

// Joint representation and the refinement stack 3d -> 2d -> d -> 2d -> 3d
// whose taps, grouped by width, form the three scales used for alignment.

#include "hrlf/autograd.hpp"
#include "hrlf/frf.hpp"
#include "hrlf/nn.hpp"

#include <array>
#include <string_view>

namespace hrlf::fusion {

using ag::Index;
using ag::Var;
using frf::FactorizedPair;
using frf::ModalityVars;

/// How same-width taps are merged into one scale representation.
enum class ScaleCombine { mean, sum, first };

std::string_view combine_name(ScaleCombine c);
ScaleCombine parse_combine(std::string_view name);

inline constexpr std::size_t kNumScales = 3;

struct ScaleStack {
  ModalityVars fused;  // C_m, batch x d each
  Var joint;           // H, batch x 3d
  Var i1;              // batch x 2d
  Var i2;              // batch x d
  Var i3;              // batch x 2d
  Var refined;         // H-tilde, batch x 3d
  Var e1;              // from {H, H-tilde}, 3d
  Var e2;              // from {I1, I3}, 2d
  Var e3;              // I2, d

  /// Scale i in {0, 1, 2} -> e1, e2, e3.
  [[nodiscard]] const Var& scale(std::size_t i) const;
};

/// Width of scale i for embedding dim d: 3d, 2d, d.
Index scale_dim(std::size_t scale, Index dim);

class FusionParams {
 public:
  FusionParams() = default;
  FusionParams(Index dim, ScaleCombine combine, Rng& rng);

  void collect(nn::ParamList& out, std::string_view prefix) const;
  [[nodiscard]] Index dim() const { return dim_; }
  [[nodiscard]] ScaleCombine combine() const { return combine_; }

  nn::Linear projection;  // (Q || U) 2d -> d, shared by modalities
  std::array<nn::Linear, 4> stack;

 private:
  Index dim_ = 0;
  ScaleCombine combine_ = ScaleCombine::mean;
};

struct FusedModalities {
  ModalityVars fused;
  Var joint;
};

/// C_m = P(Q_m || U_m); H = C_L || C_A || C_V.
FusedModalities fuse_modalities(const std::array<FactorizedPair, data::kNumModalities>& pairs,
                                const FusionParams& params);

/// Runs the refinement stack over H and assembles the scale groups.
ScaleStack refine(const Var& joint, const FusionParams& params);

}  // namespace hrlf::fusion
