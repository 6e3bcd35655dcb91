#pragma once

// Adversarial alignment of same-scale teacher/student distributions. One
// discriminator per scale outputs P(teacher); the discriminator ascends
//   sum_i log(1 - D_i(E^s_i)) + log D_i(E^t_i)
// and the student descends the non-saturating surrogate sum_i -log D_i(E^s_i).

#include "hrlf/autograd.hpp"
#include "hrlf/fusion.hpp"
#include "hrlf/nn.hpp"

#include <array>

namespace hrlf::hal {

using ag::Index;
using ag::Scalar;
using ag::Var;

/// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon].
inline constexpr Scalar kProbEpsilon = 1e-6;

class Discriminator {
 public:
  Discriminator() = default;
  /// input -> 2*input -> 1, ReLU hidden, sigmoid head.
  Discriminator(Index input_dim, Rng& rng);

  /// Clamped probabilities, batch x 1.
  [[nodiscard]] Var operator()(const Var& x) const;
  void collect(nn::ParamList& out, std::string_view prefix) const;

  nn::Mlp net;
};

class ScaleDiscriminators {
 public:
  ScaleDiscriminators() = default;
  ScaleDiscriminators(Index dim, Rng& rng);

  void collect(nn::ParamList& out, std::string_view prefix) const;
  [[nodiscard]] std::vector<Var> parameters() const;

  std::array<Discriminator, fusion::kNumScales> discs;
};

/// Objective the discriminators maximise. Both stacks are detached.
Var loss_hal_discriminator(const fusion::ScaleStack& teacher, const fusion::ScaleStack& student,
                           const ScaleDiscriminators& discs);

/// Loss the student minimises. Discriminator parameters receive no gradient.
Var loss_hal_generator(const fusion::ScaleStack& student, const ScaleDiscriminators& discs);

}  // namespace hrlf::hal
