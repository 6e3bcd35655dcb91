#pragma once

// Mutual-information maximisation between same-scale teacher and student
// representations using the Jensen-Shannon dyadic lower bound
//
//   MI(x, y) >= E_joint[-sp(-T(x, y))] + E_marginal[-sp(T(x, y'))],
//
// with marginal pairs formed by a fixed-point-free in-batch shuffle.

#include "hrlf/autograd.hpp"
#include "hrlf/fusion.hpp"
#include "hrlf/nn.hpp"

#include <array>
#include <cstdint>
#include <span>

namespace hrlf::hmi {

using ag::Index;
using ag::Var;

/// Scores a pair (x, y) of equal-width vectors: MLP over (x || y).
class StatisticsNet {
 public:
  StatisticsNet() = default;
  StatisticsNet(Index input_dim, Index hidden, Rng& rng);

  /// batch x 1 scores.
  [[nodiscard]] Var operator()(const Var& x, const Var& y) const;
  void collect(nn::ParamList& out, std::string_view prefix) const;
  [[nodiscard]] Index input_dim() const { return input_dim_; }

  nn::Mlp net;

 private:
  Index input_dim_ = 0;
};

/// One statistics network per scale (widths 3d, 2d, d).
class StatisticsNets {
 public:
  StatisticsNets() = default;
  StatisticsNets(Index dim, Index hidden, Rng& rng);

  void collect(nn::ParamList& out, std::string_view prefix) const;

  std::array<StatisticsNet, fusion::kNumScales> nets;
};

/// mean(-sp(-joint)) + mean(-sp(marginal)).
Var jsd_bound(const Var& joint_scores, const Var& marginal_scores);

/// Bound with an explicit marginal pairing: y row shuffle[b] pairs x row b.
Var mi_lower_bound(const Var& x, const Var& y, const StatisticsNet& net,
                   std::span<const std::size_t> shuffle);

/// Bound with a derangement drawn from `rng`. Batch must be >= 2.
Var mi_lower_bound(const Var& x, const Var& y, const StatisticsNet& net, Rng& rng);

/// -sum over scales of the bound between teacher and student scale groups.
/// The teacher side is detached.
Var loss_hmi(const fusion::ScaleStack& teacher, const fusion::ScaleStack& student,
             const StatisticsNets& nets, std::uint64_t shuffle_seed);

}  // namespace hrlf::hmi
