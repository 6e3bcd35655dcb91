#pragma once

// Layers and the optimizer shared by every network in the framework.

#include "hrlf/autograd.hpp"
#include "hrlf/rng.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace hrlf::nn {

using ag::Index;
using ag::Matrix;
using ag::Scalar;
using ag::Var;

struct NamedParam {
  std::string name;
  Var var;
};
using ParamList = std::vector<NamedParam>;

std::vector<Var> vars_of(const ParamList& params);
std::string join_name(std::string_view prefix, std::string_view leaf);

/// y = x W + b with W stored in x out layout. Weights He-uniform
/// (+-sqrt(6/in)), bias uniform(+-1/sqrt(in)).
class Linear {
 public:
  Linear() = default;
  Linear(Index in, Index out, Rng& rng);

  [[nodiscard]] Var operator()(const Var& x) const;
  void collect(ParamList& out, std::string_view prefix) const;

  [[nodiscard]] Index in_dim() const { return weight_.rows(); }
  [[nodiscard]] Index out_dim() const { return weight_.cols(); }
  [[nodiscard]] const Var& weight() const { return weight_; }
  [[nodiscard]] const Var& bias() const { return bias_; }
  Var& weight() { return weight_; }
  Var& bias() { return bias_; }

 private:
  Var weight_;
  Var bias_;
};

/// Stack of Linear layers with ReLU between them. `activate_output` also
/// applies ReLU after the last layer.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<Index> sizes, bool activate_output, Rng& rng);

  [[nodiscard]] Var operator()(const Var& x) const;
  void collect(ParamList& out, std::string_view prefix) const;

  [[nodiscard]] std::vector<Linear>& layers() { return layers_; }
  [[nodiscard]] const std::vector<Linear>& layers() const { return layers_; }
  [[nodiscard]] Index in_dim() const { return layers_.front().in_dim(); }
  [[nodiscard]] Index out_dim() const { return layers_.back().out_dim(); }

 private:
  std::vector<Linear> layers_;
  bool activate_output_ = false;
};

/// Row-wise layer normalisation with learned gain and shift.
class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(Index dim);

  [[nodiscard]] Var operator()(const Var& x) const;
  void collect(ParamList& out, std::string_view prefix) const;

 private:
  Var gain_;
  Var shift_;
};

struct AdamOptions {
  Scalar learning_rate = 1e-3;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
  /// Global-norm gradient clipping threshold; <= 0 disables.
  Scalar clip_norm = 0.0;
};

/// Adam over one parameter group.
class Adam {
 public:
  Adam(std::vector<Var> params, AdamOptions options);

  void zero_grad();
  /// Applies one update from the accumulated gradients.
  void step();
  /// Global L2 norm of the current gradients (before clipping).
  [[nodiscard]] Scalar grad_norm() const;
  [[nodiscard]] long steps() const { return steps_; }

 private:
  std::vector<Var> params_;
  AdamOptions options_;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
  long steps_ = 0;
};

}  // namespace hrlf::nn
