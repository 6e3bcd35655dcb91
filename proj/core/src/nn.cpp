#include "hrlf/nn.hpp"

#include "hrlf/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace hrlf::nn {

std::vector<Var> vars_of(const ParamList& params) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.var);
  return out;
}

std::string join_name(std::string_view prefix, std::string_view leaf) {
  if (prefix.empty()) return std::string(leaf);
  std::string out(prefix);
  out += '.';
  out += leaf;
  return out;
}

Linear::Linear(Index in, Index out, Rng& rng) {
  if (in < 1 || out < 1) throw std::invalid_argument("Linear: dimensions must be positive");
  // He-uniform weights keep activations from shrinking through the ReLU stacks
  const Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(in));
  const Scalar weight_bound = std::sqrt(6.0) * bound;
  Matrix w(in, out);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-weight_bound, weight_bound);
  Matrix b(1, out);
  for (Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-bound, bound);
  weight_ = Var::parameter(std::move(w));
  bias_ = Var::parameter(std::move(b));
}

Var Linear::operator()(const Var& x) const { return ag::add_row(ag::matmul(x, weight_), bias_); }

void Linear::collect(ParamList& out, std::string_view prefix) const {
  out.push_back({join_name(prefix, "weight"), weight_});
  out.push_back({join_name(prefix, "bias"), bias_});
}

Mlp::Mlp(std::vector<Index> sizes, bool activate_output, Rng& rng)
    : activate_output_(activate_output) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) layers_.emplace_back(sizes[i], sizes[i + 1], rng);
}

Var Mlp::operator()(const Var& x) const {
  Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](h);
    if (i + 1 < layers_.size() || activate_output_) h = ag::relu(h);
  }
  return h;
}

void Mlp::collect(ParamList& out, std::string_view prefix) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].collect(out, join_name(prefix, std::to_string(i)));
  }
}

LayerNorm::LayerNorm(Index dim)
    : gain_(Var::parameter(Matrix::Ones(1, dim))), shift_(Var::parameter(Matrix::Zero(1, dim))) {}

Var LayerNorm::operator()(const Var& x) const {
  return ag::add_row(ag::mul_row(ag::layer_norm(x), gain_), shift_);
}

void LayerNorm::collect(ParamList& out, std::string_view prefix) const {
  out.push_back({join_name(prefix, "gain"), gain_});
  out.push_back({join_name(prefix, "shift"), shift_});
}

Adam::Adam(std::vector<Var> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  first_moment_.reserve(params_.size());
  second_moment_.reserve(params_.size());
  for (const auto& p : params_) {
    first_moment_.push_back(Matrix::Zero(p.rows(), p.cols()));
    second_moment_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

Scalar Adam::grad_norm() const {
  Scalar total = 0.0;
  for (const auto& p : params_) {
    if (p.has_grad()) total += p.grad().squaredNorm();
  }
  return std::sqrt(total);
}

void Adam::step() {
  ++steps_;
  Scalar clip_scale = 1.0;
  if (options_.clip_norm > 0.0) {
    const Scalar norm = grad_norm();
    if (norm > options_.clip_norm) clip_scale = options_.clip_norm / norm;
  }
  const Scalar bias1 = 1.0 - std::pow(options_.beta1, static_cast<Scalar>(steps_));
  const Scalar bias2 = 1.0 - std::pow(options_.beta2, static_cast<Scalar>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    const Matrix g = p.grad() * clip_scale;
    first_moment_[i] = options_.beta1 * first_moment_[i] + (1.0 - options_.beta1) * g;
    second_moment_[i] =
        options_.beta2 * second_moment_[i] + (1.0 - options_.beta2) * g.cwiseProduct(g);
    const auto m_hat = first_moment_[i].array() / bias1;
    const auto v_hat = second_moment_[i].array() / bias2;
    p.mutable_value().array() -= options_.learning_rate * m_hat / (v_hat.sqrt() + options_.epsilon);
  }
}

}  // namespace hrlf::nn
