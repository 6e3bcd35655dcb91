#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. Every value is a 2-D matrix; scalars are 1x1.

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace hrlf::ag {

using Scalar = double;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Snapshot of each parent's requires_grad at construction time.
  std::vector<char> parent_needs;
  std::function<void(Node&)> backward_fn;

  void accumulate(const Matrix& contribution);
  [[nodiscard]] bool needs(std::size_t parent) const { return parent_needs[parent] != 0; }
  [[nodiscard]] const Matrix& input(std::size_t parent) const { return parents[parent]->value; }
  /// Adds `contribution` to the gradient of parent `i` if it was trainable.
  void send(std::size_t parent, const Matrix& contribution);
};

/// Handle to a node in the computation graph. Cheap to copy; copies alias.
class Var {
 public:
  Var() = default;
  explicit Var(Matrix value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  /// Trainable leaf.
  static Var parameter(Matrix value) { return Var(std::move(value), true); }
  static Var scalar(Scalar v);

  [[nodiscard]] const Matrix& value() const { return node_->value; }
  [[nodiscard]] Matrix& mutable_value() { return node_->value; }
  [[nodiscard]] const Matrix& grad() const;
  [[nodiscard]] Matrix& mutable_grad();
  [[nodiscard]] bool has_grad() const { return node_->grad.size() != 0; }
  [[nodiscard]] Index rows() const { return node_->value.rows(); }
  [[nodiscard]] Index cols() const { return node_->value.cols(); }
  [[nodiscard]] Scalar item() const;
  [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  [[nodiscard]] bool defined() const { return static_cast<bool>(node_); }

  void zero_grad();
  /// Constant copy of the current value, cut from the graph.
  [[nodiscard]] Var detach() const;
  /// Reverse sweep from this 1x1 node. A graph supports one sweep.
  void backward() const;

  [[nodiscard]] const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

[[nodiscard]] bool grad_enabled();

/// Marks the given leaves as non-trainable for the guard's lifetime, so
/// graphs built meanwhile never route gradient into them.
class FreezeGuard {
 public:
  explicit FreezeGuard(std::span<const Var> params);
  ~FreezeGuard();
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<Var> params_;
  std::vector<bool> previous_;
};

/// Builds an interior node. `backward` is dropped when no parent needs grad.
Var make_node(Matrix value, std::vector<Var> parents, std::function<void(Node&)> backward);

}  // namespace hrlf::ag
