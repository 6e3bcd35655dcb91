#include "hrlf/autograd.hpp"

#include <stdexcept>
#include <unordered_set>

namespace hrlf::ag {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

void Node::accumulate(const Matrix& contribution) {
  if (grad.size() == 0) {
    grad = contribution;
  } else {
    grad += contribution;
  }
}

void Node::send(std::size_t parent, const Matrix& contribution) {
  if (parent_needs[parent] != 0) parents[parent]->accumulate(contribution);
}

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Var Var::scalar(Scalar v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return Var(std::move(m));
}

const Matrix& Var::grad() const {
  if (node_->grad.size() == 0) {
    node_->grad = Matrix::Zero(node_->value.rows(), node_->value.cols());
  }
  return node_->grad;
}

Matrix& Var::mutable_grad() {
  if (node_->grad.size() == 0) {
    node_->grad = Matrix::Zero(node_->value.rows(), node_->value.cols());
  }
  return node_->grad;
}

Scalar Var::item() const {
  if (rows() != 1 || cols() != 1) throw std::logic_error("item() on a non-scalar value");
  return node_->value(0, 0);
}

void Var::zero_grad() { node_->grad.resize(0, 0); }

Var Var::detach() const { return Var(node_->value, false); }

void Var::backward() const {
  if (rows() != 1 || cols() != 1) throw std::logic_error("backward() requires a scalar root");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS for a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      const std::size_t i = next++;
      Node* parent = node->parents[i].get();
      if (node->parent_needs[i] != 0 && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && node->grad.size() != 0) node->backward_fn(*node);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

FreezeGuard::FreezeGuard(std::span<const Var> params) : params_(params.begin(), params.end()) {
  previous_.reserve(params_.size());
  for (auto& p : params_) {
    previous_.push_back(p.requires_grad());
    p.set_requires_grad(false);
  }
}

FreezeGuard::~FreezeGuard() {
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i].set_requires_grad(previous_[i]);
}

Var make_node(Matrix value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs = needs || p.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    node->parent_needs.reserve(parents.size());
    for (auto& p : parents) {
      node->parents.push_back(p.node());
      node->parent_needs.push_back(p.requires_grad() ? 1 : 0);
    }
    node->backward_fn = std::move(backward);
  }
  return Var(std::move(node));
}

}  // namespace hrlf::ag
