#include "malimg/nn/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace malimg::nn {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

void Node::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

Tensor::Tensor(Shape shape, bool requires_grad) {
  for (int d : shape) require(d > 0, Errc::ShapeError, "non-positive dim in " + shape_str(shape));
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->data.assign(static_cast<size_t>(shape_numel(node_->shape)), 0.0);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return Tensor(std::move(shape), requires_grad); }

Tensor Tensor::full(Shape shape, Scalar value, bool requires_grad) {
  Tensor t(std::move(shape), requires_grad);
  for (auto& v : t.vec()) v = value;
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<Scalar> values, bool requires_grad) {
  Tensor t(std::move(shape), requires_grad);
  require(static_cast<int64_t>(values.size()) == t.numel(), Errc::ShapeError,
          "value count does not match shape " + shape_str(t.shape()));
  t.node()->data = std::move(values);
  return t;
}

Tensor Tensor::scalar(Scalar value) { return from({1}, {value}); }

Scalar Tensor::item() const {
  require(numel() == 1, Errc::ShapeError, "item() on non-scalar tensor " + shape_str(shape()));
  return node_->data[0];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detached_clone() const {
  Tensor t(node_->shape, false);
  t.node()->data = node_->data;
  return t;
}

void check_finite(const Scalar* p, int64_t n, Errc code, const char* where) {
  for (int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) fail(code, std::string(where) + " produced a non-finite value");
  }
}

void check_finite(const Tensor& t, const char* where) {
  check_finite(t.data(), t.numel(), Errc::NonFinite, where);
}

Tensor make_op(Shape shape, std::vector<Tensor> parents, std::function<void(Node&)> make_backprop) {
  Tensor out(std::move(shape), false);
  Node& n = *out.node();
  bool tracked = false;
  for (const auto& p : parents) tracked = tracked || p.requires_grad();
  n.requires_grad = tracked;
  if (tracked) {
    n.parents.reserve(parents.size());
    for (auto& p : parents) n.parents.push_back(p.node());
    make_backprop(n);
  }
  return out;
}

void backward(const Tensor& loss) {
  require(loss.defined(), Errc::GraphError, "backward on undefined tensor");
  require(loss.numel() == 1, Errc::GraphError, "backward requires a scalar loss");
  Node* root = loss.node().get();
  require(!root->consumed, Errc::GraphError, "graph already consumed by a previous backward");
  root->consumed = true;

  // Iterative post-order DFS; the reversed finish order is a valid
  // topological order for the reverse pass.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->backprop && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) {
      n->backprop();
      n->backprop = nullptr;  // closures run once
    }
  }
}

}  // namespace malimg::nn
