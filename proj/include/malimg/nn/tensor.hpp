#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "malimg/common/error.hpp"

namespace malimg::nn {

using Scalar = double;
using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Shared storage plus the reverse-mode bookkeeping for one value in the graph.
// Ops append a backprop closure that reads this node's grad and accumulates
// into the parents' grads. Leaves (parameters, inputs) have no closure.
struct Node {
  Shape shape;
  std::vector<Scalar> data;
  std::vector<Scalar> grad;  // allocated on first use, same length as data
  bool requires_grad = false;
  bool consumed = false;  // set on the loss node once backward() has run
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backprop;

  void ensure_grad();
};

// Value-semantic handle to a Node. Copies share storage.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, bool requires_grad);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Scalar value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<Scalar> values, bool requires_grad = false);
  static Tensor scalar(Scalar value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int64_t numel() const { return shape_numel(node_->shape); }

  Scalar* data() { return node_->data.data(); }
  const Scalar* data() const { return node_->data.data(); }
  std::vector<Scalar>& vec() { return node_->data; }
  const std::vector<Scalar>& vec() const { return node_->data; }
  Scalar item() const;

  bool requires_grad() const { return node_->requires_grad; }
  Scalar* grad() {
    node_->ensure_grad();
    return node_->grad.data();
  }
  const std::vector<Scalar>& grad_vec() const { return node_->grad; }
  void zero_grad();

  Tensor detached_clone() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Throws NonFinite if any element is NaN or Inf.
void check_finite(const Tensor& t, const char* where);
void check_finite(const Scalar* p, int64_t n, Errc code, const char* where);

// Reverse-mode pass from a scalar loss. The graph can be consumed once;
// a second call on the same loss throws GraphError.
void backward(const Tensor& loss);

// Internal helper for op implementations: allocates the output node, wires
// parents and marks requires_grad. `backprop` may be empty when no parent
// is tracked.
Tensor make_op(Shape shape, std::vector<Tensor> parents,
               std::function<void(Node&)> make_backprop);

}  // namespace malimg::nn
