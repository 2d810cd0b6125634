#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "common.hpp"

namespace demorec::ad {

class Node;
using NodePtr = std::shared_ptr<Node>;

// One value in an eagerly evaluated computation graph over dense matrices.
// Scalars are 1x1 matrices. A node's backward callback maps the upstream
// gradient to one gradient node per parent; the callback builds those
// gradients out of the same op set, so grad() output is itself a graph and
// can be differentiated again (needed for gradient-of-gradient matching).
class Node {
public:
  Matrix value;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<NodePtr> parents;
  // (upstream_grad, self) -> per-parent gradient, nullptr to skip a parent
  std::function<std::vector<NodePtr>(const NodePtr&, const NodePtr&)> backward;

  Index rows() const { return value.rows(); }
  Index cols() const { return value.cols(); }
  double scalar() const;
};

// Leaves.
NodePtr constant(Matrix v);
NodePtr scalar_const(double v);
NodePtr param(Matrix v);
NodePtr detach(const NodePtr& x);

// Elementwise / linear-algebra primitives.
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr hadamard(const NodePtr& a, const NodePtr& b);
NodePtr cwise_div(const NodePtr& a, const NodePtr& b);
NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr transpose(const NodePtr& a);
NodePtr scalar_mul(const NodePtr& a, double c);
NodePtr scalar_add(const NodePtr& a, double c);
NodePtr sigmoid(const NodePtr& a);
NodePtr softplus(const NodePtr& a);
NodePtr exp_(const NodePtr& a);
NodePtr log_(const NodePtr& a);
NodePtr sqrt_(const NodePtr& a);
NodePtr square(const NodePtr& a);
NodePtr relu(const NodePtr& a);
NodePtr leaky_relu(const NodePtr& a, double slope);
NodePtr cwise_pow(const NodePtr& a, double p);

// Shape / indexing primitives.
NodePtr concat_rows(const NodePtr& a, const NodePtr& b);
NodePtr row_slice(const NodePtr& a, Index r0, Index r1);
NodePtr col_slice(const NodePtr& a, Index c0, Index c1);
NodePtr gather_rows(const NodePtr& a, std::vector<Index> idx);
NodePtr scatter_rows(const NodePtr& a, std::vector<Index> idx, Index total_rows);
NodePtr bcast(const NodePtr& a, Index rows, Index cols);  // a is 1x1

// Reductions.
NodePtr row_sum(const NodePtr& a);  // n x m -> n x 1
NodePtr col_sum(const NodePtr& a);  // n x m -> 1 x m
NodePtr sum(const NodePtr& a);      // n x m -> 1 x 1

// Composites (built from the primitives above).
NodePtr neg(const NodePtr& a);
NodePtr one_minus(const NodePtr& a);
NodePtr mean(const NodePtr& a);
NodePtr frobenius_sq(const NodePtr& a);
NodePtr dot(const NodePtr& a, const NodePtr& b);
NodePtr log_sigmoid(const NodePtr& a);
NodePtr scale_rows(const NodePtr& x, const NodePtr& r);  // r is n x 1
NodePtr div_rows(const NodePtr& x, const NodePtr& r);    // r is n x 1
NodePtr softmax_rows(const NodePtr& a);

// Gradient of a 1x1 loss with respect to each param. Params the loss does
// not reach get exact-zero gradients. With create_graph the results stay
// connected to the graph and can be differentiated again; without it they
// are detached constants.
std::vector<NodePtr> grad(const NodePtr& loss,
                          const std::vector<NodePtr>& params,
                          bool create_graph);

// Named parameter collection with stable iteration order.
class ParamSet {
public:
  void add(const std::string& name, NodePtr p);
  const NodePtr& at(const std::string& name) const;
  const std::vector<std::pair<std::string, NodePtr>>& items() const {
    return items_;
  }
  std::vector<NodePtr> nodes() const;
  std::size_t size() const { return items_.size(); }

private:
  std::vector<std::pair<std::string, NodePtr>> items_;
};

}  // namespace demorec::ad
