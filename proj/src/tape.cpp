#include "tape.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>
#include <utility>

namespace demorec::ad {

namespace {

void check_finite(const Matrix& v, const char* op) {
  if (v.size() > 0 && !v.allFinite())
    throw Error(Status::NotFinite,
                std::string("non-finite value produced by '") + op + "'");
}

using BackwardFn =
    std::function<std::vector<NodePtr>(const NodePtr&, const NodePtr&)>;

// Results that depend on no differentiable input decay to plain constants,
// so constant-only subgraphs (e.g. forward passes over fixed data) hold no
// parent links and free their intermediates eagerly.
NodePtr make_op(Matrix v, const char* op, std::vector<NodePtr> parents,
                BackwardFn backward) {
  check_finite(v, op);
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->op = op;
  if (rg) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward = std::move(backward);
  }
  return n;
}

void check_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
  require(a->rows() == b->rows() && a->cols() == b->cols(),
          Status::ShapeMismatch,
          std::string(op) + ": shape mismatch " + shape_str(a->value) +
              " vs " + shape_str(b->value));
}

Matrix ones_matrix(Index r, Index c) { return Matrix::Ones(r, c); }

}  // namespace

double Node::scalar() const {
  require(value.size() == 1, Status::ShapeMismatch,
          std::string("scalar() on ") + shape_str(value) + " node");
  return value(0, 0);
}

NodePtr constant(Matrix v) {
  check_finite(v, "constant");
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->op = "constant";
  return n;
}

NodePtr scalar_const(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

NodePtr param(Matrix v) {
  check_finite(v, "param");
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  n->op = "param";
  return n;
}

NodePtr detach(const NodePtr& x) { return constant(x->value); }

NodePtr add(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a, b, "add");
  return make_op(a->value + b->value, "add", {a, b},
                 [](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{g, g};
                 });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a, b, "sub");
  return make_op(a->value - b->value, "sub", {a, b},
                 [](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{g, neg(g)};
                 });
}

NodePtr hadamard(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a, b, "hadamard");
  return make_op(a->value.cwiseProduct(b->value), "hadamard", {a, b},
                 [](const NodePtr& g, const NodePtr& self) {
                   return std::vector<NodePtr>{
                       hadamard(g, self->parents[1]),
                       hadamard(g, self->parents[0])};
                 });
}

NodePtr cwise_div(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a, b, "cwise_div");
  return make_op(a->value.cwiseQuotient(b->value), "cwise_div", {a, b},
                 [](const NodePtr& g, const NodePtr& self) {
                   const NodePtr& b = self->parents[1];
                   return std::vector<NodePtr>{
                       cwise_div(g, b),
                       neg(hadamard(g, cwise_div(self, b)))};
                 });
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  require(a->cols() == b->rows(), Status::ShapeMismatch,
          "matmul: inner dims " + shape_str(a->value) + " vs " +
              shape_str(b->value));
  return make_op(a->value * b->value, "matmul", {a, b},
                 [](const NodePtr& g, const NodePtr& self) {
                   return std::vector<NodePtr>{
                       matmul(g, transpose(self->parents[1])),
                       matmul(transpose(self->parents[0]), g)};
                 });
}

NodePtr transpose(const NodePtr& a) {
  return make_op(a->value.transpose(), "transpose", {a},
                 [](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{transpose(g)};
                 });
}

NodePtr scalar_mul(const NodePtr& a, double c) {
  return make_op(a->value * c, "scalar_mul", {a},
                 [c](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{scalar_mul(g, c)};
                 });
}

NodePtr scalar_add(const NodePtr& a, double c) {
  return make_op(a->value.array() + c, "scalar_add", {a},
                 [](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{g};
                 });
}

NodePtr sigmoid(const NodePtr& a) {
  Matrix v = a->value.unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
  });
  return make_op(std::move(v), "sigmoid", {a},
                 [](const NodePtr& g, const NodePtr& self) {
                   // sigma'(x) = sigma(x) * sigma(-x). Using sigma(-x) instead
                   // of 1 - sigma(x) keeps the derivative nonzero even when
                   // sigma(x) rounds to 1.0, so saturated scores stay trainable.
                   return std::vector<NodePtr>{hadamard(
                       g, hadamard(self, sigmoid(neg(self->parents[0]))))};
                 });
}

NodePtr softplus(const NodePtr& a) {
  Matrix v = a->value.unaryExpr([](double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  });
  return make_op(std::move(v), "softplus", {a},
                 [](const NodePtr& g, const NodePtr& self) {
                   return std::vector<NodePtr>{
                       hadamard(g, sigmoid(self->parents[0]))};
                 });
}

NodePtr exp_(const NodePtr& a) {
  return make_op(a->value.array().exp(), "exp", {a},
                 [](const NodePtr& g, const NodePtr& self) {
                   return std::vector<NodePtr>{hadamard(g, self)};
                 });
}

NodePtr log_(const NodePtr& a) {
  return make_op(a->value.array().log(), "log", {a},
                 [](const NodePtr& g, const NodePtr& self) {
                   return std::vector<NodePtr>{
                       cwise_div(g, self->parents[0])};
                 });
}

NodePtr sqrt_(const NodePtr& a) {
  return make_op(a->value.array().sqrt(), "sqrt", {a},
                 [](const NodePtr& g, const NodePtr& self) {
                   return std::vector<NodePtr>{
                       cwise_div(g, scalar_mul(self, 2.0))};
                 });
}

NodePtr square(const NodePtr& a) {
  return make_op(a->value.array().square(), "square", {a},
                 [](const NodePtr& g, const NodePtr& self) {
                   return std::vector<NodePtr>{
                       hadamard(g, scalar_mul(self->parents[0], 2.0))};
                 });
}

NodePtr relu(const NodePtr& a) {
  // The 0/1 mask is frozen at forward time; its derivative is zero almost
  // everywhere, so second-order passes treat it as constant.
  Matrix mask = (a->value.array() > 0.0).cast<double>();
  return make_op(a->value.cwiseMax(0.0), "relu", {a},
                 [mask](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{hadamard(g, constant(mask))};
                 });
}

NodePtr leaky_relu(const NodePtr& a, double slope) {
  Matrix mask = (a->value.array() > 0.0)
                    .select(Matrix::Ones(a->rows(), a->cols()),
                            Matrix::Constant(a->rows(), a->cols(), slope));
  Matrix v = a->value.cwiseProduct(mask);
  return make_op(std::move(v), "leaky_relu", {a},
                 [mask](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{hadamard(g, constant(mask))};
                 });
}

NodePtr cwise_pow(const NodePtr& a, double p) {
  return make_op(a->value.array().pow(p), "cwise_pow", {a},
                 [p](const NodePtr& g, const NodePtr& self) {
                   return std::vector<NodePtr>{hadamard(
                       g, scalar_mul(cwise_pow(self->parents[0], p - 1.0), p))};
                 });
}

NodePtr concat_rows(const NodePtr& a, const NodePtr& b) {
  require(a->cols() == b->cols(), Status::ShapeMismatch,
          "concat_rows: col mismatch " + shape_str(a->value) + " vs " +
              shape_str(b->value));
  Matrix v(a->rows() + b->rows(), a->cols());
  v.topRows(a->rows()) = a->value;
  v.bottomRows(b->rows()) = b->value;
  Index ra = a->rows(), rb = b->rows();
  return make_op(std::move(v), "concat_rows", {a, b},
                 [ra, rb](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{row_slice(g, 0, ra),
                                               row_slice(g, ra, ra + rb)};
                 });
}

NodePtr row_slice(const NodePtr& a, Index r0, Index r1) {
  require(0 <= r0 && r0 < r1 && r1 <= a->rows(), Status::InvalidArgument,
          "row_slice: bad range");
  Index total = a->rows();
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(r1 - r0));
  for (Index i = r0; i < r1; ++i) idx.push_back(i);
  return make_op(a->value.middleRows(r0, r1 - r0), "row_slice", {a},
                 [idx, total](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{scatter_rows(g, idx, total)};
                 });
}

NodePtr col_slice(const NodePtr& a, Index c0, Index c1) {
  require(0 <= c0 && c0 < c1 && c1 <= a->cols(), Status::InvalidArgument,
          "col_slice: bad range");
  Index total = a->cols();
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(c1 - c0));
  for (Index i = c0; i < c1; ++i) idx.push_back(i);
  return make_op(a->value.middleCols(c0, c1 - c0), "col_slice", {a},
                 [idx, total](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{transpose(
                       scatter_rows(transpose(g), idx, total))};
                 });
}

NodePtr gather_rows(const NodePtr& a, std::vector<Index> idx) {
  Matrix v(static_cast<Index>(idx.size()), a->cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    require(idx[k] >= 0 && idx[k] < a->rows(), Status::InvalidArgument,
            "gather_rows: index out of range");
    v.row(static_cast<Index>(k)) = a->value.row(idx[k]);
  }
  Index total = a->rows();
  return make_op(std::move(v), "gather_rows", {a},
                 [idx, total](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{scatter_rows(g, idx, total)};
                 });
}

NodePtr scatter_rows(const NodePtr& a, std::vector<Index> idx,
                     Index total_rows) {
  require(static_cast<Index>(idx.size()) == a->rows(),
          Status::ShapeMismatch, "scatter_rows: index count vs rows");
  Matrix v = Matrix::Zero(total_rows, a->cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    require(idx[k] >= 0 && idx[k] < total_rows, Status::InvalidArgument,
            "scatter_rows: index out of range");
    v.row(idx[k]) += a->value.row(static_cast<Index>(k));
  }
  return make_op(std::move(v), "scatter_rows", {a},
                 [idx](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{gather_rows(g, idx)};
                 });
}

NodePtr bcast(const NodePtr& a, Index rows, Index cols) {
  require(a->value.size() == 1, Status::ShapeMismatch,
          "bcast: source must be 1x1");
  return make_op(Matrix::Constant(rows, cols, a->value(0, 0)), "bcast", {a},
                 [](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{sum(g)};
                 });
}

NodePtr row_sum(const NodePtr& a) {
  Index m = a->cols();
  return make_op(a->value.rowwise().sum(), "row_sum", {a},
                 [m](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{
                       matmul(g, constant(ones_matrix(1, m)))};
                 });
}

NodePtr col_sum(const NodePtr& a) {
  Index n = a->rows();
  return make_op(a->value.colwise().sum(), "col_sum", {a},
                 [n](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{
                       matmul(constant(ones_matrix(n, 1)), g)};
                 });
}

NodePtr sum(const NodePtr& a) {
  Matrix v(1, 1);
  v(0, 0) = a->value.sum();
  Index n = a->rows(), m = a->cols();
  return make_op(std::move(v), "sum", {a},
                 [n, m](const NodePtr& g, const NodePtr&) {
                   return std::vector<NodePtr>{bcast(g, n, m)};
                 });
}

NodePtr neg(const NodePtr& a) { return scalar_mul(a, -1.0); }

NodePtr one_minus(const NodePtr& a) { return scalar_add(neg(a), 1.0); }

NodePtr mean(const NodePtr& a) {
  require(a->value.size() > 0, Status::InvalidArgument, "mean of empty");
  return scalar_mul(sum(a), 1.0 / static_cast<double>(a->value.size()));
}

NodePtr frobenius_sq(const NodePtr& a) { return sum(square(a)); }

NodePtr dot(const NodePtr& a, const NodePtr& b) {
  return sum(hadamard(a, b));
}

NodePtr log_sigmoid(const NodePtr& a) { return neg(softplus(neg(a))); }

NodePtr scale_rows(const NodePtr& x, const NodePtr& r) {
  require(r->cols() == 1 && r->rows() == x->rows(), Status::ShapeMismatch,
          "scale_rows: scale must be n x 1");
  return hadamard(x, matmul(r, constant(ones_matrix(1, x->cols()))));
}

NodePtr div_rows(const NodePtr& x, const NodePtr& r) {
  require(r->cols() == 1 && r->rows() == x->rows(), Status::ShapeMismatch,
          "div_rows: divisor must be n x 1");
  return cwise_div(x, matmul(r, constant(ones_matrix(1, x->cols()))));
}

NodePtr softmax_rows(const NodePtr& a) {
  // Row-max shift for stability. Softmax is invariant to per-row shifts,
  // so treating the shift as a constant leaves gradients unchanged.
  Matrix shift = a->value.rowwise().maxCoeff().replicate(1, a->cols());
  NodePtr e = exp_(sub(a, constant(shift)));
  return div_rows(e, row_sum(e));
}

std::vector<NodePtr> grad(const NodePtr& loss,
                          const std::vector<NodePtr>& params,
                          bool create_graph) {
  require(loss != nullptr && loss->value.size() == 1, Status::ShapeMismatch,
          "grad: loss must be a 1x1 node");

  // Postorder over the differentiable subgraph (iterative; graphs can be
  // deep when inner optimisation steps are chained).
  std::vector<NodePtr> topo;
  std::unordered_set<Node*> visited;
  if (loss->requires_grad) {
    struct Frame {
      NodePtr node;
      std::size_t next = 0;
    };
    std::vector<Frame> stack;
    stack.push_back({loss});
    visited.insert(loss.get());
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < f.node->parents.size()) {
        const NodePtr& p = f.node->parents[f.next++];
        if (p->requires_grad && !visited.count(p.get())) {
          visited.insert(p.get());
          stack.push_back({p});
        }
      } else {
        topo.push_back(f.node);
        stack.pop_back();
      }
    }
  }

  std::unordered_map<Node*, NodePtr> grads;
  grads[loss.get()] = constant(Matrix::Ones(1, 1));
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const NodePtr& n = *it;
    auto git = grads.find(n.get());
    if (git == grads.end() || !n->backward) continue;
    std::vector<NodePtr> pg = n->backward(git->second, n);
    require(pg.size() == n->parents.size(), Status::InternalError,
            std::string("backward arity for '") + n->op + "'");
    for (std::size_t i = 0; i < pg.size(); ++i) {
      const NodePtr& p = n->parents[i];
      if (!p->requires_grad || !pg[i]) continue;
      NodePtr& slot = grads[p.get()];
      slot = slot ? add(slot, pg[i]) : pg[i];
    }
  }

  std::vector<NodePtr> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    auto git = grads.find(p.get());
    NodePtr gp = (git != grads.end())
                     ? git->second
                     : constant(Matrix::Zero(p->rows(), p->cols()));
    out.push_back(create_graph ? gp : detach(gp));
  }
  return out;
}

void ParamSet::add(const std::string& name, NodePtr p) {
  for (const auto& [n, _] : items_)
    require(n != name, Status::InvalidArgument,
            "ParamSet: duplicate name '" + name + "'");
  items_.emplace_back(name, std::move(p));
}

const NodePtr& ParamSet::at(const std::string& name) const {
  for (const auto& [n, p] : items_)
    if (n == name) return p;
  throw Error(Status::InvalidArgument, "ParamSet: no param '" + name + "'");
}

std::vector<NodePtr> ParamSet::nodes() const {
  std::vector<NodePtr> out;
  out.reserve(items_.size());
  for (const auto& [_, p] : items_) out.push_back(p);
  return out;
}

}  // namespace demorec::ad
