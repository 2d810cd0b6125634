#ifndef DEMOREC_OPTIM_HPP
#define DEMOREC_OPTIM_HPP

#include <cmath>
#include <vector>

#include "tape.hpp"

namespace demorec {

// First/second-moment adaptive optimizer over tape parameters. The
// bias-corrected per-coordinate step keeps training moving even where raw
// gradients are orders of magnitude apart, which matters for the small
// embedding scales the relay models start from.
struct AdamState {
  std::vector<Matrix> m, v;
  double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  int t = 0;

  explicit AdamState(const std::vector<ad::NodePtr>& params) {
    for (const auto& p : params) {
      m.push_back(Matrix::Zero(p->rows(), p->cols()));
      v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }

  void step(const std::vector<ad::NodePtr>& params,
            const std::vector<Matrix>& g, double lr) {
    ++t;
    double c1 = 1.0 - std::pow(b1, t);
    double c2 = 1.0 - std::pow(b2, t);
    for (std::size_t l = 0; l < params.size(); ++l) {
      m[l] = b1 * m[l] + (1.0 - b1) * g[l];
      v[l] = b2 * v[l] + (1.0 - b2) * g[l].cwiseProduct(g[l]);
      Matrix mhat = m[l] / c1;
      Matrix vhat = v[l] / c2;
      params[l]->value -=
          lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
    }
  }
};

}  // namespace demorec

#endif  // DEMOREC_OPTIM_HPP
