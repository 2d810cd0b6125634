#include "relay.hpp"

#include <algorithm>
#include <cmath>

namespace demorec {

namespace ad = demorec::ad;

Backbone parse_backbone(const std::string& name) {
  std::string n;
  for (char c : name) n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (n == "gcn") return Backbone::GCN;
  if (n == "sage" || n == "graphsage") return Backbone::SAGE;
  if (n == "gat") return Backbone::GAT;
  throw Error(Status::InvalidArgument, "unknown backbone '" + name + "'");
}

std::string backbone_name(Backbone b) {
  switch (b) {
    case Backbone::GCN: return "gcn";
    case Backbone::SAGE: return "sage";
    case Backbone::GAT: return "gat";
  }
  return "?";
}

RelayModel sample_theta(Backbone backbone, RelayDims dims, std::uint64_t seed) {
  require(dims.layers >= 1 && dims.in_dim >= 1 && dims.hidden >= 1,
          Status::InvalidArgument, "sample_theta: bad dims");
  RelayModel m;
  m.backbone = backbone;
  m.dims = dims;
  m.init_seed = seed;
  std::uint64_t stream = 0;
  auto glorot = [&](Index r, Index c) {
    Rng rng = make_rng(seed, 100 + stream++);
    return ad::param(glorot_matrix(r, c, rng));
  };
  for (Index l = 0; l < dims.layers; ++l) {
    Index in = (l == 0) ? dims.in_dim : dims.hidden;
    std::string suffix = std::to_string(l);
    switch (backbone) {
      case Backbone::GCN:
        m.params.add("W" + suffix, glorot(in, dims.hidden));
        break;
      case Backbone::SAGE:
        m.params.add("W" + suffix, glorot(in, dims.hidden));
        m.params.add("V" + suffix, glorot(in, dims.hidden));
        break;
      case Backbone::GAT:
        m.params.add("W" + suffix, glorot(in, dims.hidden));
        m.params.add("a" + suffix, glorot(2 * dims.hidden, 1));
        break;
    }
  }
  return m;
}

namespace {

// Rows of a soft adjacency sum to something positive in general; genuinely
// empty rows (possible with binary adjacencies) get a self-loop so the
// normalization stays finite.
ad::NodePtr with_self_loop_fallback(const ad::NodePtr& a) {
  Matrix fix = Matrix::Zero(a->rows(), a->cols());
  Eigen::VectorXd sums = a->value.rowwise().sum();
  bool any = false;
  for (Index r = 0; r < a->rows(); ++r)
    if (sums(r) <= 0.0) {
      fix(r, r) = 1.0;
      any = true;
    }
  return any ? ad::add(a, ad::constant(fix)) : a;
}

}  // namespace

ad::NodePtr relay_forward(const RelayModel& model, const ad::NodePtr& adjacency,
                          const ad::NodePtr& features,
                          const std::vector<ad::NodePtr>* theta_override,
                          std::vector<ad::NodePtr>* attentions) {
  Index n = adjacency->rows();
  require(adjacency->cols() == n, Status::ShapeMismatch,
          "relay_forward: adjacency must be square");
  require(features->rows() == n, Status::ShapeMismatch,
          "relay_forward: feature rows vs adjacency size");
  require(features->cols() == model.dims.in_dim, Status::ShapeMismatch,
          "relay_forward: feature dim vs model input dim");
  if (theta_override)
    require(theta_override->size() == model.params.size(),
            Status::ShapeMismatch, "relay_forward: theta override arity");

  std::size_t theta_pos = 0;
  auto next_param = [&]() -> ad::NodePtr {
    ad::NodePtr p = theta_override ? (*theta_override)[theta_pos]
                                   : model.params.items()[theta_pos].second;
    ++theta_pos;
    return p;
  };

  ad::NodePtr eye = ad::constant(Matrix::Identity(n, n));
  ad::NodePtr h = features;
  for (Index l = 0; l < model.dims.layers; ++l) {
    bool last = (l == model.dims.layers - 1);
    switch (model.backbone) {
      case Backbone::GCN: {
        ad::NodePtr w = next_param();
        ad::NodePtr a_tilde = ad::add(adjacency, eye);
        ad::NodePtr d = ad::row_sum(a_tilde);
        ad::NodePtr d_inv_sqrt = ad::cwise_pow(d, -0.5);
        ad::NodePtr norm = ad::hadamard(
            a_tilde, ad::matmul(d_inv_sqrt, ad::transpose(d_inv_sqrt)));
        h = ad::matmul(ad::matmul(norm, h), w);
        break;
      }
      case Backbone::SAGE: {
        ad::NodePtr w_self = next_param();
        ad::NodePtr w_neigh = next_param();
        ad::NodePtr a_eff = with_self_loop_fallback(adjacency);
        ad::NodePtr rn = ad::div_rows(a_eff, ad::row_sum(a_eff));
        h = ad::add(ad::matmul(h, w_self),
                    ad::matmul(ad::matmul(rn, h), w_neigh));
        break;
      }
      case Backbone::GAT: {
        ad::NodePtr w = next_param();
        ad::NodePtr a_vec = next_param();
        ad::NodePtr hw = ad::matmul(h, w);
        ad::NodePtr a_src = ad::row_slice(a_vec, 0, model.dims.hidden);
        ad::NodePtr a_dst = ad::row_slice(a_vec, model.dims.hidden,
                                          2 * model.dims.hidden);
        ad::NodePtr u = ad::matmul(hw, a_src);  // n x 1
        ad::NodePtr v = ad::matmul(hw, a_dst);
        ad::NodePtr scores =
            ad::add(ad::matmul(u, ad::constant(Matrix::Ones(1, n))),
                    ad::matmul(ad::constant(Matrix::Ones(n, 1)),
                               ad::transpose(v)));
        ad::NodePtr e = ad::leaky_relu(scores, 0.2);
        // Row shifts cancel between numerator and denominator, so the
        // stabilizing max is safe to treat as constant.
        Matrix shift = e->value.rowwise().maxCoeff().replicate(1, n);
        ad::NodePtr ex = ad::exp_(ad::sub(e, ad::constant(shift)));
        // Support weighting: binary adjacency masks to neighbors+self; soft
        // adjacency scales attention by edge strength before normalizing.
        ad::NodePtr weighted = ad::hadamard(ex, ad::add(adjacency, eye));
        ad::NodePtr att = ad::div_rows(weighted, ad::row_sum(weighted));
        if (attentions) attentions->push_back(att);
        h = ad::matmul(att, hw);
        break;
      }
    }
    if (!last) h = ad::relu(h);
  }
  return h;
}

LinkBatch build_link_batch(const BipartiteGraph& graph,
                           const NegativeSampler& sampler, int k_neg,
                           Rng& rng) {
  require(k_neg >= 1, Status::InvalidArgument,
          "build_link_batch: k_neg must be >= 1");
  require(graph.num_edges > 0, Status::EmptyGraph,
          "build_link_batch: graph has no edges");
  LinkBatch batch;
  batch.negatives.resize(static_cast<std::size_t>(k_neg));
  for (Index u = 0; u < graph.num_users; ++u) {
    const auto& items = graph.user_adj[static_cast<std::size_t>(u)];
    for (Index i : items) {
      batch.src.push_back(u);
      batch.dst.push_back(graph.num_users + i);
      for (int k = 0; k < k_neg; ++k) {
        Index nitem = sampler.draw_excluding(rng, items);
        batch.negatives[static_cast<std::size_t>(k)].push_back(
            graph.num_users + nitem);
      }
    }
  }
  return batch;
}

ad::NodePtr relay_loss(const RelayModel& model, const ad::NodePtr& adjacency,
                       const ad::NodePtr& features, const LinkBatch& batch,
                       const std::vector<ad::NodePtr>* theta_override) {
  require(!batch.src.empty(), Status::InvalidArgument,
          "relay_loss: empty batch");
  require(batch.src.size() == batch.dst.size(), Status::ShapeMismatch,
          "relay_loss: src/dst size mismatch");
  ad::NodePtr h = relay_forward(model, adjacency, features, theta_override);
  ad::NodePtr hu = ad::gather_rows(h, batch.src);
  ad::NodePtr hi = ad::gather_rows(h, batch.dst);
  ad::NodePtr pos = ad::row_sum(ad::hadamard(hu, hi));
  ad::NodePtr total = ad::sum(ad::log_sigmoid(pos));
  for (const auto& negs : batch.negatives) {
    require(negs.size() == batch.src.size(), Status::ShapeMismatch,
            "relay_loss: negative column size mismatch");
    ad::NodePtr hn = ad::gather_rows(h, negs);
    ad::NodePtr s = ad::row_sum(ad::hadamard(hu, hn));
    total = ad::add(total, ad::sum(ad::log_sigmoid(ad::neg(s))));
  }
  double inv = -1.0 / static_cast<double>(batch.src.size());
  return ad::scalar_mul(total, inv);
}

ad::NodePtr dense_link_loss(const ad::NodePtr& embeddings,
                            const ad::NodePtr& target) {
  Index n = embeddings->rows();
  require(target->rows() == n && target->cols() == n, Status::ShapeMismatch,
          "dense_link_loss: target must be n x n");
  ad::NodePtr p = ad::matmul(embeddings, ad::transpose(embeddings));
  // BCE via softplus: -[t log s(p) + (1-t) log(1-s(p))]
  ad::NodePtr elem = ad::add(ad::hadamard(target, ad::softplus(ad::neg(p))),
                             ad::hadamard(ad::one_minus(target), ad::softplus(p)));
  Matrix mask = Matrix::Ones(n, n);
  mask.diagonal().setZero();
  double pairs = static_cast<double>(n) * (n - 1);
  require(pairs > 0.0, Status::InvalidArgument,
          "dense_link_loss: need at least two nodes");
  return ad::scalar_mul(ad::sum(ad::hadamard(elem, ad::constant(mask))),
                        1.0 / pairs);
}

ad::NodePtr balanced_link_loss(const ad::NodePtr& embeddings,
                               const Matrix& adjacency, Index n_users,
                               int k_neg) {
  Index t = embeddings->rows();
  require(adjacency.rows() == t && adjacency.cols() == t,
          Status::ShapeMismatch, "balanced_link_loss: adjacency vs embeddings");
  require(n_users > 0 && n_users < t, Status::InvalidArgument,
          "balanced_link_loss: n_users must split the node range");
  require(k_neg >= 1, Status::InvalidArgument,
          "balanced_link_loss: k_neg must be at least 1");
  double e2 = adjacency.sum();  // each edge appears in both orientations
  require(e2 > 0.0, Status::EmptyGraph, "balanced_link_loss: no edges");
  Eigen::VectorXd deg = adjacency.rowwise().sum();
  Matrix cross = Matrix::Zero(t, t);
  cross.topRightCorner(n_users, t - n_users).setOnes();
  cross.bottomLeftCorner(t - n_users, n_users).setOnes();
  Matrix pos = adjacency.cwiseProduct(cross) / e2;
  // Degree-based noise distribution, exact expectation instead of sampling:
  // anchor weight d_a/E times negative probability d_b/E, halved because the
  // sum runs over both orientations of each unordered pair.
  Matrix neg = (deg * deg.transpose()).cwiseProduct(cross) *
               (2.0 * static_cast<double>(k_neg) / (e2 * e2));
  ad::NodePtr p = ad::matmul(embeddings, ad::transpose(embeddings));
  return ad::add(
      ad::sum(ad::hadamard(ad::constant(pos), ad::softplus(ad::neg(p)))),
      ad::sum(ad::hadamard(ad::constant(neg), ad::softplus(p))));
}

Matrix full_adjacency(const BipartiteGraph& graph) {
  Index t = graph.num_users + graph.num_items;
  Matrix a = Matrix::Zero(t, t);
  for (Index u = 0; u < graph.num_users; ++u)
    for (Index i : graph.user_adj[static_cast<std::size_t>(u)]) {
      a(u, graph.num_users + i) = 1.0;
      a(graph.num_users + i, u) = 1.0;
    }
  return a;
}

Matrix make_node_features(Index n_nodes, Index dim, std::uint64_t seed) {
  Rng rng = make_rng(seed, 7);
  return gaussian_matrix(n_nodes, dim, 1.0 / std::sqrt(static_cast<double>(dim)),
                         rng);
}

RelayModel train_relay(Backbone backbone, RelayDims dims,
                       const Matrix& adjacency, const Matrix& features,
                       Index n_users, int steps, double lr, std::uint64_t seed,
                       Matrix* out_embeddings) {
  RelayModel model = sample_theta(backbone, dims, seed);
  ad::NodePtr a = ad::constant(adjacency);
  ad::NodePtr x = ad::constant(features);
  std::vector<ad::NodePtr> theta = model.params.nodes();
  AdamState opt(theta);
  for (int s = 0; s < steps; ++s) {
    ad::NodePtr h = relay_forward(model, a, x);
    ad::NodePtr loss = balanced_link_loss(h, adjacency, n_users);
    std::vector<ad::NodePtr> g = ad::grad(loss, theta, false);
    std::vector<Matrix> gm;
    gm.reserve(g.size());
    for (const auto& node : g) gm.push_back(node->value);
    opt.step(theta, gm, lr);
  }
  if (out_embeddings)
    *out_embeddings = relay_forward(model, a, x)->value;
  return model;
}

}  // namespace demorec
