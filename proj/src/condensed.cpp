#include "condensed.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include <json.hpp>

namespace demorec {

namespace {

Matrix offdiag_mask(Index n) {
  Matrix m = Matrix::Ones(n, n);
  m.diagonal().setZero();
  return m;
}

void write_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  require(out.good(), Status::IoError, "cannot write '" + path + "'");
  out << std::setprecision(17);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << m(r, c);
    }
    out << '\n';
  }
  require(out.good(), Status::IoError, "write failed for '" + path + "'");
}

Matrix read_matrix(const std::string& path, Index rows, Index cols) {
  std::ifstream in(path);
  require(in.good(), Status::IoError, "cannot open '" + path + "'");
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      require(static_cast<bool>(in >> m(r, c)), Status::ParseError,
              "matrix '" + path + "' truncated");
  return m;
}

}  // namespace

BipartiteMasks make_masks(Index n_users, Index n_items) {
  require(n_users >= 1 && n_items >= 1, Status::InvalidArgument,
          "make_masks: both sides need at least one node");
  Index t = n_users + n_items;
  BipartiteMasks masks;
  masks.m_user = Matrix::Zero(t, t);
  masks.m_item = Matrix::Zero(t, t);
  masks.m_user.topLeftCorner(n_users, n_users).setOnes();
  masks.m_item.bottomRightCorner(n_items, n_items).setOnes();
  return masks;
}

CondensedGraph init_condensed(Index n_users, Index n_items, Index dim,
                              std::uint64_t seed, InitScheme scheme) {
  require(n_users >= 1 && n_items >= 1 && dim >= 1, Status::InvalidArgument,
          "init_condensed: sizes must be >= 1");
  CondensedGraph cg;
  cg.n_users = n_users;
  cg.n_items = n_items;
  cg.dim = dim;
  if (scheme == InitScheme::Zeros) {
    cg.emb_users = ad::param(Matrix::Zero(n_users, dim));
    cg.emb_items = ad::param(Matrix::Zero(n_items, dim));
    cg.transform = ad::param(Matrix::Identity(dim, dim));
    return cg;
  }
  double std = 1.0 / std::sqrt(static_cast<double>(dim));
  Rng r_u = make_rng(seed, 11);
  Rng r_i = make_rng(seed, 12);
  Rng r_w = make_rng(seed, 13);
  cg.emb_users = ad::param(gaussian_matrix(n_users, dim, std, r_u));
  cg.emb_items = ad::param(gaussian_matrix(n_items, dim, std, r_i));
  cg.transform = ad::param(Matrix::Identity(dim, dim) +
                           gaussian_matrix(dim, dim, 0.01, r_w));
  return cg;
}

CondensedGraph init_copy(const BipartiteGraph& graph, const Matrix& user_feat,
                         const Matrix& item_feat, double tau) {
  require(user_feat.rows() == graph.num_users &&
              item_feat.rows() == graph.num_items &&
              user_feat.cols() == item_feat.cols(),
          Status::ShapeMismatch, "init_copy: feature shapes vs graph");
  CondensedGraph cg;
  cg.n_users = graph.num_users;
  cg.n_items = graph.num_items;
  cg.dim = user_feat.cols();
  cg.tau = tau;
  cg.emb_users = ad::param(user_feat);
  cg.emb_items = ad::param(item_feat);
  cg.transform = ad::param(Matrix::Identity(cg.dim, cg.dim));
  cg.copy_of_original = true;
  cg.original_edges = graph.edge_list();
  return cg;
}

ad::NodePtr soft_adjacency(const CondensedGraph& cg, PairMode mode) {
  require(cg.tau > 0.0 && cg.tau < 1.0, Status::InvalidArgument,
          "soft_adjacency: tau must lie in (0,1)");
  ad::NodePtr z = ad::concat_rows(cg.emb_users, cg.emb_items);
  ad::NodePtr scores = ad::matmul(ad::matmul(z, cg.transform), ad::transpose(z));
  ad::NodePtr s = ad::sigmoid(scores);
  Index t = cg.total_nodes();
  Matrix mask = offdiag_mask(t);
  if (mode == PairMode::CrossOnly) {
    mask.topLeftCorner(cg.n_users, cg.n_users).setZero();
    mask.bottomRightCorner(cg.n_items, cg.n_items).setZero();
  }
  return ad::hadamard(s, ad::constant(mask));
}

ad::NodePtr straight_through_adjacency(const ad::NodePtr& soft, double tau) {
  Matrix hard = hard_adjacency(soft->value, tau);
  // value = hard, gradient = d(soft); the binarization residual rides along
  // as a constant.
  return ad::add(soft, ad::constant(hard - soft->value));
}

Matrix hard_adjacency(const Matrix& soft, double tau) {
  require(soft.rows() == soft.cols(), Status::ShapeMismatch,
          "hard_adjacency: soft matrix must be square");
  require(tau > 0.0 && tau < 1.0, Status::InvalidArgument,
          "hard_adjacency: tau must lie in (0,1)");
  Index t = soft.rows();
  Matrix a = Matrix::Zero(t, t);
  for (Index i = 0; i < t; ++i)
    for (Index j = 0; j < t; ++j)
      if (i != j && (soft(i, j) >= tau || soft(j, i) >= tau)) a(i, j) = 1.0;
  return a;
}

std::vector<std::pair<Index, Index>> hard_cross_edges(const Matrix& soft,
                                                      double tau,
                                                      Index n_users,
                                                      Index n_items) {
  require(soft.rows() == n_users + n_items, Status::ShapeMismatch,
          "hard_cross_edges: size mismatch");
  std::vector<std::pair<Index, Index>> edges;
  for (Index u = 0; u < n_users; ++u)
    for (Index i = 0; i < n_items; ++i) {
      Index j = n_users + i;
      if (soft(u, j) >= tau || soft(j, u) >= tau) edges.emplace_back(u, i);
    }
  return edges;
}

std::int64_t count_intra_edges(const Matrix& hard, Index n_users) {
  std::int64_t count = 0;
  Index t = hard.rows();
  for (Index i = 0; i < t; ++i)
    for (Index j = i + 1; j < t; ++j) {
      bool intra = (i < n_users) == (j < n_users);
      if (intra && hard(i, j) != 0.0) ++count;
    }
  return count;
}

ad::NodePtr bsl(const ad::NodePtr& soft, double lambda,
                const BipartiteMasks& masks) {
  require(lambda >= 0.0, Status::InvalidArgument, "bsl: lambda must be >= 0");
  ad::NodePtr mu = ad::constant(masks.m_user);
  ad::NodePtr mi = ad::constant(masks.m_item);
  ad::NodePtr term = ad::add(ad::frobenius_sq(ad::hadamard(soft, mu)),
                             ad::frobenius_sq(ad::hadamard(soft, mi)));
  return ad::scalar_mul(term, lambda);
}

double bsl_value(const Matrix& soft, double lambda,
                 const BipartiteMasks& masks) {
  double t = soft.cwiseProduct(masks.m_user).squaredNorm() +
             soft.cwiseProduct(masks.m_item).squaredNorm();
  return lambda * t;
}

Matrix bsl_grad_analytic(const Matrix& soft, double lambda,
                         const BipartiteMasks& masks) {
  return 2.0 * lambda *
         soft.cwiseProduct(masks.m_user + masks.m_item);
}

double bsl_laplacian(const CondensedGraph& cg, const Matrix& soft,
                     double lambda) {
  require(soft.rows() == cg.total_nodes(), Status::ShapeMismatch,
          "bsl_laplacian: soft size vs condensed graph");
  // Intra blocks are symmetrized before building the Laplacian; the intra
  // relation is undirected even though sigma(z_i^T W z_j) is not symmetric
  // for general W. tr(X^T L X) then equals sum_{i<j} w_ij ||x_i - x_j||^2.
  auto term = [&](const Matrix& block, const Matrix& feat) {
    Matrix w = 0.5 * (block + block.transpose());
    Matrix lap = Matrix(w.rowwise().sum().asDiagonal()) - w;
    return (feat.transpose() * lap * feat).trace();
  };
  Matrix su = soft.topLeftCorner(cg.n_users, cg.n_users);
  Matrix si = soft.bottomRightCorner(cg.n_items, cg.n_items);
  return lambda * (term(su, cg.emb_users->value) + term(si, cg.emb_items->value));
}

double intra_soft_mass(const Matrix& soft, Index n_users) {
  Index t = soft.rows();
  Index n_items = t - n_users;
  double total = soft.topLeftCorner(n_users, n_users).sum() +
                 soft.bottomRightCorner(n_items, n_items).sum();
  double pairs = static_cast<double>(n_users) * (n_users - 1) +
                 static_cast<double>(n_items) * (n_items - 1);
  return pairs > 0.0 ? total / pairs : 0.0;
}

void export_condensed(const CondensedGraph& cg, const CondensedMeta& meta,
                      const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, Status::IoError, "cannot create directory '" + dir + "'");

  write_matrix(dir + "/embeddings_users", cg.emb_users->value);
  write_matrix(dir + "/embeddings_items", cg.emb_items->value);
  write_matrix(dir + "/transform", cg.transform->value);

  std::vector<std::pair<Index, Index>> cross;
  std::int64_t intra = 0;
  if (cg.copy_of_original) {
    cross = cg.original_edges;
  } else {
    Matrix soft = soft_adjacency(cg)->value;
    cross = hard_cross_edges(soft, cg.tau, cg.n_users, cg.n_items);
    intra = count_intra_edges(hard_adjacency(soft, cg.tau), cg.n_users);
  }
  {
    std::string path = dir + "/adjacency_edgelist";
    std::ofstream out(path);
    require(out.good(), Status::IoError, "cannot write '" + path + "'");
    for (const auto& [u, i] : cross) out << u << '\t' << i << '\n';
    require(out.good(), Status::IoError, "write failed for '" + path + "'");
  }
  nlohmann::json j;
  j["n_users"] = cg.n_users;
  j["n_items"] = cg.n_items;
  j["dim"] = cg.dim;
  j["tau"] = cg.tau;
  j["lambda"] = meta.lambda;
  j["beta"] = meta.beta;
  j["seed"] = meta.seed;
  j["copy_of_original"] = cg.copy_of_original;
  j["cross_edges"] = cross.size();
  j["intra_edges"] = intra;
  std::ofstream out(dir + "/meta.json");
  require(out.good(), Status::IoError, "cannot write meta.json in '" + dir + "'");
  out << j.dump(2) << '\n';
}

LoadedCondensed load_condensed(const std::string& dir) {
  std::ifstream meta_in(dir + "/meta.json");
  require(meta_in.good(), Status::IoError, "cannot open '" + dir + "/meta.json'");
  nlohmann::json j;
  try {
    meta_in >> j;
  } catch (const std::exception& e) {
    throw Error(Status::ParseError, std::string("meta.json: ") + e.what());
  }

  LoadedCondensed out;
  CondensedGraph& cg = out.graph;
  cg.n_users = j.at("n_users").get<Index>();
  cg.n_items = j.at("n_items").get<Index>();
  cg.dim = j.at("dim").get<Index>();
  cg.tau = j.at("tau").get<double>();
  cg.copy_of_original = j.value("copy_of_original", false);
  out.meta.lambda = j.at("lambda").get<double>();
  out.meta.beta = j.at("beta").get<double>();
  out.meta.seed = j.at("seed").get<std::uint64_t>();

  cg.emb_users =
      ad::param(read_matrix(dir + "/embeddings_users", cg.n_users, cg.dim));
  cg.emb_items =
      ad::param(read_matrix(dir + "/embeddings_items", cg.n_items, cg.dim));
  cg.transform = ad::param(read_matrix(dir + "/transform", cg.dim, cg.dim));

  std::ifstream in(dir + "/adjacency_edgelist");
  require(in.good(), Status::IoError,
          "cannot open '" + dir + "/adjacency_edgelist'");
  Index u, i;
  while (in >> u >> i) {
    require(u >= 0 && u < cg.n_users && i >= 0 && i < cg.n_items,
            Status::ParseError, "adjacency_edgelist: index out of range");
    out.cross_edges.emplace_back(u, i);
  }
  if (cg.copy_of_original) cg.original_edges = out.cross_edges;
  return out;
}

}  // namespace demorec
