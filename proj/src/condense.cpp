#include "condense.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "optim.hpp"

namespace demorec {

namespace {

constexpr double kZeroNorm = 1e-12;

Index ceil_size(double alpha, Index n) {
  // Nudge before the ceil so 0.8*40 lands on 32, not 33.
  auto s = static_cast<Index>(std::ceil(alpha * static_cast<double>(n) - 1e-9));
  return std::clamp<Index>(s, 1, n);
}

}  // namespace

MatchStrategy parse_strategy(const std::string& name) {
  std::string n;
  for (char c : name) n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (n == "gradient") return MatchStrategy::Gradient;
  if (n == "trajectory") return MatchStrategy::Trajectory;
  if (n == "distribution") return MatchStrategy::Distribution;
  throw Error(Status::InvalidArgument, "unknown matching strategy '" + name + "'");
}

std::string strategy_name(MatchStrategy s) {
  switch (s) {
    case MatchStrategy::Gradient: return "gradient";
    case MatchStrategy::Trajectory: return "trajectory";
    case MatchStrategy::Distribution: return "distribution";
  }
  return "?";
}

void CondensationConfig::validate() const {
  require(alpha > 0.0 && alpha <= 1.0, Status::InvalidArgument,
          "alpha must lie in (0,1]");
  require(lambda >= 0.0, Status::InvalidArgument, "lambda must be >= 0");
  require(beta >= 0.0, Status::InvalidArgument, "beta must be >= 0");
  require(tau > 0.0 && tau < 1.0, Status::InvalidArgument,
          "tau must lie in (0,1)");
  require(t_inner >= 1, Status::InvalidArgument, "t_inner must be >= 1");
  require(theta_samples >= 1, Status::InvalidArgument,
          "theta_samples must be >= 1");
  require(outer_epochs >= 0, Status::InvalidArgument,
          "outer_epochs must be >= 0");
  require(dim >= 1 && hidden >= 1 && relay_layers >= 1, Status::InvalidArgument,
          "dims must be >= 1");
  require(lr_outer > 0.0 && lr_inner >= 0.0, Status::InvalidArgument,
          "learning rates must be positive (inner may be 0)");
  if (copy_init)
    require(alpha == 1.0 && outer_epochs == 0, Status::InvalidArgument,
            "copy_init requires alpha=1 and outer_epochs=0");
  if (strategy == MatchStrategy::Trajectory) {
    require(expert_every >= 1 && expert_delta >= 1 && t_student >= 1,
            Status::InvalidArgument, "bad trajectory-matching knobs");
    require(expert_steps / expert_every >= expert_delta, Status::InvalidArgument,
            "expert trajectory too short for the requested delta");
  }
}

double cosine_distance(const std::vector<Matrix>& a,
                       const std::vector<Matrix>& b) {
  require(a.size() == b.size(), Status::ShapeMismatch,
          "cosine_distance: structure mismatch");
  double total = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    require(a[l].rows() == b[l].rows() && a[l].cols() == b[l].cols(),
            Status::ShapeMismatch, "cosine_distance: tensor shape mismatch");
    double na = a[l].norm(), nb = b[l].norm();
    if (na < kZeroNorm && nb < kZeroNorm) continue;
    if (na < kZeroNorm || nb < kZeroNorm) {
      total += 1.0;
      continue;
    }
    total += 1.0 - a[l].cwiseProduct(b[l]).sum() / (na * nb);
  }
  return total;
}

ad::NodePtr match_distance(const std::vector<ad::NodePtr>& g_cond,
                           const std::vector<Matrix>& g_orig,
                           MatchDistance distance) {
  require(g_cond.size() == g_orig.size(), Status::ShapeMismatch,
          "match_distance: structure mismatch");
  ad::NodePtr total = ad::scalar_const(0.0);
  for (std::size_t l = 0; l < g_cond.size(); ++l) {
    require(g_cond[l]->rows() == g_orig[l].rows() &&
                g_cond[l]->cols() == g_orig[l].cols(),
            Status::ShapeMismatch, "match_distance: tensor shape mismatch");
    if (distance == MatchDistance::L2) {
      total = ad::add(total, ad::frobenius_sq(ad::sub(
                                 g_cond[l], ad::constant(g_orig[l]))));
      continue;
    }
    double na = g_cond[l]->value.norm(), nb = g_orig[l].norm();
    if (na < kZeroNorm && nb < kZeroNorm) continue;
    if (na < kZeroNorm || nb < kZeroNorm) {
      // Maximal mismatch with no usable direction; a constant carries no
      // gradient, matching the undefined derivative at a zero gradient.
      total = ad::add(total, ad::scalar_const(1.0));
      continue;
    }
    ad::NodePtr d = ad::dot(g_cond[l], ad::constant(g_orig[l]));
    ad::NodePtr denom =
        ad::scalar_mul(ad::sqrt_(ad::frobenius_sq(g_cond[l])), nb);
    total = ad::add(total, ad::one_minus(ad::cwise_div(d, denom)));
  }
  return total;
}

ad::NodePtr gradient_match_loss(const RelayModel& model,
                                const std::vector<ad::NodePtr>& theta,
                                const ad::NodePtr& a_orig,
                                const ad::NodePtr& x_orig,
                                const ad::NodePtr& s_cond,
                                const ad::NodePtr& z_cond,
                                MatchDistance distance,
                                std::vector<ad::NodePtr>* out_grad_cond) {
  ad::NodePtr h_c = relay_forward(model, s_cond, z_cond, &theta);
  ad::NodePtr l_c = dense_link_loss(h_c, s_cond);
  std::vector<ad::NodePtr> g_c = ad::grad(l_c, theta, true);
  if (out_grad_cond) *out_grad_cond = g_c;

  // Same parameter values, but as fresh leaves: the original-side gradient
  // is a constant target.
  std::vector<ad::NodePtr> theta_leaf;
  theta_leaf.reserve(theta.size());
  for (const auto& t : theta) theta_leaf.push_back(ad::param(t->value));
  ad::NodePtr h_o = relay_forward(model, a_orig, x_orig, &theta_leaf);
  ad::NodePtr l_o = dense_link_loss(h_o, a_orig);
  std::vector<ad::NodePtr> g_o_nodes = ad::grad(l_o, theta_leaf, false);
  std::vector<Matrix> g_o;
  g_o.reserve(g_o_nodes.size());
  for (const auto& g : g_o_nodes) g_o.push_back(g->value);

  return match_distance(g_c, g_o, distance);
}

ad::NodePtr distribution_match_loss(const RelayModel& model,
                                    const ad::NodePtr& a_orig,
                                    const ad::NodePtr& x_orig,
                                    Index orig_users,
                                    const ad::NodePtr& s_cond,
                                    const ad::NodePtr& z_cond,
                                    Index cond_users, bool second_moment) {
  // Theta stays fixed here; freeze it so neither side grows parameter
  // subgraphs.
  std::vector<ad::NodePtr> theta_const;
  for (const auto& [_, p] : model.params.items())
    theta_const.push_back(ad::constant(p->value));
  ad::NodePtr h_o = relay_forward(model, a_orig, x_orig, &theta_const);
  ad::NodePtr h_c = relay_forward(model, s_cond, z_cond, &theta_const);

  auto block_mean = [](const ad::NodePtr& h, Index r0, Index r1) {
    return ad::scalar_mul(ad::col_sum(ad::row_slice(h, r0, r1)),
                          1.0 / static_cast<double>(r1 - r0));
  };
  auto moment_gap = [&](const ad::NodePtr& ho, const ad::NodePtr& hc) {
    ad::NodePtr gap_u = ad::sub(block_mean(hc, 0, cond_users),
                                ad::constant(block_mean(ho, 0, orig_users)->value));
    ad::NodePtr gap_i =
        ad::sub(block_mean(hc, cond_users, hc->rows()),
                ad::constant(block_mean(ho, orig_users, ho->rows())->value));
    return ad::add(ad::frobenius_sq(gap_u), ad::frobenius_sq(gap_i));
  };
  ad::NodePtr loss = moment_gap(h_o, h_c);
  if (second_moment)
    loss = ad::add(loss, moment_gap(ad::square(h_o), ad::square(h_c)));
  return loss;
}

std::vector<std::vector<Matrix>> expert_trajectory(const RelayModel& model,
                                                   const ad::NodePtr& a_orig,
                                                   const ad::NodePtr& x_orig,
                                                   int steps, int every,
                                                   double lr) {
  require(steps >= 0 && every >= 1, Status::InvalidArgument,
          "expert_trajectory: bad steps/every");
  std::vector<Matrix> values;
  for (const auto& [_, p] : model.params.items()) values.push_back(p->value);

  std::vector<std::vector<Matrix>> snapshots;
  snapshots.push_back(values);
  for (int s = 1; s <= steps; ++s) {
    std::vector<ad::NodePtr> theta;
    theta.reserve(values.size());
    for (const auto& v : values) theta.push_back(ad::param(v));
    ad::NodePtr h = relay_forward(model, a_orig, x_orig, &theta);
    ad::NodePtr loss = dense_link_loss(h, a_orig);
    std::vector<ad::NodePtr> g = ad::grad(loss, theta, false);
    for (std::size_t l = 0; l < values.size(); ++l)
      values[l] -= lr * g[l]->value;
    if (s % every == 0) snapshots.push_back(values);
  }
  return snapshots;
}

ad::NodePtr trajectory_match_loss(const RelayModel& model,
                                  const std::vector<std::vector<Matrix>>& experts,
                                  std::size_t segment, int delta,
                                  const ad::NodePtr& s_cond,
                                  const ad::NodePtr& z_cond, int t_student,
                                  double lr_student) {
  require(segment + static_cast<std::size_t>(delta) < experts.size(),
          Status::InvalidArgument, "trajectory_match_loss: segment out of range");
  const auto& start = experts[segment];
  const auto& target = experts[segment + static_cast<std::size_t>(delta)];

  double den = 0.0;
  for (std::size_t l = 0; l < start.size(); ++l)
    den += (start[l] - target[l]).squaredNorm();
  require(den >= 1e-12, Status::InvalidArgument,
          "trajectory_match_loss: degenerate expert segment");

  std::vector<ad::NodePtr> theta;
  theta.reserve(start.size());
  for (const auto& v : start) theta.push_back(ad::param(v));
  for (int t = 0; t < t_student; ++t) {
    ad::NodePtr h = relay_forward(model, s_cond, z_cond, &theta);
    ad::NodePtr loss = dense_link_loss(h, s_cond);
    std::vector<ad::NodePtr> g = ad::grad(loss, theta, true);
    for (std::size_t l = 0; l < theta.size(); ++l)
      theta[l] = ad::sub(theta[l], ad::scalar_mul(g[l], lr_student));
  }
  ad::NodePtr num = ad::scalar_const(0.0);
  for (std::size_t l = 0; l < theta.size(); ++l)
    num = ad::add(num,
                  ad::frobenius_sq(ad::sub(theta[l], ad::constant(target[l]))));
  return ad::scalar_mul(num, 1.0 / den);
}

CondenseResult condense(const CondensationConfig& config,
                        const BipartiteGraph& graph) {
  config.validate();
  require(graph.num_edges > 0, Status::EmptyGraph, "condense: empty graph");

  Index n_users = ceil_size(config.alpha, graph.num_users);
  Index n_items = ceil_size(config.alpha, graph.num_items);
  Index total_orig = graph.num_users + graph.num_items;
  Matrix x_orig_m = make_node_features(total_orig, config.dim, config.seed);

  CondenseResult result;
  if (config.copy_init) {
    result.graph = init_copy(graph, x_orig_m.topRows(graph.num_users),
                             x_orig_m.bottomRows(graph.num_items), config.tau);
    return result;
  }

  CondensedGraph cg =
      init_condensed(n_users, n_items, config.dim, config.seed,
                     InitScheme::Gaussian);
  // Ground the embedding tables in the original graph: each representative
  // is seated on the one-step aggregated features of a sampled real node
  // (same symmetric normalization the relay uses). Raw feature rows are
  // mutually near-orthogonal noise, so no bilinear form over them can
  // express link structure; aggregates of neighbouring nodes are correlated,
  // which makes the structure expressible and keeps every representative
  // anchored to a real node's neighbourhood.
  Matrix a_full = full_adjacency(graph);
  Matrix x_prop;
  {
    Matrix a_tilde =
        a_full + Matrix::Identity(total_orig, total_orig);
    Eigen::VectorXd d_inv_sqrt =
        a_tilde.rowwise().sum().array().pow(-0.5).matrix();
    x_prop = d_inv_sqrt.asDiagonal() * a_tilde * d_inv_sqrt.asDiagonal() *
             x_orig_m;
  }
  {
    std::vector<Index> pick_u(static_cast<std::size_t>(graph.num_users));
    std::vector<Index> pick_i(static_cast<std::size_t>(graph.num_items));
    std::iota(pick_u.begin(), pick_u.end(), Index{0});
    std::iota(pick_i.begin(), pick_i.end(), Index{0});
    Rng r_su = make_rng(config.seed, 14);
    Rng r_si = make_rng(config.seed, 15);
    std::shuffle(pick_u.begin(), pick_u.end(), r_su);
    std::shuffle(pick_i.begin(), pick_i.end(), r_si);
    for (Index j = 0; j < n_users; ++j)
      cg.emb_users->value.row(j) =
          x_prop.row(pick_u[static_cast<std::size_t>(j)]);
    for (Index j = 0; j < n_items; ++j)
      cg.emb_items->value.row(j) = x_prop.row(
          graph.num_users + pick_i[static_cast<std::size_t>(j)]);
  }
  // Pre-fit the bilinear transform to the original link pattern over those
  // aggregated vectors. A dim x dim form cannot memorize individual edges;
  // it captures the coarse who-links-to-whom structure, so the initial soft
  // adjacency already reconstructs the sample's neighbourhoods and the outer
  // loop refines a structured start instead of a uniform one. Fitted scores
  // settle near the local link density, so downstream thresholds should sit
  // below that level.
  {
    Index t = total_orig;
    Matrix offdiag = Matrix::Ones(t, t);
    offdiag.diagonal().setZero();
    double pairs = static_cast<double>(t) * static_cast<double>(t - 1);
    ad::NodePtr xc = ad::constant(x_prop);
    ad::NodePtr tgt = ad::constant(a_full);
    ad::NodePtr od = ad::constant(offdiag);
    // Aggregated rows have small norms, so the fitted form needs large
    // entries to reach logit scale; the step size reflects that.
    std::vector<ad::NodePtr> wonly{cg.transform};
    AdamState fit(wonly);
    for (int step = 0; step < 500; ++step) {
      ad::NodePtr p =
          ad::matmul(ad::matmul(xc, cg.transform), ad::transpose(xc));
      ad::NodePtr elem =
          ad::add(ad::hadamard(tgt, ad::softplus(ad::neg(p))),
                  ad::hadamard(ad::one_minus(tgt), ad::softplus(p)));
      ad::NodePtr loss =
          ad::scalar_mul(ad::sum(ad::hadamard(elem, od)), 1.0 / pairs);
      std::vector<ad::NodePtr> g = ad::grad(loss, wonly, false);
      fit.step(wonly, {g[0]->value}, 0.25);
    }
  }
  cg.tau = config.tau;
  BipartiteMasks masks = make_masks(n_users, n_items);
  ad::NodePtr a_orig = ad::constant(a_full);
  ad::NodePtr x_orig = ad::constant(x_orig_m);
  RelayDims dims{config.dim, config.hidden, config.relay_layers};

  // One fixed theta draw per sample slot, reused every epoch: the reported
  // trajectory is then the same Monte-Carlo estimator throughout, so
  // epoch-to-epoch changes reflect the condensed parameters, not resampling.
  std::vector<std::uint64_t> theta_seeds;
  for (int s = 0; s < config.theta_samples; ++s)
    theta_seeds.push_back(mix_seed(config.seed, 500 + static_cast<std::uint64_t>(s)));

  std::vector<std::vector<Matrix>> experts;
  if (config.strategy == MatchStrategy::Trajectory) {
    RelayModel expert_model =
        sample_theta(config.backbone, dims, theta_seeds[0]);
    experts = expert_trajectory(expert_model, a_orig, x_orig,
                                config.expert_steps, config.expert_every,
                                config.lr_inner);
  }
  Rng segment_rng = make_rng(config.seed, 600);

  std::vector<ad::NodePtr> params = cg.params();
  AdamState adam(params);
  MatchReport& report = result.report;

  for (int epoch = 0; epoch < config.outer_epochs; ++epoch) {
    std::vector<Matrix> snapshot;
    for (const auto& p : params) snapshot.push_back(p->value);
    try {
      ad::NodePtr s_soft = soft_adjacency(cg, config.pair_mode);
      ad::NodePtr s_relay =
          config.straight_through
              ? straight_through_adjacency(s_soft, config.tau)
              : s_soft;
      ad::NodePtr z = ad::concat_rows(cg.emb_users, cg.emb_items);
      double intra = intra_soft_mass(s_soft->value, n_users);

      ad::NodePtr l_bip_node =
          bsl(s_soft, config.bsl_on ? config.lambda : 0.0, masks);
      std::vector<ad::NodePtr> g_bip = ad::grad(l_bip_node, params, false);
      double l_bip_val = l_bip_node->scalar();

      std::vector<Matrix> g_match;
      for (const auto& p : params)
        g_match.push_back(Matrix::Zero(p->rows(), p->cols()));
      double l_match_total = 0.0;
      int effective = 0;

      for (int s = 0; s < config.theta_samples; ++s) {
        RelayModel model = sample_theta(config.backbone, dims, theta_seeds[static_cast<std::size_t>(s)]);
        ad::NodePtr sample_loss;
        switch (config.strategy) {
          case MatchStrategy::Gradient: {
            std::vector<ad::NodePtr> theta = model.params.nodes();
            sample_loss = ad::scalar_const(0.0);
            for (int t = 0; t < config.t_inner; ++t) {
              std::vector<ad::NodePtr> g_c;
              ad::NodePtr term =
                  gradient_match_loss(model, theta, a_orig, x_orig, s_relay, z,
                                      config.distance, &g_c);
              sample_loss = ad::add(sample_loss, term);
              if (t + 1 < config.t_inner)
                for (std::size_t l = 0; l < theta.size(); ++l)
                  theta[l] = ad::sub(theta[l],
                                     ad::scalar_mul(g_c[l], config.lr_inner));
            }
            break;
          }
          case MatchStrategy::Distribution:
            sample_loss = distribution_match_loss(
                model, a_orig, x_orig, graph.num_users, s_relay, z, n_users,
                config.second_moment);
            break;
          case MatchStrategy::Trajectory: {
            std::size_t max_seg =
                experts.size() - 1 - static_cast<std::size_t>(config.expert_delta);
            std::uniform_int_distribution<std::size_t> pick(0, max_seg);
            std::size_t segment = pick(segment_rng);
            try {
              sample_loss = trajectory_match_loss(
                  model, experts, segment, config.expert_delta, s_relay, z,
                  config.t_student, config.lr_inner);
            } catch (const Error& e) {
              if (e.code() == Status::InvalidArgument) {
                ++report.skipped_samples;
                continue;
              }
              throw;
            }
            break;
          }
        }
        std::vector<ad::NodePtr> g_s = ad::grad(sample_loss, params, false);
        for (std::size_t l = 0; l < params.size(); ++l)
          g_match[l] += g_s[l]->value;
        l_match_total += sample_loss->scalar();
        ++effective;
      }

      double l_match_mean = effective ? l_match_total / effective : 0.0;
      std::vector<Matrix> total_g;
      for (std::size_t l = 0; l < params.size(); ++l) {
        Matrix g = g_bip[l]->value;
        if (effective)
          g += (config.beta / static_cast<double>(effective)) * g_match[l];
        total_g.push_back(std::move(g));
      }
      adam.step(params, total_g, config.lr_outer);

      report.l_match.push_back(l_match_mean);
      report.l_bip.push_back(l_bip_val);
      report.l_cond.push_back(l_bip_val + config.beta * l_match_mean);
      report.intra_mass.push_back(intra);
    } catch (const Error& e) {
      if (e.code() != Status::NotFinite) throw;
      for (std::size_t l = 0; l < params.size(); ++l)
        params[l]->value = snapshot[l];
      report.diverged = true;
      break;
    }
  }

  result.graph = std::move(cg);
  return result;
}

double match_probe(const CondensedGraph& cg, const BipartiteGraph& graph,
                   const CondensationConfig& config,
                   const std::vector<std::uint64_t>& probe_seeds) {
  require(!probe_seeds.empty(), Status::InvalidArgument,
          "match_probe: need at least one probe seed");
  ad::NodePtr a_orig = ad::constant(full_adjacency(graph));
  ad::NodePtr x_orig = ad::constant(
      make_node_features(graph.num_users + graph.num_items, config.dim,
                         config.seed));
  ad::NodePtr s_cond = ad::constant(soft_adjacency(cg, config.pair_mode)->value);
  ad::NodePtr z_cond =
      ad::constant(ad::concat_rows(cg.emb_users, cg.emb_items)->value);
  RelayDims dims{config.dim, config.hidden, config.relay_layers};

  double total = 0.0;
  for (std::uint64_t seed : probe_seeds) {
    RelayModel model = sample_theta(config.backbone, dims, seed);
    std::vector<ad::NodePtr> theta;
    for (const auto& [_, p] : model.params.items())
      theta.push_back(ad::param(p->value));
    for (int t = 0; t < config.t_inner; ++t) {
      std::vector<ad::NodePtr> g_c;
      ad::NodePtr term = gradient_match_loss(model, theta, a_orig, x_orig,
                                             s_cond, z_cond, config.distance,
                                             &g_c);
      total += term->scalar();
      if (t + 1 < config.t_inner) {
        std::vector<ad::NodePtr> next;
        for (std::size_t l = 0; l < theta.size(); ++l)
          next.push_back(
              ad::param(theta[l]->value - config.lr_inner * g_c[l]->value));
        theta = std::move(next);
      }
    }
  }
  return total / static_cast<double>(probe_seeds.size());
}

void write_match_report_csv(const MatchReport& report, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), Status::IoError, "cannot write '" + path + "'");
  out << "epoch,L_match,L_bip,L_cond,intra_mass\n";
  out.precision(17);
  for (std::size_t e = 0; e < report.l_match.size(); ++e)
    out << e << ',' << report.l_match[e] << ',' << report.l_bip[e] << ','
        << report.l_cond[e] << ',' << report.intra_mass[e] << '\n';
  require(out.good(), Status::IoError, "write failed for '" + path + "'");
}

}  // namespace demorec
