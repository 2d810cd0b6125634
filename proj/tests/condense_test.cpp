#include <doctest.h>

#include <cmath>
#include <vector>

#include "condense.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace demorec;
using testutil::error_code_of;
using testutil::error_message_of;
using testutil::max_grad_rel_err;
using testutil::TempDir;

namespace {

BipartiteGraph toy_graph(std::uint64_t seed, Index nu, Index ni,
                         double p_in = 0.4) {
  SyntheticConfig sc;
  sc.n_users = nu;
  sc.n_items = ni;
  sc.blocks = 2;
  sc.p_in = p_in;
  sc.p_out = 0.05;
  sc.seed = seed;
  sc.min_user_degree = 1;
  sc.min_item_degree = 1;
  return BipartiteGraph::from_log(synth_block_log(sc));
}

Matrix gauss(Index r, Index c, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  return gaussian_matrix(r, c, 1.0, rng);
}

}  // namespace

TEST_SUITE("condense") {

TEST_CASE("cosine distance: identity, scaling, orthogonality, zeros") {
  Matrix a = gauss(3, 4, 1);
  CHECK(cosine_distance({a}, {a}) < 1e-12);
  CHECK(cosine_distance({a}, {Matrix(2.0 * a)}) < 1e-12);

  Matrix u = Matrix::Zero(2, 2), v = Matrix::Zero(2, 2);
  u(0, 0) = 1.0;
  v(1, 1) = 1.0;
  CHECK(cosine_distance({u}, {v}) == doctest::Approx(1.0));
  CHECK(cosine_distance({u, u}, {v, v}) == doctest::Approx(2.0));

  Matrix z = Matrix::Zero(2, 2);
  CHECK(cosine_distance({z}, {z}) == 0.0);          // both sides vanish
  CHECK(cosine_distance({z}, {u}) == doctest::Approx(1.0));  // one side does

  CHECK(error_code_of([&] { cosine_distance({a}, {a, a}); }) ==
        Status::ShapeMismatch);
  CHECK(error_code_of([&] {
          cosine_distance({a}, {Matrix(a.transpose())});
        }) == Status::ShapeMismatch);
}

TEST_CASE("differentiable distance agrees with the value forms") {
  Matrix a = gauss(3, 3, 2), b = gauss(3, 3, 3);
  Matrix c = gauss(2, 4, 4), d = gauss(2, 4, 5);
  auto an = ad::constant(a);
  auto cn = ad::constant(c);

  double cos_node =
      match_distance({an, cn}, {b, d}, MatchDistance::Cosine)->scalar();
  CHECK(cos_node == doctest::Approx(cosine_distance({a, c}, {b, d}))
                        .epsilon(1e-12));

  double l2_node = match_distance({an, cn}, {b, d}, MatchDistance::L2)->scalar();
  double l2_expect = (a - b).squaredNorm() + (c - d).squaredNorm();
  CHECK(l2_node == doctest::Approx(l2_expect).epsilon(1e-12));
}

TEST_CASE("matching gradients on a verbatim copy costs nothing") {
  BipartiteGraph g = toy_graph(3, 6, 6);
  Matrix x = make_node_features(g.num_users + g.num_items, 6, 3);
  RelayDims dims{6, 5, 2};
  auto model = sample_theta(Backbone::GCN, dims, 4);
  auto theta = model.params.nodes();
  auto a = ad::constant(full_adjacency(g));
  auto xf = ad::constant(x);

  auto loss =
      gradient_match_loss(model, theta, a, xf, a, xf, MatchDistance::Cosine);
  CHECK(loss->scalar() < 1e-10);
}

TEST_CASE("a zero matching weight leaves only the structure gradient") {
  BipartiteGraph g = toy_graph(7, 5, 6);
  auto cg = init_condensed(4, 4, 6, 8, InitScheme::Gaussian);
  auto masks = make_masks(4, 4);
  Matrix x = make_node_features(g.num_users + g.num_items, 6, 8);
  RelayDims dims{6, 5, 2};
  auto model = sample_theta(Backbone::GCN, dims, 9);
  auto theta = model.params.nodes();
  auto a = ad::constant(full_adjacency(g));
  auto xf = ad::constant(x);

  auto s = soft_adjacency(cg);
  auto z = ad::concat_rows(cg.emb_users, cg.emb_items);
  auto match = gradient_match_loss(model, theta, a, xf, s, z,
                                   MatchDistance::Cosine);
  auto combined = ad::add(bsl(s, 0.3, masks), ad::scalar_mul(match, 0.0));
  auto g_combined = ad::grad(combined, cg.params(), false);

  auto s2 = soft_adjacency(cg);
  auto g_bsl = ad::grad(bsl(s2, 0.3, masks), cg.params(), false);
  for (std::size_t l = 0; l < g_bsl.size(); ++l)
    CHECK(g_combined[l]->value == g_bsl[l]->value);
}

TEST_CASE("matching meta-gradient w.r.t. the condensed embeddings passes differencing") {
  BipartiteGraph g = toy_graph(11, 6, 6);
  Index total = g.num_users + g.num_items;
  Matrix x = make_node_features(total, 5, 11);
  RelayDims dims{5, 4, 2};
  auto model = sample_theta(Backbone::GCN, dims, 12);
  auto theta = model.params.nodes();
  auto a = ad::constant(full_adjacency(g));
  auto xf = ad::constant(x);
  auto cg = init_condensed(4, 4, 5, 13, InitScheme::Gaussian);

  auto loss_from = [&](const ad::NodePtr& eu) {
    CondensedGraph probe = cg;
    probe.emb_users = eu;
    auto s = soft_adjacency(probe);
    auto z = ad::concat_rows(probe.emb_users, probe.emb_items);
    return gradient_match_loss(model, theta, a, xf, s, z,
                               MatchDistance::Cosine);
  };

  Matrix analytic =
      ad::grad(loss_from(cg.emb_users), {cg.emb_users}, false)[0]->value;
  auto numeric = [&](const Matrix& v) {
    return loss_from(ad::constant(v))->scalar();
  };
  CHECK(max_grad_rel_err(numeric, cg.emb_users->value, analytic, 1e-3, 1e-6) <
        1e-4);
}

TEST_CASE("distribution matching vanishes on a copy and reacts to a shift") {
  BipartiteGraph g = toy_graph(17, 5, 3);
  Matrix x = make_node_features(8, 4, 17);
  RelayDims dims{4, 4, 2};
  auto model = sample_theta(Backbone::GCN, dims, 18);
  auto a = ad::constant(full_adjacency(g));
  auto xf = ad::constant(x);

  double copy = distribution_match_loss(model, a, xf, g.num_users, a, xf,
                                        g.num_users, false)
                    ->scalar();
  CHECK(copy == 0.0);

  auto shifted = ad::constant(Matrix(x.array() + 0.3));
  double moved = distribution_match_loss(model, a, xf, g.num_users, a, shifted,
                                         g.num_users, false)
                     ->scalar();
  CHECK(moved > 0.0);
}

TEST_CASE("distribution matching equals the block mean-difference oracle") {
  BipartiteGraph g = toy_graph(19, 5, 3);
  Matrix x = make_node_features(8, 4, 19);
  RelayDims dims{4, 4, 2};
  auto model = sample_theta(Backbone::GCN, dims, 20);
  auto a = ad::constant(full_adjacency(g));
  auto xf = ad::constant(x);

  auto cg = init_condensed(2, 2, 4, 21, InitScheme::Gaussian);
  auto s = soft_adjacency(cg);
  auto z = ad::concat_rows(cg.emb_users, cg.emb_items);
  double got =
      distribution_match_loss(model, a, xf, 5, s, z, 2, false)->scalar();

  Matrix ho = relay_forward(model, a, xf)->value;
  Matrix hc = relay_forward(model, s, z)->value;
  auto mean_rows = [](const Matrix& m, Index r0, Index r1) {
    return Matrix(m.middleRows(r0, r1 - r0).colwise().sum() /
                  static_cast<double>(r1 - r0));
  };
  double expect =
      (mean_rows(hc, 0, 2) - mean_rows(ho, 0, 5)).squaredNorm() +
      (mean_rows(hc, 2, 4) - mean_rows(ho, 5, 8)).squaredNorm();
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));

  double with_sq =
      distribution_match_loss(model, a, xf, 5, s, z, 2, true)->scalar();
  CHECK(with_sq >= got);
  CHECK(with_sq != got);
}

TEST_CASE("trajectory endpoints: stalled student scores 1, copied dynamics score 0") {
  BipartiteGraph g = toy_graph(23, 5, 5);
  Matrix x = make_node_features(10, 4, 23);
  RelayDims dims{4, 4, 2};
  auto model = sample_theta(Backbone::GCN, dims, 24);
  auto a = ad::constant(full_adjacency(g));
  auto xf = ad::constant(x);

  auto experts = expert_trajectory(model, a, xf, 10, 5, 0.1);
  REQUIRE(experts.size() == 3);  // init plus steps 5 and 10

  double stalled =
      trajectory_match_loss(model, experts, 0, 1, a, xf, 4, 0.0)->scalar();
  CHECK(stalled == doctest::Approx(1.0).epsilon(1e-12));

  // same graph, same learning rate, matching step budget: the student walks
  // the expert's exact path
  double copied =
      trajectory_match_loss(model, experts, 0, 1, a, xf, 5, 0.1)->scalar();
  CHECK(copied <= 1e-8);

  CHECK(error_code_of([&] {
          trajectory_match_loss(model, experts, 2, 1, a, xf, 2, 0.1);
        }) == Status::InvalidArgument);
}

TEST_CASE("a stationary expert segment is rejected as degenerate") {
  BipartiteGraph g = toy_graph(29, 4, 4);
  Matrix x = make_node_features(8, 4, 29);
  RelayDims dims{4, 4, 1};
  auto model = sample_theta(Backbone::GCN, dims, 30);
  auto a = ad::constant(full_adjacency(g));
  auto xf = ad::constant(x);

  auto frozen = expert_trajectory(model, a, xf, 6, 3, 0.0);
  auto msg = error_message_of([&] {
    trajectory_match_loss(model, frozen, 0, 1, a, xf, 2, 0.1);
  });
  CHECK(msg.find("degenerate") != std::string::npos);
}

TEST_CASE("trajectory meta-gradient passes differencing") {
  BipartiteGraph g = toy_graph(31, 3, 3);
  Matrix x = make_node_features(6, 4, 31);
  RelayDims dims{4, 4, 1};
  auto model = sample_theta(Backbone::GCN, dims, 32);
  auto a = ad::constant(full_adjacency(g));
  auto xf = ad::constant(x);
  auto experts = expert_trajectory(model, a, xf, 6, 3, 0.1);
  auto cg = init_condensed(3, 3, 4, 33, InitScheme::Gaussian);

  auto loss_from = [&](const ad::NodePtr& eu) {
    CondensedGraph probe = cg;
    probe.emb_users = eu;
    auto s = soft_adjacency(probe);
    auto z = ad::concat_rows(probe.emb_users, probe.emb_items);
    return trajectory_match_loss(model, experts, 0, 1, s, z, 2, 0.05);
  };
  Matrix analytic =
      ad::grad(loss_from(cg.emb_users), {cg.emb_users}, false)[0]->value;
  auto numeric = [&](const Matrix& v) {
    return loss_from(ad::constant(v))->scalar();
  };
  CHECK(max_grad_rel_err(numeric, cg.emb_users->value, analytic, 1e-3, 1e-6) <
        1e-3);
}

TEST_CASE("condensed sizes round up from the ratio") {
  BipartiteGraph g = toy_graph(37, 40, 60, 0.25);
  CondensationConfig cfg;
  cfg.alpha = 0.8;
  cfg.dim = 6;
  cfg.hidden = 6;
  cfg.outer_epochs = 0;
  cfg.seed = 37;
  auto out = condense(cfg, g);
  CHECK(out.graph.n_users == 32);
  CHECK(out.graph.n_items == 48);
  CHECK(out.report.l_match.empty());
}

TEST_CASE("identity mode pins the original edge set") {
  BipartiteGraph g = toy_graph(41, 8, 9);
  CondensationConfig cfg;
  cfg.alpha = 1.0;
  cfg.copy_init = true;
  cfg.outer_epochs = 0;
  cfg.dim = 6;
  cfg.hidden = 6;
  cfg.seed = 41;
  auto out = condense(cfg, g);
  CHECK(out.graph.copy_of_original);
  CHECK(out.graph.n_users == 8);
  CHECK(out.graph.n_items == 9);
  CHECK(out.graph.original_edges == g.edge_list());

  TempDir dir("identity");
  export_condensed(out.graph, CondensedMeta{}, dir.str());
  CHECK(load_condensed(dir.str()).cross_edges == g.edge_list());
}

TEST_CASE("short condensation run: bookkeeping, loss identity, determinism") {
  BipartiteGraph g = toy_graph(43, 16, 20);
  CondensationConfig cfg;
  cfg.alpha = 0.8;
  cfg.lambda = 0.3;
  cfg.beta = 0.6;
  cfg.dim = 8;
  cfg.hidden = 8;
  cfg.relay_layers = 2;
  cfg.t_inner = 2;
  cfg.theta_samples = 2;
  cfg.outer_epochs = 8;
  cfg.lr_outer = 0.01;
  cfg.seed = 43;
  cfg.validate();

  auto a = condense(cfg, g);
  CHECK(a.graph.n_users == 13);  // ceil(0.8 * 16)
  CHECK(a.graph.n_items == 16);
  CHECK(a.report.l_match.size() == 8);
  CHECK(a.report.l_bip.size() == 8);
  CHECK(a.report.l_cond.size() == 8);
  CHECK(a.report.intra_mass.size() == 8);
  CHECK_FALSE(a.report.diverged);
  CHECK(a.report.skipped_samples == 0);
  for (std::size_t e = 0; e < 8; ++e) {
    CHECK(a.report.l_cond[e] ==
          doctest::Approx(a.report.l_bip[e] + cfg.beta * a.report.l_match[e])
              .epsilon(1e-12));
    CHECK(a.report.l_bip[e] > 0.0);
    CHECK(a.report.l_match[e] > 0.0);
  }

  auto b = condense(cfg, g);
  CHECK(a.report.l_cond == b.report.l_cond);
  CHECK(a.graph.emb_users->value == b.graph.emb_users->value);
  CHECK(a.graph.transform->value == b.graph.transform->value);

  cfg.bsl_on = false;
  auto off = condense(cfg, g);
  for (double v : off.report.l_bip) CHECK(v == 0.0);
  for (std::size_t e = 0; e < 8; ++e)
    CHECK(off.report.l_cond[e] ==
          doctest::Approx(cfg.beta * off.report.l_match[e]).epsilon(1e-12));
}

TEST_CASE("a heavy structure penalty exports a strictly bipartite graph") {
  BipartiteGraph g = toy_graph(47, 10, 12);
  CondensationConfig cfg;
  cfg.alpha = 0.8;
  cfg.lambda = 10.0;
  cfg.beta = 0.0;
  // at dim 8 the pair gradients interfere enough to fling a few scores deep
  // into the sigmoid tail before the penalty reorients; 16 keeps them tame
  cfg.dim = 16;
  cfg.hidden = 8;
  cfg.t_inner = 1;
  cfg.theta_samples = 1;
  cfg.outer_epochs = 150;
  cfg.lr_outer = 0.01;
  cfg.seed = 47;
  auto out = condense(cfg, g);
  Matrix soft = soft_adjacency(out.graph)->value;
  Matrix hard = hard_adjacency(soft, cfg.tau);
  CHECK(count_intra_edges(hard, out.graph.n_users) == 0);
  CHECK(out.report.intra_mass.back() < out.report.intra_mass.front());
}

TEST_CASE("matching loss falls over a short run") {
  BipartiteGraph g = toy_graph(53, 16, 20);
  CondensationConfig cfg;
  cfg.alpha = 0.8;
  cfg.dim = 8;
  cfg.hidden = 8;
  cfg.t_inner = 1;
  cfg.theta_samples = 1;
  cfg.outer_epochs = 40;
  cfg.lr_outer = 0.01;
  cfg.seed = 53;
  auto out = condense(cfg, g);
  CHECK(out.report.l_match.back() < out.report.l_match.front());
}

TEST_CASE("match report serializes with the pinned header") {
  MatchReport r;
  r.l_match = {0.5, 0.25};
  r.l_bip = {0.1, 0.05};
  r.l_cond = {0.56, 0.28};
  r.intra_mass = {0.5, 0.4};
  TempDir dir("report");
  std::string p = dir.file("match_report.csv");
  write_match_report_csv(r, p);
  std::string text = testutil::read_text(p);
  CHECK(text.rfind("epoch,L_match,L_bip,L_cond,intra_mass\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.find("\n0,") != std::string::npos);
  CHECK(text.find("\n1,") != std::string::npos);
}

TEST_CASE("the matching probe is deterministic and positive away from a copy") {
  BipartiteGraph g = toy_graph(59, 8, 8);
  CondensationConfig cfg;
  cfg.dim = 6;
  cfg.hidden = 6;
  cfg.seed = 59;
  auto cg = init_condensed(6, 6, 6, 60, InitScheme::Gaussian);
  double p1 = match_probe(cg, g, cfg, {1, 2});
  double p2 = match_probe(cg, g, cfg, {1, 2});
  CHECK(p1 == p2);
  CHECK(p1 > 0.0);
  CHECK(error_code_of([&] { match_probe(cg, g, cfg, {}); }) ==
        Status::InvalidArgument);
}

TEST_CASE("strategy names parse and invalid configs are named") {
  CHECK(parse_strategy("Gradient") == MatchStrategy::Gradient);
  CHECK(parse_strategy("trajectory") == MatchStrategy::Trajectory);
  CHECK(parse_strategy("distribution") == MatchStrategy::Distribution);
  CHECK(strategy_name(MatchStrategy::Gradient) == "gradient");
  CHECK(error_code_of([] { parse_strategy("random"); }) ==
        Status::InvalidArgument);

  CondensationConfig cfg;
  cfg.alpha = 0.0;
  CHECK(error_code_of([&] { cfg.validate(); }) == Status::InvalidArgument);
  cfg.alpha = 1.2;
  CHECK(error_code_of([&] { cfg.validate(); }) == Status::InvalidArgument);

  cfg = CondensationConfig{};
  cfg.tau = 1.0;
  CHECK(error_code_of([&] { cfg.validate(); }) == Status::InvalidArgument);

  cfg = CondensationConfig{};
  cfg.copy_init = true;  // only valid at alpha = 1 with no epochs
  CHECK(error_code_of([&] { cfg.validate(); }) == Status::InvalidArgument);

  cfg = CondensationConfig{};
  cfg.t_inner = 0;
  CHECK(error_code_of([&] { cfg.validate(); }) == Status::InvalidArgument);

  cfg = CondensationConfig{};
  cfg.strategy = MatchStrategy::Trajectory;
  cfg.expert_steps = 5;
  cfg.expert_every = 5;
  cfg.expert_delta = 2;
  auto msg = error_message_of([&] { cfg.validate(); });
  CHECK(msg.find("trajectory") != std::string::npos);
}

}  // TEST_SUITE
