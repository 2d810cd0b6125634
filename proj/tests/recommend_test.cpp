#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "recommend.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace demorec;
using testutil::error_code_of;
using testutil::max_grad_rel_err;

namespace {

BipartiteGraph toy_graph(std::uint64_t seed, Index nu, Index ni,
                         double p_in = 0.45) {
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

Eigen::RowVectorXd rvec(Index d, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  return gaussian_matrix(1, d, 1.0, rng).row(0);
}

RecModel scored_model(const std::vector<double>& item_scores) {
  RecModel m;
  m.user_emb = Matrix::Ones(1, 1);
  m.item_emb = Matrix(static_cast<Index>(item_scores.size()), 1);
  for (std::size_t i = 0; i < item_scores.size(); ++i)
    m.item_emb(static_cast<Index>(i), 0) = item_scores[i];
  return m;
}

}  // namespace

TEST_SUITE("recommend") {

TEST_CASE("a tied triple costs ln 2 and a large margin costs nothing") {
  auto eu = rvec(6, 1);
  auto ei = rvec(6, 2);
  CHECK(bpr_triple_loss(eu, ei, ei, 0.0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Eigen::RowVectorXd big = Eigen::RowVectorXd::Zero(6);
  big(0) = 40.0;
  Eigen::RowVectorXd unit = Eigen::RowVectorXd::Zero(6);
  unit(0) = 1.0;
  CHECK(bpr_triple_loss(unit, big, Eigen::RowVectorXd::Zero(6), 0.0) < 1e-9);

  double reg = 0.5;
  double expect = std::log(2.0) + 0.25 * (eu.squaredNorm() + 2 * ei.squaredNorm());
  CHECK(bpr_triple_loss(eu, ei, ei, reg) == doctest::Approx(expect));
}

TEST_CASE("triple gradients pass central differencing") {
  for (double reg : {0.0, 0.1}) {
    Eigen::RowVectorXd eu = rvec(6, 3), ei = rvec(6, 4), ej = rvec(6, 5);
    Eigen::RowVectorXd gu, gi, gj;
    bpr_triple_grad(eu, ei, ej, reg, &gu, &gi, &gj);

    auto check_block = [&](const Eigen::RowVectorXd& at,
                           const Eigen::RowVectorXd& analytic, int which) {
      auto loss = [&](const Matrix& v) {
        Eigen::RowVectorXd r = v.row(0);
        if (which == 0) return bpr_triple_loss(r, ei, ej, reg);
        if (which == 1) return bpr_triple_loss(eu, r, ej, reg);
        return bpr_triple_loss(eu, ei, r, reg);
      };
      CHECK(max_grad_rel_err(loss, Matrix(at), Matrix(analytic), 1e-5) < 1e-6);
    };
    check_block(eu, gu, 0);
    check_block(ei, gi, 1);
    check_block(ej, gj, 2);
  }
}

TEST_CASE("twenty epochs beat the first epoch on a small graph") {
  BipartiteGraph g = toy_graph(7, 10, 15);
  BprConfig cfg;
  cfg.dim = 8;
  cfg.lr = 0.05;
  cfg.epochs = 20;
  cfg.seed = 7;
  RecModel m = bpr_train(g, cfg);
  REQUIRE(m.epoch_loss.size() == 20);
  CHECK(m.epoch_loss.back() < m.epoch_loss.front());
  CHECK(m.epochs == 20);

  RecModel m2 = bpr_train(g, cfg);
  CHECK(m.user_emb == m2.user_emb);
  CHECK(m.item_emb == m2.item_emb);
  CHECK(m.epoch_loss == m2.epoch_loss);
}

TEST_CASE("users holding every item are skipped instead of crashing") {
  BipartiteGraph g =
      BipartiteGraph::from_edges(2, 3, {{0, 0}, {0, 1}, {0, 2}, {1, 0}});
  BprConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 3;
  cfg.seed = 9;
  BprTrainer trainer(g, cfg);
  for (int e = 0; e < 3; ++e) {
    double loss = trainer.run_epoch();
    CHECK(std::isfinite(loss));
  }
  CHECK(trainer.model().epoch_loss.size() == 3);
}

TEST_CASE("warm-start embeddings must come as a well-shaped pair") {
  BipartiteGraph g = toy_graph(11, 6, 8);
  BprConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 0;
  Matrix iu = Matrix::Random(6, 4);
  Matrix ii = Matrix::Random(8, 4);

  BprTrainer warm(g, cfg, &iu, &ii);
  CHECK(warm.model().user_emb == iu);
  CHECK(warm.model().item_emb == ii);

  CHECK(error_code_of([&] { BprTrainer t(g, cfg, &iu, nullptr); }) ==
        Status::InvalidArgument);
  Matrix bad = Matrix::Random(6, 5);
  CHECK(error_code_of([&] { BprTrainer t(g, cfg, &bad, &ii); }) ==
        Status::ShapeMismatch);

  BipartiteGraph empty = BipartiteGraph::from_edges(2, 2, {});
  CHECK(error_code_of([&] { BprTrainer t(empty, cfg); }) ==
        Status::EmptyGraph);
  BprConfig bad_cfg;
  bad_cfg.lr = 0.0;
  CHECK(error_code_of([&] { BprTrainer t(g, bad_cfg); }) ==
        Status::InvalidArgument);
}

TEST_CASE("scores are plain dot products") {
  RecModel m;
  m.user_emb = Matrix(1, 8);
  m.item_emb = Matrix(2, 8);
  Rng rng = make_rng(13, 0);
  std::normal_distribution<double> d(0.0, 1.0);
  double expect = 0.0;
  for (Index c = 0; c < 8; ++c) {
    m.user_emb(0, c) = d(rng);
    m.item_emb(0, c) = d(rng);
    m.item_emb(1, c) = 0.0;
    expect += m.user_emb(0, c) * m.item_emb(0, c);
  }
  m.item_emb(1, 0) = 0.0;
  CHECK(score(m, 0, 0) == doctest::Approx(expect).epsilon(1e-12));

  // orthogonal embeddings score zero; identical unit embeddings score one
  m.user_emb.setZero();
  m.user_emb(0, 1) = 1.0;
  m.item_emb.row(0).setZero();
  m.item_emb(0, 2) = 1.0;
  CHECK(score(m, 0, 0) == 0.0);
  m.item_emb.row(0) = m.user_emb.row(0);
  CHECK(score(m, 0, 0) == doctest::Approx(1.0));

  CHECK(error_code_of([&] { score(m, 2, 0); }) == Status::InvalidArgument);
  CHECK(error_code_of([&] { score(m, 0, 5); }) == Status::InvalidArgument);
}

TEST_CASE("top-2 of scores (0.9, 0.1, 0.5) is items 0 and 2") {
  RecModel m = scored_model({0.9, 0.1, 0.5});
  TopK out = top_k(m, 0, 2, {});
  CHECK(out.items == std::vector<Index>{0, 2});
  CHECK(out.scores[0] == doctest::Approx(0.9));
  CHECK(out.scores[1] == doctest::Approx(0.5));
  CHECK_FALSE(out.short_list);
}

TEST_CASE("ties fall back to ascending item index") {
  RecModel m = scored_model({0.4, 0.4, 0.4, 0.4, 0.4});
  CHECK(top_k(m, 0, 3, {}).items == std::vector<Index>{0, 1, 2});
}

TEST_CASE("top-k agrees with a full sort over 100 items") {
  RecModel m;
  Rng rng = make_rng(17, 0);
  m.user_emb = gaussian_matrix(1, 4, 1.0, rng);
  m.item_emb = gaussian_matrix(100, 4, 1.0, rng);
  std::vector<Index> exclude = {3, 17, 50, 99};

  TopK got = top_k(m, 0, 10, exclude);
  REQUIRE(got.items.size() == 10);

  std::vector<std::pair<double, Index>> all;
  for (Index i = 0; i < 100; ++i) {
    if (std::binary_search(exclude.begin(), exclude.end(), i)) continue;
    all.emplace_back(m.user_emb.row(0).dot(m.item_emb.row(i)), i);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t r = 0; r < 10; ++r) {
    CHECK(got.items[r] == all[r].second);
    CHECK(got.scores[r] == all[r].first);
    CHECK_FALSE(std::binary_search(exclude.begin(), exclude.end(),
                                   got.items[r]));
  }
}

TEST_CASE("asking for more items than exist flags a short list") {
  RecModel m = scored_model({0.3, 0.2, 0.1});
  TopK out = top_k(m, 0, 5, {});
  CHECK(out.items.size() == 3);
  CHECK(out.short_list);
  TopK out2 = top_k(m, 0, 5, {1});
  CHECK(out2.items.size() == 2);
  CHECK(error_code_of([&] { top_k(m, 0, 0, {}); }) == Status::InvalidArgument);
  CHECK(error_code_of([&] { top_k(m, 3, 1, {}); }) == Status::InvalidArgument);
}

TEST_CASE("the ranking is invariant under positive uniform scaling") {
  RecModel m;
  Rng rng = make_rng(19, 0);
  m.user_emb = gaussian_matrix(2, 4, 1.0, rng);
  m.item_emb = gaussian_matrix(30, 4, 1.0, rng);
  RecModel scaled = m;
  scaled.user_emb *= 3.7;
  scaled.item_emb *= 3.7;
  for (Index u = 0; u < 2; ++u)
    CHECK(top_k(m, u, 10, {}).items == top_k(scaled, u, 10, {}).items);
}

TEST_CASE("representative assignment matches an all-pairs cosine oracle") {
  BipartiteGraph g = toy_graph(23, 12, 18);
  auto cg = init_condensed(5, 7, 4, 23, InitScheme::Gaussian);
  Rng rng = make_rng(24, 0);
  Matrix ro = gaussian_matrix(30, 6, 1.0, rng);
  Matrix rc = gaussian_matrix(12, 6, 1.0, rng);
  ro.row(4).setZero();   // forces the Euclidean fallback for one user
  rc.row(2).setZero();   // a directionless condensed user, skipped by cosine

  Assignment got = assign_representatives(g, cg, ro, rc);
  REQUIRE(got.user_map.size() == 12);
  REQUIRE(got.item_map.size() == 18);
  CHECK_FALSE(got.identity);

  auto nearest = [](const Eigen::RowVectorXd& q, const Matrix& table) {
    double qn = q.norm();
    Index best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    bool found = false;
    if (qn >= 1e-12) {
      for (Index r = 0; r < table.rows(); ++r) {
        double tn = table.row(r).norm();
        if (tn < 1e-12) continue;
        double sim = q.dot(table.row(r)) / (qn * tn);
        if (sim > best_sim) {
          best_sim = sim;
          best = r;
          found = true;
        }
      }
    }
    if (!found) {
      for (Index r = 0; r < table.rows(); ++r) {
        double sim = -(q - table.row(r)).norm();
        if (sim > best_sim) {
          best_sim = sim;
          best = r;
        }
      }
    }
    return std::make_pair(best, best_sim);
  };

  Matrix cu = rc.topRows(5), ci = rc.bottomRows(7);
  for (Index u = 0; u < 12; ++u) {
    auto [idx, sim] = nearest(ro.row(u), cu);
    CHECK(got.user_map[u] == idx);
    CHECK(got.user_sim[u] == doctest::Approx(sim).epsilon(1e-12));
  }
  for (Index i = 0; i < 18; ++i) {
    auto [idx, sim] = nearest(ro.row(12 + i), ci);
    CHECK(got.item_map[i] == idx);
    CHECK(got.item_sim[i] == doctest::Approx(sim).epsilon(1e-12));
  }
}

TEST_CASE("a verbatim copy assigns every node to itself") {
  BipartiteGraph g = toy_graph(29, 6, 9);
  Matrix uf = Matrix::Random(6, 4);
  Matrix itf = Matrix::Random(9, 4);
  auto cg = init_copy(g, uf, itf, 0.5);
  Assignment a = assign_representatives(g, cg, Matrix::Zero(15, 1), Matrix());
  CHECK(a.identity);
  for (Index u = 0; u < 6; ++u) CHECK(a.user_map[u] == u);
  for (Index i = 0; i < 9; ++i) CHECK(a.item_map[i] == i);
  CHECK(a.user_sim == std::vector<double>(6, 1.0));
  CHECK(a.item_sim == std::vector<double>(9, 1.0));
}

TEST_CASE("a single condensed user absorbs every original user") {
  BipartiteGraph g = toy_graph(31, 5, 4);
  auto cg = init_condensed(1, 2, 3, 31, InitScheme::Gaussian);
  Rng rng = make_rng(32, 0);
  Matrix ro = gaussian_matrix(9, 3, 1.0, rng);
  Matrix rc = gaussian_matrix(3, 3, 1.0, rng);
  Assignment a = assign_representatives(g, cg, ro, rc);
  for (Index u = 0; u < 5; ++u) CHECK(a.user_map[u] == 0);
}

TEST_CASE("assignment rejects mismatched relay tables") {
  BipartiteGraph g = toy_graph(37, 5, 4);
  auto cg = init_condensed(2, 2, 3, 37, InitScheme::Gaussian);
  CHECK(error_code_of([&] {
          assign_representatives(g, cg, Matrix::Zero(7, 3),
                                 Matrix::Zero(4, 3));
        }) == Status::ShapeMismatch);
  CHECK(error_code_of([&] {
          assign_representatives(g, cg, Matrix::Zero(9, 3),
                                 Matrix::Zero(3, 3));
        }) == Status::ShapeMismatch);
  CHECK(error_code_of([&] {
          assign_representatives(g, cg, Matrix::Zero(9, 3),
                                 Matrix::Zero(4, 2));
        }) == Status::ShapeMismatch);
}

TEST_CASE("representative scores dominate, shared representatives break by relay cosine") {
  RecModel m = scored_model({0.9, 0.1, 0.5});
  Assignment a;
  a.user_map = {0};
  a.item_map = {0, 1, 2, 0};  // items 0 and 3 share a representative
  a.user_sim = {1.0};
  a.item_sim = {1.0, 1.0, 1.0, 1.0};

  // relay rows: user, then four items; item 3 is closer to the user
  Matrix relay(5, 2);
  relay << 1.0, 0.0,
           0.8, 0.6,   // item 0: cosine 0.8
           0.0, 1.0,
           1.0, 1.0,
           1.0, 0.1;   // item 3: cosine ~0.995
  TopK out = recommend_for_original(0, m, a, relay, 1, 4, 4, {});
  CHECK(out.items == std::vector<Index>{3, 0, 2, 1});
  CHECK(out.scores[0] == doctest::Approx(0.9));
  CHECK(out.scores[1] == doctest::Approx(0.9));
  CHECK(out.scores[2] == doctest::Approx(0.5));
  CHECK(out.scores[3] == doctest::Approx(0.1));
}

TEST_CASE("representative ranking agrees with a lexicographic oracle over 40 items") {
  Rng rng = make_rng(41, 0);
  RecModel m;
  m.user_emb = gaussian_matrix(3, 4, 1.0, rng);
  m.item_emb = gaussian_matrix(5, 4, 1.0, rng);

  Assignment a;
  a.user_map = {1, 0};
  a.user_sim = {1.0, 1.0};
  for (Index i = 0; i < 40; ++i) {
    a.item_map.push_back(static_cast<Index>(rng() % 5));
    a.item_sim.push_back(1.0);
  }
  Matrix relay = gaussian_matrix(42, 3, 1.0, rng);
  std::vector<Index> exclude = {0, 7};

  TopK got = recommend_for_original(0, m, a, relay, 2, 40, 15, exclude);

  Eigen::RowVectorXd eu = m.user_emb.row(a.user_map[0]);
  Eigen::RowVectorXd hu = relay.row(0);
  std::vector<std::tuple<double, double, Index>> all;
  for (Index i = 0; i < 40; ++i) {
    if (std::binary_search(exclude.begin(), exclude.end(), i)) continue;
    double primary = eu.dot(m.item_emb.row(a.item_map[i]));
    Eigen::RowVectorXd hi = relay.row(2 + i);
    double secondary = hu.dot(hi) / (hu.norm() * hi.norm());
    all.emplace_back(primary, secondary, i);
  }
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    if (std::get<1>(x) != std::get<1>(y)) return std::get<1>(x) > std::get<1>(y);
    return std::get<2>(x) < std::get<2>(y);
  });
  REQUIRE(got.items.size() == 15);
  for (std::size_t r = 0; r < 15; ++r) {
    CHECK(got.items[r] == std::get<2>(all[r]));
    CHECK(got.scores[r] == std::get<0>(all[r]));
  }

  Assignment truncated = a;
  truncated.item_map.resize(10);
  CHECK(error_code_of([&] {
          recommend_for_original(0, m, truncated, relay, 2, 40, 5, {});
        }) == Status::ShapeMismatch);
}

TEST_CASE("identity assignment reproduces plain top-k exactly") {
  BipartiteGraph g = toy_graph(43, 6, 9);
  BprConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 10;
  cfg.seed = 43;
  RecModel m = bpr_train(g, cfg);

  Matrix uf = Matrix::Random(6, 4);
  Matrix itf = Matrix::Random(9, 4);
  auto cg = init_copy(g, uf, itf, 0.5);
  Assignment a = assign_representatives(g, cg, Matrix::Zero(15, 1), Matrix());

  for (Index u = 0; u < 6; ++u) {
    const auto& exclude = g.user_adj[static_cast<std::size_t>(u)];
    TopK direct = top_k(m, u, 5, exclude);
    TopK routed = recommend_for_original(u, m, a, Matrix::Zero(15, 1), 6, 9, 5,
                                         exclude);
    CHECK(routed.items == direct.items);
    CHECK(routed.scores == direct.scores);
  }
}

}  // TEST_SUITE
