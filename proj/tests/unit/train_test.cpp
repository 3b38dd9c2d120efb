// Copyright 2026 The sirenrec Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "test_support.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

using namespace siren;
using siren::testing::max_abs;
using siren::testing::random_graph;

namespace {

std::vector<Interaction> ints(std::initializer_list<Interaction> l) { return l; }

// One user and two items in one dimension: r_ui = pos, r_uj = neg.
Matrix scores(double pos, double neg) {
  Matrix z(3, 1);
  z << 1.0, pos, neg;
  return z;
}

ModelState scalar_state(double value) {
  ModelState s;
  s.gnn.embedding = Matrix::Constant(1, 1, value);
  return s;
}

double one_term(double pos, double neg, bool low, double c = 2.0, LossKind kind = LossKind::kSignAware) {
  const TrainingTriple t{0, 0, 1, low};
  const LossOptions opt{c, 0.0, kind};
  return sign_aware_bpr_loss(std::span(&t, 1), scores(pos, neg), 1, ModelState{}, opt).total;
}

// 20 users x 20 items in four 5x5 blocks: users like their block and dislike the next.
std::vector<Interaction> block_ratings() {
  std::vector<Interaction> r;
  for (std::uint32_t u = 0; u < 20; ++u) {
    const std::uint32_t b = u / 5;
    for (std::uint32_t k = 0; k < 5; ++k) {
      if ((u + k) % 5 != 0) r.push_back({u, b * 5 + k, 5.0});
      if ((u + k) % 2 == 0) r.push_back({u, ((b + 1) % 4) * 5 + k, 1.0});
    }
  }
  return r;
}

TrainConfig small_train(std::size_t epochs) {
  TrainConfig t;
  t.n_neg = 4;
  t.batch_size = 64;
  t.epochs = epochs;
  t.lambda_reg = 0.001;
  t.learning_rate = 0.01;
  t.seed = 11;
  return t;
}

ModelConfig small_model(Variant v = Variant::kMlpGn, Backbone b = Backbone::kLightGcn) {
  ModelConfig m;
  m.backbone = b;
  m.variant = v;
  m.dim = 8;
  m.attention_dim = 8;
  m.gnn_layers = 2;
  m.dropout = 0.0;
  return m;
}

}  // namespace

TEST(NegativeSampler, ForcedOutcome) {
  std::vector<Interaction> r;
  for (std::uint32_t i = 0; i < 6; ++i) {
    if (i != 4) r.push_back({0, i, 5.0});
    r.push_back({1, i, 1.0});
    r.push_back({2, i, 4.0});
  }
  const auto g = build_signed_graph(3, 6, r, 3.5);
  NegativeSampler s(g);
  EXPECT_TRUE(s.saturated(1));
  EXPECT_FALSE(s.saturated(0));
  auto rng = make_rng(1, "forced");
  for (int n = 0; n < 200; ++n) ASSERT_EQ(s.draw(0, rng), 4u);
  EXPECT_DOUBLE_EQ(s.probability(0, 4), 1.0);
  EXPECT_THROW(s.draw(1, rng), std::logic_error);
}

TEST(NegativeSampler, CardinalityAndExclusion) {
  auto rng = make_rng(2, "card");
  const auto g = random_graph(12, 30, 0.3, rng);
  for (std::size_t n_neg : {1u, 3u, 40u}) {
    const auto s = sample_negatives(g, n_neg, 5);
    EXPECT_TRUE(s.skipped_users.empty());
    EXPECT_EQ(s.triples.size(), g.edges.size() * n_neg);
    NegativeSampler sampler(g);
    for (const auto& t : s.triples) {
      ASSERT_TRUE(sampler.is_neighbour(t.user, t.item));
      ASSERT_FALSE(sampler.is_neighbour(t.user, t.negative_item));
    }
  }
  EXPECT_EQ(sample_negatives(g, 40, 5).triples.size(), 40 * sample_negatives(g, 1, 5).triples.size());
}

TEST(NegativeSampler, TripleSignFollowsEdge) {
  const auto g = build_signed_graph(2, 4, ints({{0, 0, 5}, {0, 1, 2}, {1, 2, 4}}), 3.5);
  for (const auto& t : sample_negatives(g, 3, 1).triples) {
    const bool low = t.user == 0 && t.item == 1;
    EXPECT_EQ(t.low_rating, low);
  }
}

TEST(NegativeSampler, OneToEightOdds) {
  // User 0 rated item 0; candidates 1 (degree 1) and 2 (degree 16).
  std::vector<Interaction> r{{0, 0, 5.0}, {1, 1, 4.0}};
  for (std::uint32_t u = 1; u <= 16; ++u) r.push_back({u, 2, u % 2 ? 2.0 : 5.0});
  const auto g = build_signed_graph(17, 3, r, 3.5);
  NegativeSampler s(g);
  EXPECT_NEAR(s.probability(0, 1), 1.0 / 9.0, 1e-12);
  EXPECT_NEAR(s.probability(0, 2), 8.0 / 9.0, 1e-12);
  EXPECT_LT(sampler_tv_distance(g, 0, 100000, 3), 0.01);
}

TEST(NegativeSampler, TvDistanceOnToyGraph) {
  const auto g = sampler_toy_graph();
  NegativeSampler s(g);
  double total = 0;
  for (std::uint32_t j = 0; j < g.num_items; ++j) total += s.probability(0, j);
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_LT(sampler_tv_distance(g, 0, 100000, 4), 0.01);
}

TEST(NegativeSampler, PositiveDegreeBase) {
  // Item 1 has only negative ratings, so it carries no mass under the positive base.
  const auto g = build_signed_graph(3, 3, ints({{0, 0, 5}, {1, 1, 1}, {2, 1, 2}, {1, 2, 5}}), 3.5);
  NegativeSampler pos(g, NoiseDegree::kPositive);
  EXPECT_EQ(pos.probability(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(pos.probability(0, 2), 1.0);
  NegativeSampler sig(g);
  EXPECT_NEAR(sig.probability(0, 1), std::pow(2.0, 0.75) / (std::pow(2.0, 0.75) + 1.0), 1e-12);
}

TEST(NegativeSampler, SaturatedUserSkipped) {
  const auto g = build_signed_graph(2, 2, ints({{0, 0, 5}, {0, 1, 4}, {1, 0, 2}}), 3.5);
  const auto s = sample_negatives(g, 2, 0);
  ASSERT_EQ(s.skipped_users, std::vector<std::uint32_t>{0});
  ASSERT_EQ(s.triples.size(), 2u);
  for (const auto& t : s.triples) EXPECT_EQ(t.negative_item, 1u);
}

TEST(Loss, SpotValues) {
  EXPECT_NEAR(one_term(0.7, 0.7, false), 0.693147, 1e-6);
  EXPECT_NEAR(one_term(1.0, 2.0, true, 2.0), std::log(2.0), 1e-12);
  EXPECT_NEAR(one_term(3.0, 1.0, false), 0.126928, 1e-6);
  EXPECT_NEAR(one_term(3.0, 1.0, false), std::log1p(std::exp(-2.0)), 1e-15);
}

TEST(Loss, StandardModeIgnoresSign) {
  EXPECT_DOUBLE_EQ(one_term(1.0, 2.0, true, 2.0, LossKind::kStandard), one_term(1.0, 2.0, false));
  EXPECT_DOUBLE_EQ(one_term(1.0, 2.0, true, 0.5, LossKind::kStandard), std::log1p(std::exp(1.0)));
}

TEST(Loss, StableAtExtremeMargins) {
  EXPECT_NEAR(one_term(1000.0, 0.0, false), 0.0, 1e-300);
  EXPECT_NEAR(one_term(-1000.0, 0.0, false), 1000.0, 1e-9);
  EXPECT_NEAR(one_term(0.0, 1000.0, true), 1000.0, 1e-9);
  EXPECT_TRUE(std::isfinite(one_term(-1000.0, 1000.0, true)));
  EXPECT_NEAR(softplus(-745.0), 0.0, 1e-300);
  EXPECT_NEAR(log_sigmoid(0.0), -std::log(2.0), 1e-15);
}

TEST(Loss, PositiveAndMonotone) {
  auto rng = make_rng(5, "loss-fuzz");
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int n = 0; n < 1000; ++n) {
    const double a = u(rng), b = u(rng);
    for (bool low : {false, true}) {
      const double base = one_term(a, b, low);
      ASSERT_GT(base, 0.0);
      ASSERT_LT(one_term(a + 0.5, b, low), base);
    }
    // The low-rated slope is c times steeper at the same margin point.
    const double h = 1e-6;
    const double pos_slope = (one_term(h, 0, false) - one_term(-h, 0, false)) / (2 * h);
    const double neg_slope = (one_term(h, 0, true, 3.0) - one_term(-h, 0, true, 3.0)) / (2 * h);
    ASSERT_NEAR(neg_slope, 3.0 * pos_slope, 1e-6);
  }
}

TEST(Loss, ErrorsAndRegularization) {
  const Matrix z = scores(1, 2);
  std::vector<TrainingTriple> none;
  EXPECT_THROW(sign_aware_bpr_loss(none, z, 1, ModelState{}, {}), std::invalid_argument);
  const TrainingTriple t{0, 0, 1, true};
  EXPECT_THROW(sign_aware_bpr_loss(std::span(&t, 1), z, 1, ModelState{}, {1.0, 0.0, LossKind::kSignAware}),
               std::invalid_argument);
  const auto s = scalar_state(3.0);
  const auto v = sign_aware_bpr_loss(std::span(&t, 1), z, 1, s, {2.0, 0.5, LossKind::kSignAware});
  EXPECT_DOUBLE_EQ(v.regularization, 0.5 * 9.0);
  EXPECT_DOUBLE_EQ(v.total, v.bpr + v.regularization);
  ASSERT_EQ(v.terms.size(), 1u);
  EXPECT_DOUBLE_EQ(v.terms[0], v.bpr);
}

TEST(Gradient, RegularizationIsTwoLambdaTheta) {
  auto s = initialize_model(small_model(Variant::kGnnGn, Backbone::kNgcf), 4, 5, 3);
  auto g = zeros_like(s);
  add_regularization_gradient(s, 0.3, g);
  auto ps = parameter_list(s);
  auto gs = parameter_list(g);
  for (std::size_t k = 0; k < ps.size(); ++k) EXPECT_EQ(*gs[k].second, 0.6 * *ps[k].second) << ps[k].first;
}

TEST(Gradient, PreferenceWrtUserIsItemEmbedding) {
  auto rng = make_rng(6, "bilinear");
  Matrix z = Matrix::Random(5, 3);
  const TrainingTriple t{1, 0, 1, false};
  const LossOptions opt{2.0, 0.0, LossKind::kSignAware};
  const Matrix dz = loss_gradient_wrt_embeddings(std::span(&t, 1), z, 2, opt);
  // dL/dz_u = -sigma(-x) (z_i - z_j), so dL/dz_u along d r_ui is the item row.
  const double x = z.row(1).dot(z.row(2)) - z.row(1).dot(z.row(3));
  const double s = 1.0 / (1.0 + std::exp(x));
  EXPECT_LT(max_abs(dz.row(1) - (-s) * (z.row(2) - z.row(3))), 1e-15);
  EXPECT_LT(max_abs(dz.row(2) - (-s) * z.row(1)), 1e-15);
  EXPECT_LT(max_abs(dz.row(3) - s * z.row(1)), 1e-15);
  EXPECT_EQ(max_abs(dz.row(0)), 0.0);
  (void)rng;
}

TEST(Gradient, MatchesFiniteDifferencesEverywhere) {
  for (auto b : {Backbone::kLightGcn, Backbone::kLrGccf, Backbone::kNgcf}) {
    for (auto v : {Variant::kMlpGn, Variant::kGnnGn, Variant::kNoGn, Variant::kNoSplit}) {
      ModelConfig cfg = small_model(v, b);
      cfg.dim = 4;
      cfg.attention_dim = 4;
      auto tiny = make_tiny_instance(cfg, 17);
      for (auto kind : {LossKind::kSignAware, LossKind::kStandard}) {
        for (const auto& e : gradient_check(tiny.inputs, tiny.state, cfg, tiny.batch, {2.0, 0.05, kind})) {
          EXPECT_LT(e.max_relative_error, 1e-4) << backbone_name(b) << "/" << variant_name(v) << " " << e.parameter;
        }
      }
    }
  }
}

TEST(Gradient, InjectedBugIsCaught) {
  const auto cfg = small_model(Variant::kMlpGn);
  auto tiny = make_tiny_instance(cfg, 3);
  double worst = 0;
  for (const auto& e : gradient_check(tiny.inputs, tiny.state, cfg, tiny.batch, {}, 1e-4, true)) {
    worst = std::max(worst, e.max_relative_error);
  }
  EXPECT_GT(worst, 1e-2);
}

TEST(Adam, FirstStepIsSignOfGradient) {
  auto p = scalar_state(1.0);
  auto g = scalar_state(-0.37);
  auto opt = make_optimizer(p);
  adam_step(p, g, opt, 0.01);
  EXPECT_NEAR(p.gnn.embedding(0, 0), 1.0 + 0.01 * 0.37 / (0.37 + 1e-8), 1e-15);
  EXPECT_NEAR(p.gnn.embedding(0, 0), 1.01, 1e-9);
  EXPECT_EQ(opt.step, 1u);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  auto p = initialize_model(small_model(), 3, 4, 1);
  const auto before = p;
  auto opt = make_optimizer(p);
  for (int k = 0; k < 3; ++k) adam_step(p, zeros_like(p), opt, 0.1);
  auto a = parameter_list(p);
  auto b = parameter_list(before);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(*a[k].second, *b[k].second);
}

TEST(Adam, DescendsAQuadratic) {
  auto p = scalar_state(2.0);
  auto opt = make_optimizer(p);
  double f = 4.0;
  for (int k = 0; k < 2; ++k) {
    auto g = scalar_state(2.0 * p.gnn.embedding(0, 0));
    adam_step(p, g, opt, 0.1);
    const double next = std::pow(p.gnn.embedding(0, 0), 2);
    EXPECT_LT(next, f);
    f = next;
  }
}

TEST(Adam, RejectsNonFiniteAndMismatchedGradients) {
  auto p = scalar_state(1.0);
  auto opt = make_optimizer(p);
  EXPECT_THROW(adam_step(p, scalar_state(std::nan("")), opt, 0.1), NumericalError);
  EXPECT_THROW(adam_step(p, scalar_state(INFINITY), opt, 0.1), NumericalError);
  EXPECT_EQ(p.gnn.embedding(0, 0), 1.0);
  EXPECT_EQ(opt.step, 0u);
  ModelState wrong;
  wrong.gnn.embedding = Matrix::Zero(2, 1);
  EXPECT_THROW(adam_step(p, wrong, opt, 0.1), ShapeError);
}

TEST(TrainConfig, Validation) {
  TrainConfig t;
  EXPECT_NO_THROW(t.validate());
  t.c = 1.0;
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t = {};
  t.n_neg = 0;
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t = {};
  t.learning_rate = 0;
  EXPECT_THROW(t.validate(), std::invalid_argument);
  EXPECT_EQ(parse_loss("standard-bpr"), LossKind::kStandard);
  EXPECT_EQ(parse_loss(loss_name(LossKind::kSignAware)), LossKind::kSignAware);
  EXPECT_THROW(parse_loss("hinge"), std::invalid_argument);
}

TEST(Train, LossDecreasesOnBlockData) {
  const auto g = build_signed_graph(20, 20, block_ratings(), 3.5);
  for (auto v : {Variant::kMlpGn, Variant::kNoGn}) {
    const auto r = train(g, small_model(v), small_train(50));
    ASSERT_EQ(r.log.size(), 50u);
    EXPECT_LT(r.log.back().mean_loss, r.log.front().mean_loss) << variant_name(v);
    EXPECT_EQ(r.log.front().triples, g.edges.size() * 4);
    EXPECT_EQ(r.embeddings.rows(), 40);
  }
}

TEST(Train, BitwiseDeterministic) {
  const auto g = build_signed_graph(20, 20, block_ratings(), 3.5);
  auto m = small_model(Variant::kMlpGn, Backbone::kNgcf);
  m.dropout = 0.3;
  const auto a = train(g, m, small_train(5));
  const auto b = train(g, m, small_train(5));
  for (std::size_t e = 0; e < a.log.size(); ++e) {
    EXPECT_EQ(a.log[e].mean_loss, b.log[e].mean_loss);
    EXPECT_EQ(a.log[e].regularization, b.log[e].regularization);
  }
  EXPECT_EQ(a.embeddings, b.embeddings);
  auto other = small_train(5);
  other.seed = 12;
  EXPECT_NE(train(g, m, other).embeddings, a.embeddings);
}

TEST(Train, EpochsResampleTriples) {
  const auto g = build_signed_graph(20, 20, block_ratings(), 3.5);
  const NegativeSampler sampler(g);
  auto r1 = make_rng(11, "sampling", 1);
  auto r2 = make_rng(11, "sampling", 2);
  const auto a = sample_negatives(g, sampler, 4, r1).triples;
  const auto b = sample_negatives(g, sampler, 4, r2).triples;
  ASSERT_EQ(a.size(), b.size());
  EXPECT_NE(a, b);
}

TEST(Train, PositiveOnlyStandardBprIsPlainBpr) {
  auto cfg = small_model(Variant::kNoGn);
  auto tc = small_train(3);
  tc.loss = LossKind::kStandard;
  tc.positive_only = true;
  const auto g = build_signed_graph(20, 20, block_ratings(), 3.5);
  const auto pos = positive_subgraph(g);
  for (const auto& e : pos.edges) ASSERT_GT(e.weight, 0.0);
  const auto r = train(g, cfg, tc);
  tc.positive_only = false;
  const auto direct = train(pos, cfg, tc);
  EXPECT_EQ(r.embeddings, direct.embeddings);
  // Sign-aware and standard losses coincide once every observed edge is positive.
  tc.loss = LossKind::kSignAware;
  EXPECT_EQ(train(pos, cfg, tc).embeddings, direct.embeddings);
}

TEST(Train, ResumesFromGivenState) {
  const auto g = build_signed_graph(20, 20, block_ratings(), 3.5);
  const auto cfg = small_model(Variant::kNoGn);
  auto start = initialize_model(cfg, 20, 20, 99);
  const auto r = train(g, cfg, small_train(1), {}, &start);
  EXPECT_NE(r.state.gnn.embedding, start.gnn.embedding);
  EXPECT_LT(max_abs(r.state.gnn.embedding - start.gnn.embedding), 1.0);
}

TEST(Checkpoint, RoundTripAndValidation) {
  const auto cfg = small_model(Variant::kGnnGn, Backbone::kNgcf);
  const auto s = initialize_model(cfg, 3, 4, 8);
  std::stringstream buf;
  save_checkpoint(buf, cfg, s);
  const auto ck = load_checkpoint(buf);
  EXPECT_EQ(ck.state.num_users, 3u);
  EXPECT_EQ(ck.config.backbone, Backbone::kNgcf);
  auto a = parameter_list(ck.state);
  auto b = parameter_list(s);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].first, b[k].first);
    EXPECT_EQ(*a[k].second, b[k].second->cast<float>().cast<double>());
  }
  std::stringstream bad("NOTACKPT");
  EXPECT_THROW(load_checkpoint(bad), ValidationError);
  std::string truncated = buf.str().substr(0, 40);
  std::stringstream cut(truncated);
  EXPECT_THROW(load_checkpoint(cut), ValidationError);
  std::stringstream mb;
  save_matrix(mb, "z", Matrix::Identity(2, 3));
  EXPECT_EQ(load_matrix(mb), Matrix::Identity(2, 3));
}

TEST(Gradient, TinyInstancesStayClearOfActivationKinks) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    for (auto b : {Backbone::kNgcf, Backbone::kLrGccf}) {
      const auto cfg = small_model(Variant::kMlpGn, b);
      const auto tiny = make_tiny_instance(cfg, seed);
      EXPECT_GE(kink_distance(forward(tiny.inputs, tiny.state, cfg)), kMinKinkDistance);
    }
  }
}
