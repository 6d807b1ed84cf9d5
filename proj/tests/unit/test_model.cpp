#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "guitod/error.hpp"
#include "guitod/features.hpp"
#include "guitod/model.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace guitod;
namespace gt = guitod::testing;

namespace {

Eigen::MatrixXd gauss(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

ModelShape small_shape(std::size_t d = 6, std::size_t layers = 1, std::size_t hash = 8, std::size_t h = 3) {
  return {d, layers, hash, h};
}

}  // namespace

TEST(Fold, SingleScreenIsIdentity) {
  std::mt19937_64 rng(1);
  for (Eigen::Index k : {0, 1, 4}) {
    Eigen::MatrixXd x = gauss(rng, k, 5);
    Eigen::MatrixXd w = gauss(rng, 5, 5);
    EXPECT_EQ(fold_screen_history({x}, w, w, w), x);
  }
  EXPECT_THROW(fold_screen_history({}, Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2),
                                   Eigen::MatrixXd::Zero(2, 2)),
               std::invalid_argument);
}

TEST(Fold, ZeroValueWeightsReturnCurrentScreen) {
  std::mt19937_64 rng(2);
  const Eigen::Index d = 4;
  Eigen::MatrixXd cur = gauss(rng, 3, d);
  Eigen::MatrixXd out = fold_screen_history({gauss(rng, 5, d), gauss(rng, 2, d), cur}, gauss(rng, d, d),
                                            gauss(rng, d, d), Eigen::MatrixXd::Zero(d, d));
  EXPECT_TRUE(out.isApprox(cur, 1e-15));
}

TEST(Fold, ZeroQueryGivesUniformAttention) {
  std::mt19937_64 rng(3);
  const Eigen::Index d = 4;
  Eigen::MatrixXd prev = gauss(rng, 5, d);  // truncated to 3 rows
  Eigen::MatrixXd cur = gauss(rng, 3, d);
  Eigen::MatrixXd wv = gauss(rng, d, d);
  Eigen::MatrixXd out =
      fold_screen_history({prev, cur}, Eigen::MatrixXd::Zero(d, d), gauss(rng, d, d), wv);
  Eigen::RowVectorXd mean = (prev.topRows(3) * wv.transpose()).colwise().mean();
  Eigen::MatrixXd expect = cur.rowwise() + mean;
  EXPECT_TRUE(out.isApprox(expect, 1e-12));

  // A shorter history is zero-padded: the padding rows attend like any other.
  Eigen::MatrixXd short_prev = gauss(rng, 1, d);
  out = fold_screen_history({short_prev, cur}, Eigen::MatrixXd::Zero(d, d), gauss(rng, d, d), wv);
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(3, d);
  padded.topRows(1) = short_prev;
  mean = (padded * wv.transpose()).colwise().mean();
  expect = cur.rowwise() + mean;
  EXPECT_TRUE(out.isApprox(expect, 1e-12));
}

TEST(Fold, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  const Eigen::Index d = 3;
  std::vector<Eigen::MatrixXd> xs = {gauss(rng, 4, d), gauss(rng, 1, d), gauss(rng, 2, d)};
  Eigen::MatrixXd wq = gauss(rng, d, d), wk = gauss(rng, d, d), wv = gauss(rng, d, d);
  Eigen::MatrixXd r = gauss(rng, 2, d);
  auto loss = [&](const std::vector<Eigen::MatrixXd>& in, const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                  const Eigen::MatrixXd& v) { return fold_screen_history(in, q, k, v).cwiseProduct(r).sum(); };

  FoldCache cache;
  fold_screen_history(xs, wq, wk, wv, &cache);
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(d, d), dk = dq, dv = dq;
  auto dx = fold_screen_history_backward(cache, r, wq, wk, wv, dq, dk, dv);
  ASSERT_EQ(dx.size(), xs.size());
  const double h = 1e-6;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    ASSERT_EQ(dx[s].rows(), xs[s].rows());
    for (Eigen::Index i = 0; i < xs[s].size(); ++i) {
      auto up = xs, down = xs;
      up[s].data()[i] += h;
      down[s].data()[i] -= h;
      EXPECT_NEAR(dx[s].data()[i], (loss(up, wq, wk, wv) - loss(down, wq, wk, wv)) / (2 * h), 1e-6);
    }
  }
  for (auto [w, g] : {std::pair{&wq, &dq}, std::pair{&wk, &dk}, std::pair{&wv, &dv}}) {
    for (Eigen::Index i = 0; i < w->size(); ++i) {
      double orig = w->data()[i];
      w->data()[i] = orig + h;
      double a = loss(xs, wq, wk, wv);
      w->data()[i] = orig - h;
      double b = loss(xs, wq, wk, wv);
      w->data()[i] = orig;
      EXPECT_NEAR(g->data()[i], (a - b) / (2 * h), 1e-6);
    }
  }
}

TEST(Forward, DistributionsSumToOne) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ModelShape shape = small_shape(2 + rng() % 8, 1 + rng() % 2, 4 + rng() % 6, 1 + rng() % 3);
    auto params = PolicyParams::random(shape, rng(), 1.0);
    auto ex = gt::random_labeled_bundle(rng, shape);
    auto heads = forward(params, ex.features);
    EXPECT_NEAR(heads.action_type.sum(), 1.0, 1e-12);
    EXPECT_NEAR(heads.direction.sum(), 1.0, 1e-12);
    EXPECT_EQ(heads.action_type.size(), 7);
    EXPECT_EQ(heads.direction.size(), 2);
    EXPECT_EQ(static_cast<std::size_t>(heads.item.size()), ex.features.item_count());
    if (heads.item.size()) {
      EXPECT_NEAR(heads.item.sum(), 1.0, 1e-12);
    }
    EXPECT_EQ(static_cast<std::size_t>(heads.span_start.size()), ex.features.token_count());
    if (heads.span_start.size()) {
      EXPECT_NEAR(heads.span_start.sum(), 1.0, 1e-12);
      EXPECT_NEAR(heads.span_end.sum(), 1.0, 1e-12);
    }
    EXPECT_TRUE((heads.action_type.array() >= 0).all());
    double loss = example_loss(params, ex.features, ex.targets);
    EXPECT_TRUE(std::isfinite(loss));
    EXPECT_GE(loss, 0.0);
    EXPECT_NEAR(loss, head_loss(heads, ex.targets), 1e-12);
  }
}

TEST(Forward, ZeroParamsAreUniform) {
  std::mt19937_64 rng(6);
  ModelShape shape = small_shape();
  auto params = PolicyParams::zeros(shape);
  auto ex = gt::random_labeled_bundle(rng, shape);
  auto heads = forward(params, ex.features);
  for (Eigen::Index i = 0; i < 7; ++i) EXPECT_NEAR(heads.action_type(i), 1.0 / 7.0, 1e-15);
  ex.targets = Targets{};
  EXPECT_NEAR(example_loss(params, ex.features, ex.targets), std::log(7.0), 1e-12);
}

TEST(Forward, RejectsMismatchedShape) {
  std::mt19937_64 rng(7);
  auto ex = gt::random_labeled_bundle(rng, small_shape(6, 1, 8, 3));
  auto params = PolicyParams::random(small_shape(6, 1, 9, 3), 1, 1.0);
  EXPECT_THROW(forward(params, ex.features), std::invalid_argument);
}

TEST(Gradient, MatchesFiniteDifferencesOnRandomShapes) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 8; ++trial) {
    ModelShape shape = small_shape(2 + rng() % 15, 1 + rng() % 2, 4 + rng() % 5, 1 + rng() % 3);
    auto params = PolicyParams::random(shape, rng(), 1.0);
    std::vector<gt::LabeledBundle> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(gt::random_labeled_bundle(rng, shape));
    for (const auto& e : gt::gradient_check(params, batch)) {
      EXPECT_LE(e.rel_error, 1e-4) << "block " << e.block << " d=" << shape.d << " layers=" << shape.trunk_layers;
    }
  }
}

TEST(Gradient, EveryTargetKindReachesItsHead) {
  std::mt19937_64 rng(9);
  ModelShape shape = small_shape();
  auto params = PolicyParams::random(shape, 3, 1.0);
  auto ex = gt::random_labeled_bundle(rng, shape);
  while (ex.features.item_count() == 0 || ex.features.token_count() < 2) {
    ex = gt::random_labeled_bundle(rng, shape);
  }
  auto head_norm = [&](Targets t, const char* block) {
    PolicyParams g = PolicyParams::zeros(shape);
    example_loss_and_gradient(params, ex.features, t, g);
    double n = -1;
    g.for_each_block([&](const std::string& name, const auto& b) {
      if (name == block) n = b.norm();
    });
    return n;
  };
  Targets t;
  t.type = ActionType::Click;
  EXPECT_EQ(head_norm(t, "item_score"), 0.0);
  t.item = 0;
  EXPECT_GT(head_norm(t, "item_score"), 0.0);
  t = {};
  t.type = ActionType::Input;
  EXPECT_EQ(head_norm(t, "span_start"), 0.0);
  t.span = std::make_pair(std::size_t{0}, std::size_t{1});
  EXPECT_GT(head_norm(t, "span_start"), 0.0);
  EXPECT_EQ(head_norm(t, "dir_weight"), 0.0);
}

TEST(Gradient, WeightScalesAccumulation) {
  std::mt19937_64 rng(10);
  ModelShape shape = small_shape();
  auto params = PolicyParams::random(shape, 4, 1.0);
  auto ex = gt::random_labeled_bundle(rng, shape);
  PolicyParams g1 = PolicyParams::zeros(shape), g2 = PolicyParams::zeros(shape);
  example_loss_and_gradient(params, ex.features, ex.targets, g1);
  example_loss_and_gradient(params, ex.features, ex.targets, g2, 0.5);
  g1.scale(0.5);
  g1.add_scaled(g2, -1.0);
  EXPECT_LT(g1.squared_norm(), 1e-24);
}

TEST(Params, JsonRoundTrip) {
  auto params = PolicyParams::random(small_shape(5, 2, 7, 2), 11, 1.0);
  auto j = params_to_json(params);
  EXPECT_EQ(j["format"], "gui-tod-policy-params");
  auto back = params_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_TRUE(back == params);
  EXPECT_EQ(back.parameter_count(), params.parameter_count());

  auto bad = j;
  bad["format"] = "other";
  EXPECT_THROW(params_from_json(bad), ValidationError);
  bad = j;
  bad["tensors"]["type_bias"]["data"].erase(0);
  EXPECT_THROW(params_from_json(bad), ValidationError);
  bad = j;
  bad["tensors"].erase("dir_bias");
  EXPECT_THROW(params_from_json(bad), ValidationError);
}

TEST(Params, RandomIsSeeded) {
  auto shape = small_shape();
  EXPECT_TRUE(PolicyParams::random(shape, 1, 1.0) == PolicyParams::random(shape, 1, 1.0));
  EXPECT_FALSE(PolicyParams::random(shape, 1, 1.0) == PolicyParams::random(shape, 2, 1.0));
  auto p = PolicyParams::random(shape, 1, 1.0);
  EXPECT_TRUE(p.all_finite());
  EXPECT_EQ(p.type_bias.norm(), 0.0);
  p.set_zero();
  EXPECT_EQ(p.squared_norm(), 0.0);
}

TEST(Features, FixedWidthsAndDeterminism) {
  std::mt19937_64 rng(12);
  PolicyConfig cfg;
  cfg.hash_dim = 16;
  cfg.history = 2;
  cfg.max_dialogue_tokens = 12;
  auto pts = expand_data_points(gt::random_corpus(rng));
  for (const auto& p : pts) {
    auto f = featurize(p, cfg);
    EXPECT_TRUE(f == featurize(p, cfg));
    EXPECT_EQ(f.dialogue_vec.size(), 16);
    EXPECT_LE(f.token_count(), 12u);
    EXPECT_EQ(f.dialogue_token_feats.rows(), static_cast<Eigen::Index>(f.token_count()));
    EXPECT_EQ(f.action_hist.rows(), 2);
    EXPECT_EQ(f.action_hist.sum(), static_cast<double>(std::min<std::size_t>(2, p.action_history.size())));
    EXPECT_EQ(f.screen_item_feats.size(), std::min<std::size_t>(2, p.screen_history.size()));
    EXPECT_EQ(f.item_count(), p.current_screen().items.size());
    for (const auto& m : f.screen_item_feats) EXPECT_EQ(m.cols(), static_cast<Eigen::Index>(item_feature_width(16)));
  }
}

TEST(Features, SpanLabelPrefersMostRecentUtterance) {
  DataPoint dp;
  dp.dialogue_history = {"Book for 7 pm please", "Sure.", "Actually 7 PM, not 7 pm later"};
  dp.screen_history = {gt::make_screen({{"Time"}})};
  auto f = featurize(dp, PolicyConfig{});
  auto span = label_span(f, "7 pm");
  ASSERT_TRUE(span.has_value());
  // Last occurrence in the last utterance.
  EXPECT_EQ(f.tokens[span->first].utterance, 2u);
  EXPECT_EQ(span_text(f, span->first, span->second), "7 pm");
  auto first = label_span(f, "Actually 7 PM");
  ASSERT_TRUE(first.has_value());
  EXPECT_EQ(span_text(f, first->first, first->second), "Actually 7 PM");
  EXPECT_FALSE(label_span(f, "8 pm").has_value());
  // A phrase straddling two utterances is not a span.
  EXPECT_FALSE(label_span(f, "please sure").has_value());
  EXPECT_FALSE(label_span(f, "").has_value());

  auto t = make_targets(Action::input("7 PM"), f);
  EXPECT_EQ(t.span, span);
  t = make_targets(Action::click(5), f);
  EXPECT_FALSE(t.item.has_value());
}

TEST(Features, TruncationKeepsMostRecentTokens) {
  DataPoint dp;
  dp.dialogue_history = {"one two three", "four five", "six seven eight"};
  dp.screen_history = {gt::make_screen({})};
  PolicyConfig cfg;
  cfg.max_dialogue_tokens = 4;
  auto f = featurize(dp, cfg);
  ASSERT_EQ(f.token_count(), 4u);
  EXPECT_EQ(f.tokens.front().text, "five");
  EXPECT_EQ(f.item_count(), 0u);
}
