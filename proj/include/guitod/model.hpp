#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "guitod/actions.hpp"
#include "guitod/config.hpp"
#include "guitod/features.hpp"

namespace guitod {

struct ModelShape {
  std::size_t d = 0;
  std::size_t trunk_layers = 1;
  std::size_t hash_dim = 0;
  std::size_t history = 1;

  std::size_t item_width() const { return item_feature_width(hash_dim); }
  std::size_t token_width() const { return token_feature_width(hash_dim); }
  /// dialogue_vec, flattened action history, pooled item features.
  std::size_t trunk_input() const { return hash_dim + kNumActionTypes * history + d; }

  static ModelShape from_config(const PolicyConfig& c) {
    return {c.d, c.trunk_layers, c.hash_dim, c.history};
  }
  bool operator==(const ModelShape&) const = default;
};

/// Trainable weights of the reference action policy. The same type holds
/// gradients and optimizer state.
struct PolicyParams {
  ModelShape shape;

  // Item projection into model space.
  Eigen::MatrixXd item_proj;       // d x item_width
  Eigen::VectorXd item_proj_bias;  // d

  // Screen-history attention: query from the newer screen, key and value
  // from the folded history.
  Eigen::MatrixXd attn_query;  // d x d
  Eigen::MatrixXd attn_key;    // d x d
  Eigen::MatrixXd attn_value;  // d x d

  std::vector<Eigen::MatrixXd> trunk_weight;  // d x trunk_input, then d x d
  std::vector<Eigen::VectorXd> trunk_bias;

  // Action type head.
  Eigen::MatrixXd type_weight;  // 7 x d
  Eigen::VectorXd type_bias;

  // Span heads over dialogue tokens.
  Eigen::MatrixXd token_weight;   // d x token_width
  Eigen::MatrixXd token_context;  // d x d
  Eigen::VectorXd token_bias;     // d
  Eigen::VectorXd span_start;     // d
  Eigen::VectorXd span_end;       // d

  // Target item head.
  Eigen::MatrixXd item_weight;   // d x d
  Eigen::MatrixXd item_context;  // d x d
  Eigen::VectorXd item_bias;     // d
  Eigen::VectorXd item_score;    // d

  // Swipe direction head.
  Eigen::MatrixXd dir_weight;  // 2 x d
  Eigen::VectorXd dir_bias;

  static PolicyParams zeros(const ModelShape& shape);
  /// Gaussian init scaled by init_scale / sqrt(fan_in); biases zero.
  static PolicyParams random(const ModelShape& shape, std::uint64_t seed, double init_scale);

  /// Calls f(name, block) for every tensor in a fixed order.
  template <typename F>
  void for_each_block(F&& f) {
    f("item_proj", item_proj);
    f("item_proj_bias", item_proj_bias);
    f("attn_query", attn_query);
    f("attn_key", attn_key);
    f("attn_value", attn_value);
    for (std::size_t i = 0; i < trunk_weight.size(); ++i) {
      f("trunk_weight." + std::to_string(i), trunk_weight[i]);
      f("trunk_bias." + std::to_string(i), trunk_bias[i]);
    }
    f("type_weight", type_weight);
    f("type_bias", type_bias);
    f("token_weight", token_weight);
    f("token_context", token_context);
    f("token_bias", token_bias);
    f("span_start", span_start);
    f("span_end", span_end);
    f("item_weight", item_weight);
    f("item_context", item_context);
    f("item_bias", item_bias);
    f("item_score", item_score);
    f("dir_weight", dir_weight);
    f("dir_bias", dir_bias);
  }
  template <typename F>
  void for_each_block(F&& f) const {
    const_cast<PolicyParams*>(this)->for_each_block(
        [&](const std::string& name, auto& block) { f(name, std::as_const(block)); });
  }

  std::size_t parameter_count() const;
  void set_zero();
  void scale(double factor);
  /// this += scale * other
  void add_scaled(const PolicyParams& other, double scale);
  double squared_norm() const;
  bool all_finite() const;

  bool operator==(const PolicyParams& o) const;
};

/// Probability outputs of every head for one data point.
struct HeadOutputs {
  Eigen::VectorXd action_type;  // 7
  Eigen::VectorXd span_start;   // n tokens
  Eigen::VectorXd span_end;     // n tokens
  Eigen::VectorXd item;         // k items (empty when k = 0)
  Eigen::VectorXd direction;    // 2 (up, down)
};

/// Supervision for one data point. Parameter targets are set only for the
/// head the gold type uses.
struct Targets {
  ActionType type = ActionType::End;
  std::optional<std::size_t> item;
  std::optional<Direction> direction;
  std::optional<std::pair<std::size_t, std::size_t>> span;
};

Targets make_targets(const Action& gold, const FeatureBundle& features);

/// Intermediate values of one screen-history fold, kept for the backward pass.
struct FoldCache {
  std::vector<Eigen::MatrixXd> inputs;   // padded to the current k
  std::vector<Eigen::MatrixXd> history;  // folded state before each step
  std::vector<Eigen::MatrixXd> query, key, value, attention;
  std::vector<Eigen::Index> original_rows;
};

/// Recurrent attention over screen history, oldest first:
///   state_1 = screens_1
///   state_{i+1} = softmax((screens_{i+1} Wq^T)(state_i Wk^T)^T / sqrt(d)) (state_i Wv^T) + screens_{i+1}
/// Every matrix is first zero-padded or truncated to the row count of the last
/// one. A single-screen sequence is returned unchanged. Throws
/// std::invalid_argument on an empty sequence.
Eigen::MatrixXd fold_screen_history(const std::vector<Eigen::MatrixXd>& screens,
                                    const Eigen::MatrixXd& w_query, const Eigen::MatrixXd& w_key,
                                    const Eigen::MatrixXd& w_value, FoldCache* cache = nullptr);

/// Backward pass of fold_screen_history. Accumulates into the weight
/// gradients and returns one gradient per input screen, shaped like the
/// unpadded input.
std::vector<Eigen::MatrixXd> fold_screen_history_backward(
    const FoldCache& cache, const Eigen::MatrixXd& d_out, const Eigen::MatrixXd& w_query,
    const Eigen::MatrixXd& w_key, const Eigen::MatrixXd& w_value, Eigen::MatrixXd& d_query,
    Eigen::MatrixXd& d_key, Eigen::MatrixXd& d_value);

HeadOutputs forward(const PolicyParams& params, const FeatureBundle& features);

/// Summed cross-entropy of the type head plus the masked parameter head.
double head_loss(const HeadOutputs& heads, const Targets& targets);
double example_loss(const PolicyParams& params, const FeatureBundle& features, const Targets& targets);

/// Same loss; accumulates weight * dloss/dparams into `grad`.
double example_loss_and_gradient(const PolicyParams& params, const FeatureBundle& features,
                                 const Targets& targets, PolicyParams& grad, double weight = 1.0);

nlohmann::json params_to_json(const PolicyParams& params);
PolicyParams params_from_json(const nlohmann::json& j);

}  // namespace guitod
