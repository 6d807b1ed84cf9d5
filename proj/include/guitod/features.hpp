#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "guitod/config.hpp"
#include "guitod/corpus.hpp"

namespace guitod {

/// Item type one-hot slots: the known types plus "Unknown".
inline constexpr std::size_t kItemTypeSlots = 19;
/// Normalized l, t, r, b and area.
inline constexpr std::size_t kGeometrySlots = 5;
/// Token overlap of the item text with the current utterance and with the
/// earlier dialogue.
inline constexpr std::size_t kOverlapSlots = 2;
/// Per dialogue token: in current utterance, spoken by the user, recency,
/// appears in an item text on the current screen.
inline constexpr std::size_t kTokenExtraSlots = 4;

inline std::size_t item_feature_width(std::size_t hash_dim) {
  return hash_dim + kItemTypeSlots + kGeometrySlots + kOverlapSlots;
}
inline std::size_t token_feature_width(std::size_t hash_dim) {
  return hash_dim + kTokenExtraSlots;
}

struct DialogueToken {
  std::string text;
  /// Index into DataPoint::dialogue_history.
  std::size_t utterance = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const DialogueToken&) const = default;
};

/// Deterministic numeric view of one data point.
///
/// The trunk sees a hashed bag of dialogue tokens salted with how many
/// utterances ago each was spoken, so reordering turns changes the vector.
/// Items carry hashed text, a type one-hot, normalized geometry and lexical
/// overlap with the dialogue; these geometric and type cues stand in for
/// region image features.
struct FeatureBundle {
  Eigen::VectorXd dialogue_vec;
  /// n x token_feature_width, one row per kept dialogue token.
  Eigen::MatrixXd dialogue_token_feats;
  /// H x 7; the last row is the most recent action, missing rows are zero.
  Eigen::MatrixXd action_hist;
  /// Oldest to current screen, at most H entries, each k_s x item_feature_width.
  std::vector<Eigen::MatrixXd> screen_item_feats;
  std::vector<DialogueToken> tokens;
  /// The dialogue utterances the tokens point into.
  std::vector<std::string> utterances;

  const Eigen::MatrixXd& item_feats() const { return screen_item_feats.back(); }
  std::size_t item_count() const { return static_cast<std::size_t>(item_feats().rows()); }
  std::size_t token_count() const { return tokens.size(); }

  bool operator==(const FeatureBundle& o) const;
};

/// Truncation keeps the most recent `max_dialogue_tokens` tokens and the most
/// recent H actions and screens.
FeatureBundle featurize(const DataPoint& dp, const PolicyConfig& config);

/// (bucket, sign) of a string under the configured hash.
std::pair<std::size_t, double> hash_feature(std::string_view s, const PolicyConfig& config);

/// Token span of the gold Input text inside the kept dialogue tokens. With
/// several occurrences the one in the most recent utterance wins, and within
/// it the last one.
std::optional<std::pair<std::size_t, std::size_t>> label_span(const FeatureBundle& f,
                                                              std::string_view input_text);

/// Text for tokens s..e. A span inside one utterance is cut from the original
/// string, preserving case; otherwise the normalized tokens are joined.
std::string span_text(const FeatureBundle& f, std::size_t s, std::size_t e);

}  // namespace guitod
