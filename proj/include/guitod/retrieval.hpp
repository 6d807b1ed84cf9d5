#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "guitod/config.hpp"
#include "guitod/corpus.hpp"

namespace guitod {

/// Nearest-neighbour response generator over training turns. A turn is keyed
/// by its dialogue vector concatenated with the mean item features of its
/// final screen; the query returns the response of the most cosine-similar
/// key, ties to the earliest training turn.
class RetrievalResponder {
 public:
  /// Indexes the turn-final points of `train`.
  static RetrievalResponder fit(const std::vector<DataPoint>& train, const PolicyConfig& config);

  Eigen::VectorXd key(const DataPoint& dp) const;
  /// Throws TrainingError when the index is empty.
  const std::string& respond(const DataPoint& dp) const;
  std::size_t nearest(const Eigen::VectorXd& query) const;

  std::size_t size() const { return responses_.size(); }
  const std::vector<std::string>& responses() const { return responses_; }

  nlohmann::json to_json() const;
  static RetrievalResponder from_json(const nlohmann::json& j);

 private:
  PolicyConfig config_;
  Eigen::MatrixXd keys_;  // one row per indexed turn
  Eigen::VectorXd norms_;
  std::vector<std::string> responses_;
};

}  // namespace guitod
