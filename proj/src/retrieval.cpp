#include "guitod/retrieval.hpp"

#include <nlohmann/json.hpp>

#include "guitod/error.hpp"
#include "guitod/features.hpp"

namespace guitod {

Eigen::VectorXd RetrievalResponder::key(const DataPoint& dp) const {
  FeatureBundle f = featurize(dp, config_);
  const auto& items = f.item_feats();
  Eigen::VectorXd out(f.dialogue_vec.size() + items.cols());
  out.head(f.dialogue_vec.size()) = f.dialogue_vec;
  if (items.rows() > 0) {
    out.tail(items.cols()) = items.colwise().mean().transpose();
  } else {
    out.tail(items.cols()).setZero();
  }
  return out;
}

RetrievalResponder RetrievalResponder::fit(const std::vector<DataPoint>& train, const PolicyConfig& config) {
  RetrievalResponder r;
  r.config_ = config;
  std::vector<Eigen::VectorXd> rows;
  for (const auto& dp : train) {
    if (!dp.turn_final) continue;
    rows.push_back(r.key(dp));
    r.responses_.push_back(dp.gold_response);
  }
  const auto width = static_cast<Eigen::Index>(item_feature_width(config.hash_dim) + config.hash_dim);
  r.keys_.resize(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) r.keys_.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  r.norms_ = r.keys_.rowwise().norm();
  return r;
}

std::size_t RetrievalResponder::nearest(const Eigen::VectorXd& query) const {
  if (responses_.empty()) throw TrainingError("retrieval index is empty");
  const double qn = query.norm();
  std::size_t best = 0;
  double best_sim = -2.0;
  for (Eigen::Index i = 0; i < keys_.rows(); ++i) {
    double denom = qn * norms_(i);
    double sim = denom > 0.0 ? keys_.row(i).dot(query) / denom : 0.0;
    if (sim > best_sim) {
      best_sim = sim;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

const std::string& RetrievalResponder::respond(const DataPoint& dp) const {
  if (responses_.empty()) throw TrainingError("retrieval index is empty");
  return responses_[nearest(key(dp))];
}

nlohmann::json RetrievalResponder::to_json() const {
  std::vector<double> data(keys_.size());
  // Row-major so each key is contiguous in the file.
  for (Eigen::Index i = 0; i < keys_.rows(); ++i) {
    for (Eigen::Index j = 0; j < keys_.cols(); ++j) data[static_cast<std::size_t>(i * keys_.cols() + j)] = keys_(i, j);
  }
  return {{"format", "gui-tod-retrieval"},
          {"version", 1},
          {"config", config_to_json(config_)},
          {"shape", {keys_.rows(), keys_.cols()}},
          {"keys", std::move(data)},
          {"responses", responses_}};
}

RetrievalResponder RetrievalResponder::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "gui-tod-retrieval" || j.at("version") != 1) {
      throw ValidationError("not a retrieval index file");
    }
    RetrievalResponder r;
    r.config_ = config_from_json(j.at("config"));
    auto rows = j.at("shape").at(0).get<Eigen::Index>();
    auto cols = j.at("shape").at(1).get<Eigen::Index>();
    const auto& data = j.at("keys");
    r.responses_ = j.at("responses").get<std::vector<std::string>>();
    if (data.size() != static_cast<std::size_t>(rows * cols) ||
        r.responses_.size() != static_cast<std::size_t>(rows)) {
      throw ValidationError("retrieval index sizes disagree");
    }
    r.keys_.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index k = 0; k < cols; ++k) r.keys_(i, k) = data[static_cast<std::size_t>(i * cols + k)].get<double>();
    }
    r.norms_ = r.keys_.rowwise().norm();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed retrieval index: ") + e.what());
  }
}

}  // namespace guitod
