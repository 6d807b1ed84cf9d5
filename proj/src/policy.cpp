#include "guitod/policy.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "guitod/error.hpp"

namespace guitod {

namespace fs = std::filesystem;

namespace {

std::size_t argmax(const Eigen::VectorXd& v) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
  }
  return best;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(p.string() + ": " + e.what(), e.byte);
  }
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace

std::optional<std::pair<std::size_t, std::size_t>> best_span(const Eigen::VectorXd& start,
                                                             const Eigen::VectorXd& end,
                                                             std::size_t max_span) {
  const auto n = static_cast<std::size_t>(std::min(start.size(), end.size()));
  if (n == 0) return std::nullopt;
  std::pair<std::size_t, std::size_t> best{0, 0};
  double best_score = -1.0;
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t last = std::min(n - 1, s + max_span);
    for (std::size_t e = s; e <= last; ++e) {
      double score = start(static_cast<Eigen::Index>(s)) * end(static_cast<Eigen::Index>(e));
      if (score > best_score) {
        best_score = score;
        best = {s, e};
      }
    }
  }
  return best;
}

Action decode(const HeadOutputs& heads, const FeatureBundle& f, std::size_t max_span) {
  std::array<std::size_t, kNumActionTypes> order;
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return heads.action_type(static_cast<Eigen::Index>(a)) > heads.action_type(static_cast<Eigen::Index>(b));
  });
  for (std::size_t t : order) {
    auto type = static_cast<ActionType>(t);
    switch (type) {
      case ActionType::Click:
        if (heads.item.size() == 0) continue;
        return Action::click(argmax(heads.item));
      case ActionType::Swipe:
        return Action::swipe(static_cast<Direction>(argmax(heads.direction)));
      case ActionType::Input: {
        auto span = best_span(heads.span_start, heads.span_end, max_span);
        if (!span) continue;
        std::string text = span_text(f, span->first, span->second);
        if (text.empty()) continue;
        return Action::input(std::move(text));
      }
      default:
        return Action::of_type(type);
    }
  }
  throw TrainingError("no feasible action type for this data point");
}

ReferencePolicy::ReferencePolicy(PolicyConfig config, PolicyParams params,
                                 std::shared_ptr<const RetrievalResponder> responder)
    : config_(config), params_(std::move(params)), responder_(std::move(responder)) {
  validate_config(config_);
  if (!(params_.shape == ModelShape::from_config(config_))) {
    throw ValidationError("parameter shapes do not match the configuration");
  }
}

std::pair<Action, HeadOutputs> ReferencePolicy::predict(const DataPoint& dp) const {
  FeatureBundle f = featurize(dp, config_);
  HeadOutputs heads = forward(params_, f);
  Action a = decode(heads, f, config_.max_span);
  return {std::move(a), std::move(heads)};
}

Action ReferencePolicy::predict_action(const DataPoint& dp) const { return predict(dp).first; }

std::optional<std::string> ReferencePolicy::respond(const DataPoint& dp) const {
  if (!responder_ || responder_->size() == 0) return std::nullopt;
  return responder_->respond(dp);
}

void ReferencePolicy::save(const fs::path& dir) const {
  fs::create_directories(dir);
  write_json(dir / "config.json", config_to_json(config_));
  write_json(dir / "params.json", params_to_json(params_));
  if (responder_) write_json(dir / "responder.json", responder_->to_json());
}

ReferencePolicy ReferencePolicy::load(const fs::path& dir) {
  PolicyConfig config = config_from_json(read_json(dir / "config.json"));
  PolicyParams params = params_from_json(read_json(dir / "params.json"));
  std::shared_ptr<const RetrievalResponder> responder;
  if (fs::exists(dir / "responder.json")) {
    responder = std::make_shared<RetrievalResponder>(RetrievalResponder::from_json(read_json(dir / "responder.json")));
  }
  return ReferencePolicy(config, std::move(params), std::move(responder));
}

}  // namespace guitod
