#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "guitod/policy.hpp"

namespace guitod {

/// Training-split statistics the frequency baselines sample from.
struct ActionCounts {
  std::array<std::size_t, kNumActionTypes> type{};
  std::map<std::size_t, std::size_t> item;
  std::array<std::size_t, 2> direction{};
  std::map<std::string, std::size_t> input_text;
  std::map<std::string, std::size_t> response;
  std::size_t n_points = 0;

  bool operator==(const ActionCounts&) const = default;
};

ActionCounts fit_counts(const std::vector<DataPoint>& train);

nlohmann::json counts_to_json(const ActionCounts& counts);
ActionCounts counts_from_json(const nlohmann::json& j);

/// Uniform over the action types that have a feasible parameter on the
/// current screen, then a uniform feasible parameter. Each data point draws
/// from its own stream keyed by (seed, point), so results do not depend on
/// evaluation order.
class RandomBaseline : public Policy {
 public:
  explicit RandomBaseline(std::uint64_t seed, std::size_t max_span = 10) : seed_(seed), max_span_(max_span) {}
  std::string name() const override { return "random"; }
  Action predict_action(const DataPoint& dp) const override;

 private:
  std::uint64_t seed_;
  std::size_t max_span_;
};

/// Samples the type from training frequencies, then the parameter from that
/// type's training frequencies; a never-seen parameter falls back to uniform.
/// Responses are sampled from the training responses.
class FrequencyBaseline : public Policy {
 public:
  /// Throws TrainingError when `counts` is empty.
  FrequencyBaseline(ActionCounts counts, std::uint64_t seed);
  std::string name() const override { return "fm"; }
  Action predict_action(const DataPoint& dp) const override;
  std::optional<std::string> respond(const DataPoint& dp) const override;

 private:
  ActionCounts counts_;
  std::uint64_t seed_;
};

/// Always the modal type with its modal parameter and the modal response.
/// Ties go to the lower enum index, item index or string.
class MostFrequentBaseline : public Policy {
 public:
  /// Throws TrainingError when `counts` is empty.
  explicit MostFrequentBaseline(const ActionCounts& counts);
  std::string name() const override { return "mfm"; }
  Action predict_action(const DataPoint&) const override { return action_; }
  std::optional<std::string> respond(const DataPoint&) const override { return response_; }

  const Action& action() const { return action_; }

 private:
  Action action_;
  std::optional<std::string> response_;
};

}  // namespace guitod
