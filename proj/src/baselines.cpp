#include "guitod/baselines.hpp"

#include <random>

#include <nlohmann/json.hpp>

#include "guitod/error.hpp"
#include "guitod/text.hpp"
#include "random.hpp"

namespace guitod {

namespace {

std::mt19937_64 point_rng(std::uint64_t seed, const DataPointKey& key) {
  return std::mt19937_64(detail::mix(seed, detail::stable_hash(to_string(key))));
}

template <typename K>
const K* modal(const std::map<K, std::size_t>& counts) {
  const K* best = nullptr;
  std::size_t best_n = 0;
  for (const auto& [k, n] : counts) {
    if (n > best_n) {
      best = &k;
      best_n = n;
    }
  }
  return best;
}

template <typename K>
const K* sample(const std::map<K, std::size_t>& counts, std::mt19937_64& rng) {
  if (counts.empty()) return nullptr;
  std::vector<double> w;
  std::vector<const K*> keys;
  for (const auto& [k, n] : counts) {
    w.push_back(static_cast<double>(n));
    keys.push_back(&k);
  }
  return keys[detail::sample_weighted(rng, w)];
}

// Uniform span of at most max_span + 1 tokens in the current utterance.
std::optional<std::string> random_span(const DataPoint& dp, std::size_t max_span, std::mt19937_64& rng) {
  const std::string& utt = dp.current_utterance();
  auto toks = tokenize_with_spans(utt);
  if (toks.empty()) return std::nullopt;
  std::size_t s = detail::uniform_index(rng, toks.size());
  std::size_t longest = std::min(max_span, toks.size() - 1 - s);
  std::size_t e = s + detail::uniform_index(rng, longest + 1);
  return utt.substr(toks[s].begin, toks[e].end - toks[s].begin);
}

bool has_tokens(const DataPoint& dp) { return !tokenize(dp.current_utterance()).empty(); }

void require_fitted(const ActionCounts& c, const char* which) {
  if (c.n_points == 0) {
    throw TrainingError(std::string(which) + " baseline needs counts fitted on a non-empty training split");
  }
}

}  // namespace

ActionCounts fit_counts(const std::vector<DataPoint>& train) {
  ActionCounts c;
  for (const auto& dp : train) {
    ++c.n_points;
    ++c.type[static_cast<std::size_t>(dp.gold.type())];
    switch (dp.gold.type()) {
      case ActionType::Click:
        ++c.item[dp.gold.item()];
        break;
      case ActionType::Swipe:
        ++c.direction[static_cast<std::size_t>(dp.gold.direction())];
        break;
      case ActionType::Input:
        ++c.input_text[dp.gold.text()];
        break;
      default:
        break;
    }
    if (dp.turn_final) ++c.response[dp.gold_response];
  }
  return c;
}

nlohmann::json counts_to_json(const ActionCounts& c) {
  nlohmann::json types = nlohmann::json::object();
  for (ActionType t : kAllActionTypes) types[std::string(to_string(t))] = c.type[static_cast<std::size_t>(t)];
  nlohmann::json items = nlohmann::json::object();
  for (const auto& [k, n] : c.item) items[std::to_string(k)] = n;
  return {{"n_points", c.n_points},
          {"type", types},
          {"item", items},
          {"direction", {{"up", c.direction[0]}, {"down", c.direction[1]}}},
          {"input_text", c.input_text},
          {"response", c.response}};
}

ActionCounts counts_from_json(const nlohmann::json& j) {
  try {
    ActionCounts c;
    c.n_points = j.at("n_points").get<std::size_t>();
    for (const auto& [name, n] : j.at("type").items()) {
      c.type[static_cast<std::size_t>(action_type_from_string(name))] = n.get<std::size_t>();
    }
    for (const auto& [idx, n] : j.at("item").items()) c.item[std::stoul(idx)] = n.get<std::size_t>();
    c.direction[0] = j.at("direction").at("up").get<std::size_t>();
    c.direction[1] = j.at("direction").at("down").get<std::size_t>();
    c.input_text = j.at("input_text").get<std::map<std::string, std::size_t>>();
    c.response = j.at("response").get<std::map<std::string, std::size_t>>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed counts: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ValidationError(std::string("malformed counts: ") + e.what());
  }
}

Action RandomBaseline::predict_action(const DataPoint& dp) const {
  auto rng = point_rng(seed_, dp.key);
  const std::size_t k = dp.current_screen().items.size();
  std::vector<ActionType> feasible;
  for (ActionType t : kAllActionTypes) {
    if (t == ActionType::Click && k == 0) continue;
    if (t == ActionType::Input && !has_tokens(dp)) continue;
    feasible.push_back(t);
  }
  ActionType t = feasible[detail::uniform_index(rng, feasible.size())];
  switch (t) {
    case ActionType::Click:
      return Action::click(detail::uniform_index(rng, k));
    case ActionType::Swipe:
      return Action::swipe(static_cast<Direction>(detail::uniform_index(rng, 2)));
    case ActionType::Input:
      return Action::input(*random_span(dp, max_span_, rng));
    default:
      return Action::of_type(t);
  }
}

FrequencyBaseline::FrequencyBaseline(ActionCounts counts, std::uint64_t seed)
    : counts_(std::move(counts)), seed_(seed) {
  require_fitted(counts_, "FM");
}

Action FrequencyBaseline::predict_action(const DataPoint& dp) const {
  auto rng = point_rng(seed_, dp.key);
  const std::size_t k = dp.current_screen().items.size();
  std::vector<double> w(kNumActionTypes);
  for (std::size_t i = 0; i < kNumActionTypes; ++i) w[i] = static_cast<double>(counts_.type[i]);
  if (k == 0) w[static_cast<std::size_t>(ActionType::Click)] = 0.0;
  if (counts_.input_text.empty() && !has_tokens(dp)) w[static_cast<std::size_t>(ActionType::Input)] = 0.0;
  double total = 0.0;
  for (double x : w) total += x;
  if (total == 0.0) w[static_cast<std::size_t>(ActionType::End)] = 1.0;

  auto t = static_cast<ActionType>(detail::sample_weighted(rng, w));
  switch (t) {
    case ActionType::Click: {
      std::map<std::size_t, std::size_t> on_screen;
      for (const auto& [idx, n] : counts_.item) {
        if (idx < k) on_screen.emplace(idx, n);
      }
      const std::size_t* idx = sample(on_screen, rng);
      return Action::click(idx ? *idx : detail::uniform_index(rng, k));
    }
    case ActionType::Swipe: {
      std::vector<double> dw{static_cast<double>(counts_.direction[0]), static_cast<double>(counts_.direction[1])};
      if (dw[0] + dw[1] == 0.0) dw = {1.0, 1.0};
      return Action::swipe(static_cast<Direction>(detail::sample_weighted(rng, dw)));
    }
    case ActionType::Input: {
      const std::string* text = sample(counts_.input_text, rng);
      return Action::input(text ? *text : *random_span(dp, 10, rng));
    }
    default:
      return Action::of_type(t);
  }
}

std::optional<std::string> FrequencyBaseline::respond(const DataPoint& dp) const {
  auto rng = point_rng(detail::mix(seed_, 0x52455350ULL), dp.key);
  const std::string* r = sample(counts_.response, rng);
  if (!r) return std::nullopt;
  return *r;
}

MostFrequentBaseline::MostFrequentBaseline(const ActionCounts& counts) {
  require_fitted(counts, "MFM");
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumActionTypes; ++i) {
    if (counts.type[i] > counts.type[best]) best = i;
  }
  auto t = static_cast<ActionType>(best);
  switch (t) {
    case ActionType::Click: {
      const std::size_t* idx = modal(counts.item);
      if (!idx) throw ValidationError("counts report Click actions but no item indices");
      action_ = Action::click(*idx);
      break;
    }
    case ActionType::Swipe:
      action_ = Action::swipe(counts.direction[1] > counts.direction[0] ? Direction::Down : Direction::Up);
      break;
    case ActionType::Input: {
      const std::string* text = modal(counts.input_text);
      if (!text) throw ValidationError("counts report Input actions but no input texts");
      action_ = Action::input(*text);
      break;
    }
    default:
      action_ = Action::of_type(t);
  }
  if (const std::string* r = modal(counts.response)) response_ = *r;
}

}  // namespace guitod
