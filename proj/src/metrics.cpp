#include "guitod/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "guitod/error.hpp"
#include "guitod/text.hpp"

namespace guitod {

EmF1 input_em_f1(std::string_view pred_text, std::string_view gold_text) {
  auto pred = tokenize(pred_text);
  auto gold = tokenize(gold_text);
  EmF1 r;
  r.em = pred == gold ? 1.0 : 0.0;
  if (pred.empty() && gold.empty()) {
    r.f1 = 1.0;
    return r;
  }
  if (pred.empty() || gold.empty()) return r;

  std::unordered_map<std::string, std::size_t> gold_counts;
  for (const auto& t : gold) ++gold_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : pred) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return r;
  double p = static_cast<double>(overlap) / static_cast<double>(pred.size());
  double rc = static_cast<double>(overlap) / static_cast<double>(gold.size());
  r.f1 = 2.0 * p * rc / (p + rc);
  return r;
}

namespace {

// Predictions reordered to match gold. Throws CoverageError on any mismatch.
std::vector<const Prediction*> align(const std::vector<Prediction>& preds,
                                     const std::vector<DataPoint>& gold) {
  std::map<DataPointKey, std::size_t> gold_index;
  for (std::size_t i = 0; i < gold.size(); ++i) gold_index.emplace(gold[i].key, i);

  std::vector<const Prediction*> aligned(gold.size(), nullptr);
  std::vector<std::string> duplicates, unknown, missing;
  for (const auto& p : preds) {
    auto it = gold_index.find(p.key);
    if (it == gold_index.end()) {
      unknown.push_back(to_string(p.key));
    } else if (aligned[it->second] != nullptr) {
      duplicates.push_back(to_string(p.key));
    } else {
      aligned[it->second] = &p;
    }
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (aligned[i] == nullptr) missing.push_back(to_string(gold[i].key));
  }
  if (duplicates.empty() && unknown.empty() && missing.empty()) return aligned;

  auto list = [](const char* label, const std::vector<std::string>& keys) {
    if (keys.empty()) return std::string();
    std::string s = std::string(" ") + label + " (" + std::to_string(keys.size()) + "):";
    for (std::size_t i = 0; i < keys.size() && i < 20; ++i) s += " " + keys[i];
    if (keys.size() > 20) s += " ...";
    return s;
  };
  throw CoverageError("predictions do not cover the gold data points exactly once;" +
                      list("missing", missing) + list("duplicate", duplicates) +
                      list("unknown", unknown));
}

bool completed(const Prediction* p, const DataPoint& g) {
  return p->predicted && actions_equal(*p->predicted, g.gold);
}

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

MetricValues compute(const std::vector<const Prediction*>& preds, const std::vector<const DataPoint*>& gold) {
  MetricValues v;
  v.n_points = gold.size();
  std::size_t type_hits = 0, item_hits = 0, dir_hits = 0;
  double em_sum = 0.0, f1_sum = 0.0;
  bool any_response = false;
  std::vector<std::string> cands, refs;

  // Turns are contiguous runs of the same (episode, turn) in expansion order,
  // but group by key so the result does not depend on ordering.
  std::map<std::pair<std::string, std::size_t>, std::pair<bool, std::size_t>> turns;

  for (std::size_t i = 0; i < gold.size(); ++i) {
    const DataPoint& g = *gold[i];
    const Prediction* p = preds[i];
    if (!p->predicted) ++v.n_failed_predictions;
    if (p->response) any_response = true;
    bool done = completed(p, g);
    if (done) ++v.n_completed_actions;
    auto& turn = turns.try_emplace({g.key.episode_id, g.key.turn}, true, 0).first->second;
    turn.first = turn.first && done;
    ++turn.second;

    bool type_ok = p->predicted && p->predicted->type() == g.gold.type();
    if (type_ok) ++type_hits;
    switch (g.gold.type()) {
      case ActionType::Click:
        ++v.n_click;
        if (type_ok && p->predicted->item() == g.gold.item()) ++item_hits;
        break;
      case ActionType::Swipe:
        ++v.n_swipe;
        if (type_ok && p->predicted->direction() == g.gold.direction()) ++dir_hits;
        break;
      case ActionType::Input:
        ++v.n_input;
        if (type_ok) {
          auto s = input_em_f1(p->predicted->text(), g.gold.text());
          em_sum += s.em;
          f1_sum += s.f1;
        }
        break;
      default:
        break;
    }
    if (g.turn_final) {
      cands.push_back(p->response.value_or(""));
      refs.push_back(g.gold_response);
    }
  }

  v.n_turns = turns.size();
  for (const auto& [key, t] : turns) {
    if (t.first) {
      ++v.n_completed_turns;
      v.n_actions_in_completed_turns += t.second;
    }
  }
  v.action_type_acc = percent(type_hits, v.n_points);
  v.action_cr = percent(v.n_completed_actions, v.n_points);
  v.turn_cr = percent(v.n_completed_turns, v.n_turns);
  if (v.n_click > 0) v.item_acc = percent(item_hits, v.n_click);
  if (v.n_swipe > 0) v.direction_acc = percent(dir_hits, v.n_swipe);
  if (v.n_input > 0) {
    v.input_em = 100.0 * em_sum / static_cast<double>(v.n_input);
    v.input_f1 = 100.0 * f1_sum / static_cast<double>(v.n_input);
  }
  if (any_response && !cands.empty()) v.response_bleu = corpus_bleu(cands, refs);
  return v;
}

std::vector<const DataPoint*> pointers(const std::vector<DataPoint>& gold) {
  std::vector<const DataPoint*> out;
  out.reserve(gold.size());
  for (const auto& g : gold) out.push_back(&g);
  return out;
}

}  // namespace

CompletionRates completion_rates(const std::vector<Prediction>& preds, const std::vector<DataPoint>& gold) {
  auto v = compute(align(preds, gold), pointers(gold));
  return {v.action_cr, v.turn_cr};
}

HeadAccuracies head_accuracies(const std::vector<Prediction>& preds, const std::vector<DataPoint>& gold) {
  auto v = compute(align(preds, gold), pointers(gold));
  return {v.action_type_acc, v.item_acc, v.direction_acc};
}

double corpus_bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references) {
  constexpr std::size_t kOrder = 4;
  if (candidates.size() != references.size()) {
    throw std::invalid_argument("corpus_bleu: " + std::to_string(candidates.size()) + " candidates vs " +
                                std::to_string(references.size()) + " references");
  }
  std::array<std::size_t, kOrder> matches{}, totals{};
  std::size_t cand_len = 0, ref_len = 0;

  for (std::size_t s = 0; s < candidates.size(); ++s) {
    auto c = tokenize(candidates[s]);
    auto r = tokenize(references[s]);
    cand_len += c.size();
    ref_len += r.size();
    for (std::size_t n = 1; n <= kOrder; ++n) {
      std::map<std::vector<std::string>, std::size_t> ref_counts;
      for (std::size_t i = 0; i + n <= r.size(); ++i) {
        ++ref_counts[std::vector<std::string>(r.begin() + static_cast<std::ptrdiff_t>(i),
                                              r.begin() + static_cast<std::ptrdiff_t>(i + n))];
      }
      for (std::size_t i = 0; i + n <= c.size(); ++i) {
        ++totals[n - 1];
        auto it = ref_counts.find(std::vector<std::string>(c.begin() + static_cast<std::ptrdiff_t>(i),
                                                           c.begin() + static_cast<std::ptrdiff_t>(i + n)));
        if (it != ref_counts.end() && it->second > 0) {
          --it->second;
          ++matches[n - 1];
        }
      }
    }
  }

  if (cand_len == 0 || matches[0] == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < kOrder; ++n) {
    double m = static_cast<double>(matches[n]);
    double t = static_cast<double>(totals[n]);
    if (matches[n] == 0) {
      m += 1.0;
      t += 1.0;
    }
    log_sum += std::log(m / t);
  }
  double bp = cand_len >= ref_len ? 1.0
                                  : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return bp * std::exp(log_sum / static_cast<double>(kOrder));
}

MetricsReport score_predictions(const std::vector<Prediction>& preds, const std::vector<DataPoint>& gold) {
  auto aligned = align(preds, gold);
  MetricsReport report;
  report.overall = compute(aligned, pointers(gold));

  std::map<std::string, std::pair<std::vector<const Prediction*>, std::vector<const DataPoint*>>> groups;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto& g = groups[std::string(to_string(gold[i].domain))];
    g.first.push_back(aligned[i]);
    g.second.push_back(&gold[i]);
  }
  for (const auto& [domain, g] : groups) report.per_domain.emplace(domain, compute(g.first, g.second));
  return report;
}

std::vector<std::string> check_report_invariants(const MetricValues& v) {
  std::vector<std::string> bad;
  if (v.action_cr > v.action_type_acc) bad.push_back("action_cr > action_type_acc");
  if (v.action_cr > 100.0 || v.turn_cr > 100.0) bad.push_back("completion rate above 100");
  if (v.n_actions_in_completed_turns > v.n_completed_actions) {
    bad.push_back("completed turns contain more actions than were completed");
  }
  if (v.input_em && v.input_f1 && *v.input_em > *v.input_f1) bad.push_back("input_em > input_f1");
  if (v.response_bleu && (*v.response_bleu < 0.0 || *v.response_bleu > 1.0)) {
    bad.push_back("response_bleu outside [0, 1]");
  }
  return bad;
}

}  // namespace guitod
