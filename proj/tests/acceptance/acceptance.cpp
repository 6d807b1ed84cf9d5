// One line per acceptance criterion. Exit status is nonzero iff any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "guitod/actions.hpp"
#include "guitod/baselines.hpp"
#include "guitod/corpus.hpp"
#include "guitod/harness.hpp"
#include "guitod/hierarchy.hpp"
#include "guitod/metrics.hpp"
#include "guitod/model.hpp"
#include "guitod/policy.hpp"
#include "guitod/training.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace guitod;
namespace gt = guitod::testing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kFixtures = GUITOD_FIXTURE_DIR;

enum class Outcome { pass, fail, skip };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

Verdict pass(std::string d) { return {Outcome::pass, std::move(d)}; }
Verdict fail(std::string d) { return {Outcome::fail, std::move(d)}; }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

double opt_diff(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return INFINITY;
  return a ? std::abs(*a - *b) : 0.0;
}

Verdict c1_oracle_equivalence() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  gt::RandomCorpusOptions opts;
  opts.max_turns = 50;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto gold = expand_data_points(gt::random_corpus(rng, opts));
    auto preds = gt::random_predictions(gold, rng);
    auto v = score_predictions(preds, gold).overall;
    auto o = gt::oracle_metrics(preds, gold);
    std::vector<std::string> cands, refs;
    bool any_response = false;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      any_response = any_response || preds[i].response.has_value();
      if (!gold[i].turn_final) continue;
      cands.push_back(preds[i].response.value_or(""));
      refs.push_back(gold[i].gold_response);
    }
    std::optional<double> bleu;
    if (any_response && !cands.empty()) bleu = gt::oracle_bleu(cands, refs);
    for (double d : {std::abs(v.action_type_acc - o.action_type_acc), std::abs(v.action_cr - o.action_cr),
                     std::abs(v.turn_cr - o.turn_cr), opt_diff(v.item_acc, o.item_acc),
                     opt_diff(v.direction_acc, o.direction_acc), opt_diff(v.input_em, o.input_em),
                     opt_diff(v.input_f1, o.input_f1), opt_diff(v.response_bleu, bleu)}) {
      worst = std::max(worst, d);
    }
  }
  double secs = seconds_since(t0);
  std::string d = "100 corpora, max |diff| " + fmt(worst) + ", " + fmt(secs) + " s";
  return worst <= 1e-12 && secs < 30.0 ? pass(d) : fail(d);
}

Verdict c2_bleu() {
  double same = corpus_bleu({"the room is booked for two nights"}, {"the room is booked for two nights"});
  double disjoint = corpus_bleu({"alpha beta gamma delta"}, {"one two three four"});
  auto doc = nlohmann::json::parse(slurp(kFixtures / "bleu_two_sentence.json"));
  auto c = doc["candidates"].get<std::vector<std::string>>();
  auto r = doc["references"].get<std::vector<std::string>>();
  double fixture = corpus_bleu(c, r);
  double expected = doc.contains("expected") ? doc["expected"].get<double>()
                                             : std::exp(-1.0 / 12.0) * std::pow(11.0 / 48.0, 0.25);
  std::string d = "identical " + fmt(same) + ", disjoint " + fmt(disjoint) + ", fixture " + fmt(fixture);
  return same == 1.0 && disjoint == 0.0 && std::abs(fixture - expected) <= 1e-9 ? pass(d) : fail(d);
}

Verdict c3_mfm_turn_cr() {
  std::size_t checked = 0;
  std::vector<std::vector<DataPoint>> sets;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) sets.push_back(expand_data_points(gt::templated_corpus(150, seed)));
  sets.push_back(expand_data_points(load_corpus(kFixtures / "corpus" / "episodes.jsonl")));
  std::mt19937_64 rng(31);
  for (int i = 0; i < 20; ++i) sets.push_back(expand_data_points(gt::random_corpus(rng)));
  for (const auto& pts : sets) {
    if (pts.empty()) continue;
    MostFrequentBaseline mfm(fit_counts(pts));
    if (mfm.action().type() == ActionType::End) continue;
    ++checked;
    double cr = evaluate(mfm, pts, "train").report.overall.turn_cr;
    if (cr != 0.0) return fail("turn CR " + fmt(cr) + " with modal " + serialize_action(mfm.action()));
  }
  std::string d = std::to_string(checked) + " corpora with a non-End modal action";
  return checked > 0 ? pass(d) : fail("no corpus exercised: " + d);
}

Verdict c4_random_type_accuracy() {
  auto pts = gt::uniform_type_points(10000, 77);
  auto acc = evaluate(RandomBaseline(77), pts, "uniform").report.overall.action_type_acc;
  std::string d = "action type accuracy " + fmt(acc) + "%";
  return acc >= 12.3 && acc <= 16.3 ? pass(d) : fail(d);
}

Verdict c5_templated_training() {
  auto eps = gt::templated_corpus(200, 7);
  auto pts = expand_data_points(eps);
  PolicyConfig cfg;
  cfg.epochs = 300;
  TrainOptions opts;
  opts.stop_when_perfect = true;
  auto t0 = Clock::now();
  auto result = train(pts, cfg, opts);
  double secs = seconds_since(t0);
  double cr = evaluate(ReferencePolicy(cfg, result.params), pts, "train").report.overall.action_cr;
  std::string d = std::to_string(pts.size()) + " actions, training CR " + fmt(cr) + "% at epoch " +
                  std::to_string(result.best_epoch) + ", " + fmt(secs) + " s";
  return cr >= 95.0 && result.best_epoch <= 300 && secs < 60.0 ? pass(d) : fail(d);
}

Verdict c6_gradient_check() {
  std::mt19937_64 rng(606);
  double worst = 0.0;
  std::string where;
  int configs = 0;
  for (; configs < 8; ++configs) {
    ModelShape shape{1 + rng() % 16, 1 + rng() % 2, 4 + rng() % 8, 1 + rng() % 3};
    auto params = PolicyParams::random(shape, rng(), 1.0);
    std::vector<gt::LabeledBundle> batch;
    for (int i = 0; i < 3; ++i) batch.push_back(gt::random_labeled_bundle(rng, shape, 5));
    for (const auto& e : gt::gradient_check(params, batch)) {
      if (e.rel_error > worst) {
        worst = e.rel_error;
        where = e.block + " (d=" + std::to_string(shape.d) + ", H=" + std::to_string(shape.history) + ")";
      }
    }
  }
  std::string d = std::to_string(configs) + " configs, max rel error " + fmt(worst) + " in " + where;
  return worst <= 1e-4 ? pass(d) : fail(d);
}

Verdict c7_fold_base_case() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Index k = rng() % 6, d = 1 + rng() % 16;
    Eigen::MatrixXd x(k, d), wq(d, d), wk(d, d), wv(d, d);
    for (auto* m : {&x, &wq, &wk, &wv})
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = g(rng);
    Eigen::MatrixXd out = fold_screen_history({x}, wq, wk, wv);
    if (out.rows() != x.rows() || out.cols() != x.cols() ||
        std::memcmp(out.data(), x.data(), sizeof(double) * static_cast<std::size_t>(x.size())) != 0) {
      return fail("trial " + std::to_string(trial) + " differs");
    }
  }
  return pass("50 single-screen folds bit-identical");
}

Verdict c8_parser() {
  auto root = parse_hierarchy(slurp(kFixtures / "calendar_screen.xml"));
  Screen xml = screen_from_hierarchy(root, {1080, 1920});
  Screen pseudo = parse_pseudo_layout(slurp(kFixtures / "calendar_screen.pseudo.json"), {1080, 1920});
  const std::vector<std::string> texts = {"Open navigation", "com.example.calendar:id/search", "Team meeting",
                                          "10:00 AM", "Dentist & checkup"};
  std::vector<std::string> got;
  for (const auto& it : xml.items) got.push_back(it.text);
  std::string d = std::to_string(xml.root->subtree_size()) + " nodes, " + std::to_string(xml.items.size()) +
                  " items";
  if (xml.root->subtree_size() != 12 || got != texts) return fail(d);
  if (pseudo.items.size() != xml.items.size()) return fail(d + ", pseudo-layout has " +
                                                           std::to_string(pseudo.items.size()));
  for (std::size_t i = 0; i < xml.items.size(); ++i) {
    if (pseudo.items[i].text != xml.items[i].text || !(pseudo.items[i].bbox == xml.items[i].bbox)) {
      return fail(d + ", pseudo-layout item " + std::to_string(i) + " differs");
    }
  }
  return pass(d + ", pseudo-layout equivalent");
}

std::vector<Episode> synthetic_episodes(std::size_t n) {
  static const char* domains[] = {"weather", "calendar", "search", "taxi", "hotel", "restaurant"};
  std::vector<Episode> eps;
  auto screen = gt::make_screen({{"OK", "Button"}});
  for (std::size_t i = 0; i < n; ++i) {
    Episode e;
    e.episode_id = "syn-" + std::to_string(i);
    Turn t;
    t.user_utterance = "request " + std::to_string(i);
    t.system_response = "done";
    t.domain = domain_from_string(domains[i % 6]);
    t.apps = {std::string(domains[(i / 6) % 6]) + "-app"};
    t.trace = {Step{screen, Action::click(0), std::nullopt}, Step{screen, Action::end(), std::nullopt}};
    e.turns.push_back(t);
    if (i % 5 == 0) {
      t.domain = domain_from_string(domains[(i + 1) % 6]);
      e.turns.push_back(t);
    }
    eps.push_back(std::move(e));
  }
  return eps;
}

Verdict c9_split() {
  auto eps = synthetic_episodes(1125);
  auto s = split_random(eps, {}, 11);
  auto again = split_random(eps, {}, 11);
  if (!(s.train == again.train && s.dev == again.dev && s.test == again.test)) return fail("not seed-deterministic");
  std::set<std::string> ids;
  for (const auto* part : {&s.train, &s.dev, &s.test})
    for (const auto& e : *part) ids.insert(e.episode_id);
  std::string d = std::to_string(s.train.size()) + "/" + std::to_string(s.dev.size()) + "/" +
                  std::to_string(s.test.size());
  if (ids.size() != eps.size() || s.train.size() + s.dev.size() + s.test.size() != eps.size()) {
    return fail(d + " is not a partition");
  }
  // Published sizes differ by rounding; allow a small absolute slack.
  auto near = [](std::size_t got, long want) { return std::abs(static_cast<long>(got) - want) <= 4; };
  if (!near(s.train.size(), 897) || !near(s.dev.size(), 112) || !near(s.test.size(), 116)) {
    return fail(d + " too far from 897/112/116");
  }
  for (auto by : {HoldoutKey::domain, HoldoutKey::app}) {
    for (const auto& name : holdout_names(eps, by)) {
      auto h = split_holdout(eps, by, name);
      if (h.train.size() + h.test.size() != eps.size()) return fail("holdout " + name + " loses episodes");
      for (const auto& e : h.train) {
        for (const auto& t : e.turns) {
          bool touches = by == HoldoutKey::domain
                             ? to_string(t.domain) == name
                             : std::find(t.apps.begin(), t.apps.end(), name) != t.apps.end();
          if (touches) return fail("holdout " + name + " leaks " + e.episode_id);
        }
      }
    }
  }
  return pass(d + ", deterministic, holdouts pure");
}

// Expects train.jsonl, dev.jsonl and test.jsonl in this project's corpus
// format (for example produced by `gui-tod import` on the released data).
Verdict c10_dataset_stats() {
  const char* dir = std::getenv("GUITOD_DATASET_DIR");
  if (!dir || !*dir) return {Outcome::skip, "GUITOD_DATASET_DIR not set"};
  fs::path root = dir;
  for (const char* f : {"train.jsonl", "dev.jsonl", "test.jsonl"}) {
    if (!fs::exists(root / f)) return {Outcome::skip, (root / f).string() + " missing"};
  }
  struct Want {
    const char* file;
    std::size_t dialogues, turns, points;
  };
  const Want wants[] = {{"train.jsonl", 897, 3692, 14539}, {"dev.jsonl", 112, 509, 1875}, {"test.jsonl", 116, 483, 1923}};
  std::vector<Episode> all;
  std::string d;
  bool ok = true;
  for (const auto& w : wants) {
    auto eps = load_corpus(root / w.file);
    auto st = compute_stats(eps);
    d += std::string(w.file) + " " + std::to_string(st.n_dialogues) + "/" + std::to_string(st.n_turns) + "/" +
         std::to_string(st.n_data_points) + "; ";
    ok = ok && st.n_dialogues == w.dialogues && st.n_turns == w.turns && st.n_data_points == w.points;
    all.insert(all.end(), eps.begin(), eps.end());
  }
  auto total = compute_stats(all);
  d += "total " + std::to_string(total.n_dialogues) + " dialogues, " + std::to_string(total.n_turns) +
       " turns, " + fmt(total.avg_images_per_turn) + " images/turn";
  ok = ok && total.n_dialogues == 1125 && total.n_turns == 4684 && std::abs(total.avg_images_per_turn - 5.30) < 0.005;
  return ok ? pass(d) : fail(d);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"C1 metric oracle equivalence", c1_oracle_equivalence},
      {"C2 BLEU extremes and fixture", c2_bleu},
      {"C3 most-frequent turn CR", c3_mfm_turn_cr},
      {"C4 random baseline type accuracy", c4_random_type_accuracy},
      {"C5 templated corpus training", c5_templated_training},
      {"C6 gradient check", c6_gradient_check},
      {"C7 fold base case", c7_fold_base_case},
      {"C8 hierarchy parser", c8_parser},
      {"C9 dialogue split", c9_split},
      {"C10 dataset statistics", c10_dataset_stats},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = fail(std::string("exception: ") + e.what());
    }
    const char* tag = v.outcome == Outcome::pass ? "PASS" : v.outcome == Outcome::fail ? "FAIL" : "SKIP";
    failures += v.outcome == Outcome::fail;
    std::cout << tag << "  " << name << ": " << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
