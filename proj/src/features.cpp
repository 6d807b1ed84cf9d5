#include "guitod/features.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "guitod/text.hpp"
#include "random.hpp"

namespace guitod {

namespace {

bool is_punct_token(const std::string& t) {
  return t.size() == 1 && std::ispunct(static_cast<unsigned char>(t[0]));
}

std::size_t type_slot(const std::string& item_type) {
  const auto& types = known_item_types();
  auto it = std::find(types.begin(), types.end(), item_type);
  return it == types.end() ? kItemTypeSlots - 1 : static_cast<std::size_t>(it - types.begin());
}

double overlap(const std::vector<std::string>& item_tokens, const std::unordered_set<std::string>& vocab) {
  std::size_t n = 0, hit = 0;
  for (const auto& t : item_tokens) {
    if (is_punct_token(t)) continue;
    ++n;
    if (vocab.count(t)) ++hit;
  }
  return n == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(n);
}

Eigen::MatrixXd item_matrix(const Screen& screen, const std::unordered_set<std::string>& current_vocab,
                            const std::unordered_set<std::string>& earlier_vocab, const PolicyConfig& cfg) {
  const std::size_t b = cfg.hash_dim;
  const auto k = static_cast<Eigen::Index>(screen.items.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(item_feature_width(b)));
  const double w = screen.screen_size.width > 0 ? screen.screen_size.width : 1.0;
  const double h = screen.screen_size.height > 0 ? screen.screen_size.height : 1.0;
  for (Eigen::Index r = 0; r < k; ++r) {
    const Item& item = screen.items[static_cast<std::size_t>(r)];
    auto toks = tokenize(item.text);
    if (!toks.empty()) {
      double scale = 1.0 / std::sqrt(static_cast<double>(toks.size()));
      for (const auto& t : toks) {
        auto [bucket, sign] = hash_feature("i:" + t, cfg);
        m(r, static_cast<Eigen::Index>(bucket)) += sign * scale;
      }
    }
    auto col = static_cast<Eigen::Index>(b);
    m(r, col + static_cast<Eigen::Index>(type_slot(item.item_type))) = 1.0;
    col += kItemTypeSlots;
    m(r, col + 0) = item.bbox.left / w;
    m(r, col + 1) = item.bbox.top / h;
    m(r, col + 2) = item.bbox.right / w;
    m(r, col + 3) = item.bbox.bottom / h;
    m(r, col + 4) = static_cast<double>(item.bbox.area()) / (w * h);
    col += kGeometrySlots;
    m(r, col + 0) = overlap(toks, current_vocab);
    m(r, col + 1) = overlap(toks, earlier_vocab);
  }
  return m;
}

}  // namespace

bool FeatureBundle::operator==(const FeatureBundle& o) const {
  if (screen_item_feats.size() != o.screen_item_feats.size()) return false;
  for (std::size_t i = 0; i < screen_item_feats.size(); ++i) {
    const auto& a = screen_item_feats[i];
    const auto& b = o.screen_item_feats[i];
    if (a.rows() != b.rows() || a.cols() != b.cols() || a != b) return false;
  }
  auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return same(dialogue_vec, o.dialogue_vec) && same(dialogue_token_feats, o.dialogue_token_feats) &&
         same(action_hist, o.action_hist) && tokens == o.tokens && utterances == o.utterances;
}

std::pair<std::size_t, double> hash_feature(std::string_view s, const PolicyConfig& config) {
  std::uint64_t h = detail::stable_hash(s, config.hash_seed);
  return {static_cast<std::size_t>(h % config.hash_dim), (h >> 63) ? -1.0 : 1.0};
}

FeatureBundle featurize(const DataPoint& dp, const PolicyConfig& cfg) {
  FeatureBundle f;
  const std::size_t b = cfg.hash_dim;
  const std::size_t n_utt = dp.dialogue_history.size();

  // Tokens of every utterance, then keep the most recent window.
  std::vector<DialogueToken> all;
  for (std::size_t u = 0; u < n_utt; ++u) {
    for (auto& t : tokenize_with_spans(dp.dialogue_history[u])) {
      all.push_back({std::move(t.text), u, t.begin, t.end});
    }
  }
  std::size_t first = all.size() > cfg.max_dialogue_tokens ? all.size() - cfg.max_dialogue_tokens : 0;
  f.tokens.assign(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(first)),
                  std::make_move_iterator(all.end()));
  f.utterances = dp.dialogue_history;

  std::unordered_set<std::string> current_vocab, earlier_vocab;
  for (const auto& t : f.tokens) {
    (t.utterance + 1 == n_utt ? current_vocab : earlier_vocab).insert(t.text);
  }

  const Screen& screen = dp.current_screen();
  std::unordered_set<std::string> screen_vocab;
  for (const auto& item : screen.items) {
    for (auto& t : tokenize(item.text)) {
      if (!is_punct_token(t)) screen_vocab.insert(std::move(t));
    }
  }

  const auto n = static_cast<Eigen::Index>(f.tokens.size());
  f.dialogue_vec = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b));
  f.dialogue_token_feats = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(token_feature_width(b)));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& tok = f.tokens[static_cast<std::size_t>(i)];
    std::size_t distance = n_utt - 1 - tok.utterance;
    std::size_t salt = std::min<std::size_t>(distance, 3);

    auto [db, ds] = hash_feature("d" + std::to_string(salt) + ":" + tok.text, cfg);
    f.dialogue_vec(static_cast<Eigen::Index>(db)) += ds;

    bool same_prev = i > 0 && f.tokens[static_cast<std::size_t>(i - 1)].utterance == tok.utterance;
    bool same_next = i + 1 < n && f.tokens[static_cast<std::size_t>(i + 1)].utterance == tok.utterance;
    const std::string& prev = same_prev ? f.tokens[static_cast<std::size_t>(i - 1)].text : "<s>";
    const std::string& next = same_next ? f.tokens[static_cast<std::size_t>(i + 1)].text : "</s>";
    auto [wb, ws] = hash_feature("w:" + tok.text, cfg);
    auto [pb, ps] = hash_feature("p:" + prev, cfg);
    auto [nb, ns] = hash_feature("n:" + next, cfg);
    f.dialogue_token_feats(i, static_cast<Eigen::Index>(wb)) += ws;
    f.dialogue_token_feats(i, static_cast<Eigen::Index>(pb)) += 0.5 * ps;
    f.dialogue_token_feats(i, static_cast<Eigen::Index>(nb)) += 0.5 * ns;
    auto col = static_cast<Eigen::Index>(b);
    f.dialogue_token_feats(i, col + 0) = distance == 0 ? 1.0 : 0.0;
    f.dialogue_token_feats(i, col + 1) = tok.utterance % 2 == 0 ? 1.0 : 0.0;
    f.dialogue_token_feats(i, col + 2) = 1.0 / (1.0 + static_cast<double>(distance));
    f.dialogue_token_feats(i, col + 3) = screen_vocab.count(tok.text) ? 1.0 : 0.0;
  }
  if (n > 0) f.dialogue_vec /= std::sqrt(static_cast<double>(n));

  const std::size_t H = cfg.history;
  f.action_hist = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(H), static_cast<Eigen::Index>(kNumActionTypes));
  const auto& acts = dp.action_history;
  std::size_t kept = std::min(H, acts.size());
  for (std::size_t r = 0; r < kept; ++r) {
    const Action& a = acts[acts.size() - kept + r];
    f.action_hist(static_cast<Eigen::Index>(H - kept + r), static_cast<Eigen::Index>(a.type())) = 1.0;
  }

  const auto& screens = dp.screen_history;
  std::size_t n_screens = std::min(H, screens.size());
  for (std::size_t s = screens.size() - n_screens; s < screens.size(); ++s) {
    f.screen_item_feats.push_back(item_matrix(*screens[s], current_vocab, earlier_vocab, cfg));
  }
  return f;
}

std::optional<std::pair<std::size_t, std::size_t>> label_span(const FeatureBundle& f, std::string_view input_text) {
  auto target = tokenize(input_text);
  if (target.empty() || target.size() > f.tokens.size()) return std::nullopt;
  std::optional<std::pair<std::size_t, std::size_t>> best;
  for (std::size_t s = 0; s + target.size() <= f.tokens.size(); ++s) {
    bool match = true;
    std::size_t utt = f.tokens[s].utterance;
    for (std::size_t k = 0; k < target.size() && match; ++k) {
      const auto& tok = f.tokens[s + k];
      match = tok.text == target[k] && tok.utterance == utt;
    }
    if (!match) continue;
    // Later start wins: same utterance -> later occurrence, later utterance -> more recent.
    best = std::make_pair(s, s + target.size() - 1);
  }
  return best;
}

std::string span_text(const FeatureBundle& f, std::size_t s, std::size_t e) {
  const auto& a = f.tokens.at(s);
  const auto& z = f.tokens.at(e);
  if (a.utterance == z.utterance) {
    return f.utterances.at(a.utterance).substr(a.begin, z.end - a.begin);
  }
  std::string out;
  for (std::size_t i = s; i <= e; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += f.tokens[i].text;
  }
  return out;
}

}  // namespace guitod
