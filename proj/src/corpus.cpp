#include "guitod/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "guitod/error.hpp"
#include "random.hpp"

namespace guitod {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<Domain, kNumDomains> kAllDomains = {
    Domain::weather, Domain::calendar, Domain::search,
    Domain::taxi,    Domain::hotel,    Domain::restaurant};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string context(const std::string& episode_id, std::optional<std::size_t> turn,
                    const std::string& field) {
  std::string s = "episode '" + episode_id + "'";
  if (turn) s += ", turn " + std::to_string(*turn);
  if (!field.empty()) s += ", field '" + field + "'";
  return s;
}

// Screens are shared across steps that reference the same file.
class ScreenCache {
 public:
  std::shared_ptr<const Screen> get(const ScreenRef& ref, const fs::path& base_dir) {
    auto resolve = [&](const std::string& p) { return (base_dir / p).lexically_normal(); };
    std::string key = (ref.xml_path ? "x:" + resolve(*ref.xml_path).string()
                                    : "p:" + resolve(*ref.pseudo_layout_path).string()) +
                      "|" + std::to_string(ref.size.width) + "x" + std::to_string(ref.size.height) +
                      "|" + ref.screenshot_path.value_or("");
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;

    std::shared_ptr<const Screen> screen;
    if (ref.xml_path) {
      auto root = parse_hierarchy(read_file(resolve(*ref.xml_path)));
      screen = std::make_shared<const Screen>(
          screen_from_hierarchy(std::move(root), ref.size, ref.screenshot_path));
    } else {
      auto s = parse_pseudo_layout(read_file(resolve(*ref.pseudo_layout_path)), ref.size);
      s.screenshot_ref = ref.screenshot_path;
      screen = std::make_shared<const Screen>(std::move(s));
    }
    cache_.emplace(std::move(key), screen);
    return screen;
  }

 private:
  std::unordered_map<std::string, std::shared_ptr<const Screen>> cache_;
};

const json& require(const json& obj, const char* key, json::value_t type, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(where + ": missing field '" + key + "'");
  bool ok = it->type() == type ||
            (type == json::value_t::number_unsigned && it->type() == json::value_t::number_integer &&
             it->get<long long>() >= 0);
  if (!ok) throw ValidationError(where + ": field '" + key + "' has the wrong type");
  return *it;
}

std::optional<std::string> optional_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(where + ": field '" + key + "' must be a string or null");
  return it->get<std::string>();
}

// Click(x=540,y=1200) in raw traces.
std::optional<std::pair<int, int>> parse_raw_click(std::string_view s) {
  constexpr std::string_view prefix = "Click(x=";
  if (!s.starts_with(prefix)) return std::nullopt;
  std::size_t p = prefix.size();
  int x = 0, y = 0;
  auto r1 = std::from_chars(s.data() + p, s.data() + s.size(), x);
  if (r1.ec != std::errc()) return std::nullopt;
  p = static_cast<std::size_t>(r1.ptr - s.data());
  if (s.substr(p, 3) != ",y=") return std::nullopt;
  p += 3;
  auto r2 = std::from_chars(s.data() + p, s.data() + s.size(), y);
  if (r2.ec != std::errc()) return std::nullopt;
  p = static_cast<std::size_t>(r2.ptr - s.data());
  if (s.substr(p) != ")") return std::nullopt;
  return std::make_pair(x, y);
}

Episode parse_episode_impl(std::string_view line, const fs::path& base_dir, const LoadOptions& options,
                           ScreenCache& cache) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid episode JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw ValidationError("episode line must be a JSON object");

  Episode ep;
  ep.episode_id = require(doc, "episode_id", json::value_t::string, "episode").get<std::string>();
  const json& turns = require(doc, "turns", json::value_t::array, context(ep.episode_id, {}, ""));
  for (std::size_t ti = 0; ti < turns.size(); ++ti) {
    const json& t = turns[ti];
    std::string where = context(ep.episode_id, ti, "");
    if (!t.is_object()) throw ValidationError(where + ": turn must be an object");
    Turn turn;
    turn.user_utterance = require(t, "user", json::value_t::string, where).get<std::string>();
    turn.system_response = require(t, "response", json::value_t::string, where).get<std::string>();
    try {
      turn.domain = domain_from_string(require(t, "domain", json::value_t::string, where).get<std::string>());
    } catch (const ValidationError& e) {
      throw ValidationError(context(ep.episode_id, ti, "domain") + ": " + e.what());
    }
    for (const auto& app : require(t, "apps", json::value_t::array, where)) {
      if (!app.is_string()) throw ValidationError(context(ep.episode_id, ti, "apps") + ": app names must be strings");
      turn.apps.push_back(app.get<std::string>());
    }
    std::sort(turn.apps.begin(), turn.apps.end());
    turn.apps.erase(std::unique(turn.apps.begin(), turn.apps.end()), turn.apps.end());

    const json& trace = require(t, "trace", json::value_t::array, where);
    for (std::size_t si = 0; si < trace.size(); ++si) {
      std::string field = "trace[" + std::to_string(si) + "]";
      std::string swhere = context(ep.episode_id, ti, field);
      const json& step = trace[si];
      if (!step.is_object()) throw ValidationError(swhere + ": step must be an object");
      const json& sc = require(step, "screen", json::value_t::object, swhere);
      std::string scwhere = context(ep.episode_id, ti, field + ".screen");
      ScreenRef ref;
      ref.xml_path = optional_string(sc, "xml_path", scwhere);
      ref.pseudo_layout_path = optional_string(sc, "pseudo_layout_path", scwhere);
      ref.screenshot_path = optional_string(sc, "screenshot_path", scwhere);
      if (ref.xml_path.has_value() == ref.pseudo_layout_path.has_value()) {
        throw ValidationError(scwhere + ": exactly one of xml_path and pseudo_layout_path must be non-null");
      }
      const json& size = require(sc, "size", json::value_t::array, scwhere);
      if (size.size() != 2 || !size[0].is_number_integer() || !size[1].is_number_integer() ||
          size[0].get<long long>() <= 0 || size[1].get<long long>() <= 0) {
        throw ValidationError(scwhere + ": field 'size' must be [w,h] positive integers");
      }
      ref.size = {size[0].get<int>(), size[1].get<int>()};

      Step s;
      try {
        s.screen = cache.get(ref, base_dir);
      } catch (const ParseError& e) {
        throw ParseError(scwhere + ": " + e.what(), e.line(), e.column());
      } catch (const Error& e) {
        throw ValidationError(scwhere + ": " + e.what());
      }
      s.ref = ref;

      std::string action_text =
          require(step, "action", json::value_t::string, swhere).get<std::string>();
      auto raw = options.resolve_raw_clicks ? parse_raw_click(action_text) : std::nullopt;
      if (raw) {
        try {
          s.action = Action::click(resolve_click(*s.screen, raw->first, raw->second));
        } catch (const ResolutionError& e) {
          throw ValidationError(context(ep.episode_id, ti, field + ".action") + ": " + e.what());
        }
      } else {
        try {
          s.action = deserialize_action(action_text);
        } catch (const ParseError& e) {
          throw ValidationError(context(ep.episode_id, ti, field + ".action") + ": " + e.what());
        }
      }
      turn.trace.push_back(std::move(s));
    }
    ep.turns.push_back(std::move(turn));
  }
  validate_episode(ep);
  return ep;
}

}  // namespace

std::string_view to_string(Domain domain) {
  switch (domain) {
    case Domain::weather: return "weather";
    case Domain::calendar: return "calendar";
    case Domain::search: return "search";
    case Domain::taxi: return "taxi";
    case Domain::hotel: return "hotel";
    case Domain::restaurant: return "restaurant";
  }
  return "?";
}

Domain domain_from_string(std::string_view s) {
  for (Domain d : kAllDomains) {
    if (to_string(d) == s) return d;
  }
  std::string known;
  for (Domain d : kAllDomains) known += (known.empty() ? "" : ", ") + std::string(to_string(d));
  throw ValidationError("unknown domain '" + std::string(s) + "' (known: " + known + ")");
}

std::string to_string(const DataPointKey& key) {
  return key.episode_id + "/" + std::to_string(key.turn) + "/" + std::to_string(key.action);
}

bool operator==(const Step& a, const Step& b) {
  bool screens_equal = a.screen == b.screen || (a.screen && b.screen && *a.screen == *b.screen);
  return screens_equal && a.action == b.action && a.ref == b.ref;
}

bool operator==(const Turn& a, const Turn& b) {
  return a.user_utterance == b.user_utterance && a.system_response == b.system_response &&
         a.domain == b.domain && a.apps == b.apps && a.trace == b.trace;
}

bool operator==(const Episode& a, const Episode& b) {
  return a.episode_id == b.episode_id && a.turns == b.turns;
}

void validate_episode(const Episode& ep) {
  if (ep.episode_id.empty()) throw ValidationError("episode with empty episode_id");
  if (ep.turns.empty()) throw ValidationError(context(ep.episode_id, {}, "turns") + ": episode has no turns");
  for (std::size_t ti = 0; ti < ep.turns.size(); ++ti) {
    const Turn& turn = ep.turns[ti];
    if (turn.trace.empty()) {
      throw ValidationError(context(ep.episode_id, ti, "trace") + ": trace is empty");
    }
    for (std::size_t si = 0; si < turn.trace.size(); ++si) {
      const Step& step = turn.trace[si];
      std::string field = "trace[" + std::to_string(si) + "].action";
      if (!step.screen) throw ValidationError(context(ep.episode_id, ti, field) + ": step has no screen");
      bool last = si + 1 == turn.trace.size();
      if (last && step.action.type() != ActionType::End) {
        throw ValidationError(context(ep.episode_id, ti, field) + ": trace must end with End, found " +
                              serialize_action(step.action));
      }
      if (!last && step.action.type() == ActionType::End) {
        throw ValidationError(context(ep.episode_id, ti, field) + ": End before the end of the trace");
      }
      auto violations = validate_action(step.action, *step.screen);
      if (!violations.empty()) {
        throw ValidationError(context(ep.episode_id, ti, field) + ": " + violations.front());
      }
    }
  }
}

Episode parse_episode(std::string_view line, const fs::path& base_dir, const LoadOptions& options) {
  ScreenCache cache;
  return parse_episode_impl(line, base_dir, options, cache);
}

std::vector<Episode> load_corpus(const fs::path& path) { return load_corpus(path, LoadOptions{}); }

std::vector<Episode> load_corpus(const fs::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus " + path.string());
  fs::path base_dir = path.parent_path();
  ScreenCache cache;
  std::vector<Episode> episodes;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Episode ep;
    try {
      ep = parse_episode_impl(line, base_dir, options, cache);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no, e.offset() + 1);
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(ep.episode_id).second) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": duplicate episode_id '" +
                            ep.episode_id + "'");
    }
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

void write_corpus(const std::vector<Episode>& episodes, const fs::path& path,
                  const fs::path& source_base_dir) {
  fs::path out_dir = fs::absolute(path).lexically_normal().parent_path();
  if (!out_dir.empty()) fs::create_directories(out_dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());

  auto rebase = [&](const std::optional<std::string>& p) -> json {
    if (!p) return nullptr;
    fs::path abs = fs::absolute(source_base_dir / *p).lexically_normal();
    return fs::path(abs).lexically_relative(out_dir).generic_string();
  };

  for (const auto& ep : episodes) {
    json turns = json::array();
    for (const auto& turn : ep.turns) {
      json trace = json::array();
      for (const auto& step : turn.trace) {
        if (!step.ref) {
          throw Error("episode '" + ep.episode_id + "' has a screen without a source path");
        }
        const ScreenRef& r = *step.ref;
        trace.push_back({{"screen",
                          {{"xml_path", rebase(r.xml_path)},
                           {"pseudo_layout_path", rebase(r.pseudo_layout_path)},
                           {"screenshot_path", rebase(r.screenshot_path)},
                           {"size", {r.size.width, r.size.height}}}},
                         {"action", serialize_action(step.action)}});
      }
      turns.push_back({{"user", turn.user_utterance},
                       {"response", turn.system_response},
                       {"domain", std::string(to_string(turn.domain))},
                       {"apps", turn.apps},
                       {"trace", std::move(trace)}});
    }
    json line = {{"episode_id", ep.episode_id}, {"turns", std::move(turns)}};
    out << line.dump() << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<DataPoint> expand_data_points(const std::vector<Episode>& episodes) {
  std::vector<DataPoint> points;
  for (const auto& ep : episodes) {
    std::vector<std::string> dialogue;
    std::vector<Action> actions;
    std::vector<std::shared_ptr<const Screen>> screens;
    for (std::size_t ti = 0; ti < ep.turns.size(); ++ti) {
      const Turn& turn = ep.turns[ti];
      dialogue.push_back(turn.user_utterance);
      for (std::size_t ai = 0; ai < turn.trace.size(); ++ai) {
        const Step& step = turn.trace[ai];
        screens.push_back(step.screen);
        DataPoint dp;
        dp.key = {ep.episode_id, ti, ai};
        dp.domain = turn.domain;
        dp.dialogue_history = dialogue;
        dp.action_history = actions;
        dp.screen_history = screens;
        dp.gold = step.action;
        dp.gold_response = turn.system_response;
        dp.turn_final = ai + 1 == turn.trace.size();
        points.push_back(std::move(dp));
        actions.push_back(step.action);
      }
      dialogue.push_back(turn.system_response);
    }
  }
  return points;
}

CorpusStats compute_stats(const std::vector<Episode>& episodes) {
  CorpusStats st;
  std::size_t screens = 0;
  std::size_t items = 0;
  st.n_dialogues = episodes.size();
  for (const auto& ep : episodes) {
    for (const auto& turn : ep.turns) {
      ++st.n_turns;
      st.n_data_points += turn.trace.size();
      ++st.turns_per_domain[std::string(to_string(turn.domain))];
      for (const auto& app : turn.apps) ++st.turns_per_app[app];
      for (const auto& step : turn.trace) {
        ++screens;
        items += step.screen->items.size();
      }
    }
  }
  if (st.n_turns > 0) st.avg_images_per_turn = static_cast<double>(screens) / static_cast<double>(st.n_turns);
  if (screens > 0) st.avg_items_per_image = static_cast<double>(items) / static_cast<double>(screens);
  return st;
}

SplitRatios parse_ratios(std::string_view s) {
  SplitRatios r;
  unsigned* parts[3] = {&r.train, &r.dev, &r.test};
  std::size_t p = 0;
  for (int i = 0; i < 3; ++i) {
    auto res = std::from_chars(s.data() + p, s.data() + s.size(), *parts[i]);
    if (res.ec != std::errc()) throw ValidationError("invalid ratios '" + std::string(s) + "', expected A:B:C");
    p = static_cast<std::size_t>(res.ptr - s.data());
    if (i < 2) {
      if (p >= s.size() || s[p] != ':') throw ValidationError("invalid ratios '" + std::string(s) + "', expected A:B:C");
      ++p;
    }
  }
  if (p != s.size()) throw ValidationError("invalid ratios '" + std::string(s) + "', expected A:B:C");
  if (r.train == 0 || r.dev == 0 || r.test == 0) throw ValidationError("split ratios must be positive");
  return r;
}

SplitSizes split_sizes(std::size_t n, SplitRatios ratios) {
  if (n < 3) {
    throw ValidationError("random split needs at least 3 episodes, got " + std::to_string(n));
  }
  double total = static_cast<double>(ratios.train) + ratios.dev + ratios.test;
  auto share = [&](unsigned r) {
    auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * r / total));
    return std::max<std::size_t>(k, 1);
  };
  SplitSizes sizes;
  sizes.dev = share(ratios.dev);
  sizes.test = share(ratios.test);
  if (sizes.dev + sizes.test >= n) {
    throw ValidationError("split ratios leave no training episodes for n=" + std::to_string(n));
  }
  sizes.train = n - sizes.dev - sizes.test;
  return sizes;
}

RandomSplit split_random(const std::vector<Episode>& episodes, SplitRatios ratios, std::uint64_t seed) {
  SplitSizes sizes = split_sizes(episodes.size(), ratios);
  std::vector<std::size_t> order(episodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  detail::shuffle(order, rng);

  auto take = [&](std::size_t begin, std::size_t count) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(begin + count));
    std::sort(idx.begin(), idx.end());
    std::vector<Episode> part;
    part.reserve(idx.size());
    for (auto i : idx) part.push_back(episodes[i]);
    return part;
  };
  RandomSplit split;
  split.train = take(0, sizes.train);
  split.dev = take(sizes.train, sizes.dev);
  split.test = take(sizes.train + sizes.dev, sizes.test);
  return split;
}

namespace {

bool turn_matches(const Turn& turn, HoldoutKey by, std::string_view held) {
  if (by == HoldoutKey::domain) return to_string(turn.domain) == held;
  return std::find(turn.apps.begin(), turn.apps.end(), held) != turn.apps.end();
}

}  // namespace

std::vector<std::string> holdout_names(const std::vector<Episode>& episodes, HoldoutKey by) {
  std::set<std::string> names;
  for (const auto& ep : episodes) {
    for (const auto& turn : ep.turns) {
      if (by == HoldoutKey::domain) names.insert(std::string(to_string(turn.domain)));
      else names.insert(turn.apps.begin(), turn.apps.end());
    }
  }
  return {names.begin(), names.end()};
}

HoldoutSplit split_holdout(const std::vector<Episode>& episodes, HoldoutKey by, std::string_view held) {
  auto names = holdout_names(episodes, by);
  if (std::find(names.begin(), names.end(), held) == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    throw ValidationError(std::string(by == HoldoutKey::app ? "app" : "domain") + " '" +
                          std::string(held) + "' does not occur in the corpus (known: " + known + ")");
  }
  HoldoutSplit split;
  for (const auto& ep : episodes) {
    bool touches = std::any_of(ep.turns.begin(), ep.turns.end(),
                               [&](const Turn& t) { return turn_matches(t, by, held); });
    (touches ? split.test : split.train).push_back(ep);
  }
  return split;
}

}  // namespace guitod
