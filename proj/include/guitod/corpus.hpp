#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "guitod/actions.hpp"
#include "guitod/hierarchy.hpp"

namespace guitod {

enum class Domain { weather, calendar, search, taxi, hotel, restaurant };

inline constexpr std::size_t kNumDomains = 6;

std::string_view to_string(Domain domain);
/// Throws ValidationError listing the known domain names.
Domain domain_from_string(std::string_view s);

/// Where a screen was loaded from. Paths are kept as written in the corpus
/// file, relative to that file's directory unless absolute.
struct ScreenRef {
  std::optional<std::string> xml_path;
  std::optional<std::string> pseudo_layout_path;
  std::optional<std::string> screenshot_path;
  ScreenSize size;

  bool operator==(const ScreenRef&) const = default;
};

struct Step {
  std::shared_ptr<const Screen> screen;
  Action action;
  /// Absent for corpora built in memory.
  std::optional<ScreenRef> ref;
};

struct Turn {
  std::string user_utterance;
  std::string system_response;
  Domain domain = Domain::weather;
  /// Sorted, without duplicates.
  std::vector<std::string> apps;
  std::vector<Step> trace;
};

struct Episode {
  std::string episode_id;
  std::vector<Turn> turns;
};

/// Content equality: screens compared by value, not by pointer.
bool operator==(const Step& a, const Step& b);
bool operator==(const Turn& a, const Turn& b);
bool operator==(const Episode& a, const Episode& b);

/// Checks every invariant of the data model. Throws ValidationError naming
/// the episode, turn and field at fault.
void validate_episode(const Episode& episode);

/// Reads an episode JSONL file. Blank lines are skipped; screens are parsed
/// through the hierarchy module, with paths resolved against the file's
/// directory. Throws ParseError / ValidationError.
std::vector<Episode> load_corpus(const std::filesystem::path& path);

struct LoadOptions {
  /// Accept raw-coordinate clicks, Click(x=540,y=1200), and convert them to
  /// item indices with resolve_click.
  bool resolve_raw_clicks = false;
};

std::vector<Episode> load_corpus(const std::filesystem::path& path, const LoadOptions& options);

/// Parses one JSONL line. `base_dir` resolves screen paths.
Episode parse_episode(std::string_view line, const std::filesystem::path& base_dir,
                      const LoadOptions& options = {});

/// Writes episodes as JSONL. Screen paths are rewritten relative to the
/// output file's directory; every step must carry a ScreenRef.
void write_corpus(const std::vector<Episode>& episodes, const std::filesystem::path& path,
                  const std::filesystem::path& source_base_dir);

struct DataPointKey {
  std::string episode_id;
  std::size_t turn = 0;
  std::size_t action = 0;

  auto operator<=>(const DataPointKey&) const = default;
  bool operator==(const DataPointKey&) const = default;
};

std::string to_string(const DataPointKey& key);

/// One action-prediction instance with its full, untruncated history.
struct DataPoint {
  DataPointKey key;
  Domain domain = Domain::weather;
  /// U_1, R_1, ..., U_{i-1}, R_{i-1}, U_i
  std::vector<std::string> dialogue_history;
  /// Every action before this one, flattened across turns.
  std::vector<Action> action_history;
  /// Every screen up to and including the current one.
  std::vector<std::shared_ptr<const Screen>> screen_history;
  Action gold = Action::end();
  /// R_i of the turn this action belongs to.
  std::string gold_response;
  bool turn_final = false;

  const Screen& current_screen() const { return *screen_history.back(); }
  const std::string& current_utterance() const { return dialogue_history.back(); }
};

/// One data point per action, End included, in episode/turn/action order.
std::vector<DataPoint> expand_data_points(const std::vector<Episode>& episodes);

struct CorpusStats {
  std::size_t n_dialogues = 0;
  std::size_t n_turns = 0;
  std::size_t n_data_points = 0;
  double avg_images_per_turn = 0.0;
  double avg_items_per_image = 0.0;
  std::map<std::string, std::size_t> turns_per_domain;
  std::map<std::string, std::size_t> turns_per_app;
};

CorpusStats compute_stats(const std::vector<Episode>& episodes);

struct SplitRatios {
  unsigned train = 8;
  unsigned dev = 1;
  unsigned test = 1;
};

/// "8:1:1" -> {8,1,1}. Throws ValidationError.
SplitRatios parse_ratios(std::string_view s);

struct RandomSplit {
  std::vector<Episode> train;
  std::vector<Episode> dev;
  std::vector<Episode> test;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
};

/// Dev and test get round(n * share) episodes each, at least one; train
/// absorbs the remainder. Throws ValidationError when n < 3.
SplitSizes split_sizes(std::size_t n, SplitRatios ratios);

/// Dialogue-level partition with a seeded shuffle. Each part keeps corpus order.
RandomSplit split_random(const std::vector<Episode>& episodes, SplitRatios ratios,
                         std::uint64_t seed);

enum class HoldoutKey { app, domain };

struct HoldoutSplit {
  std::vector<Episode> train;
  std::vector<Episode> test;
};

/// Episodes touching `held` in any turn go to test, the rest to train.
/// Throws ValidationError listing known names when `held` does not occur.
HoldoutSplit split_holdout(const std::vector<Episode>& episodes, HoldoutKey by,
                           std::string_view held);

/// Distinct app or domain names that occur in the corpus, sorted.
std::vector<std::string> holdout_names(const std::vector<Episode>& episodes, HoldoutKey by);

}  // namespace guitod
