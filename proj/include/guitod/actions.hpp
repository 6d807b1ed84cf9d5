#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace guitod {

struct Screen;

/// The seven GUI operations. Enum order is the tie-break order used by every
/// argmax in the toolkit.
enum class ActionType { Click = 0, Swipe, Input, Enter, Clear, Back, End };

inline constexpr std::size_t kNumActionTypes = 7;

enum class Direction { Up = 0, Down };

inline constexpr std::array<ActionType, kNumActionTypes> kAllActionTypes = {
    ActionType::Click, ActionType::Swipe, ActionType::Input, ActionType::Enter,
    ActionType::Clear, ActionType::Back,  ActionType::End};

/// Which parameter an action type carries.
enum class ParameterKind { none, item, direction, text };

ParameterKind parameter_kind(ActionType type);

/// An action type with its parameter. Construct through the named factories;
/// the parameter always matches the type.
class Action {
 public:
  /// End().
  Action() = default;

  static Action click(std::size_t item);
  static Action swipe(Direction direction);
  static Action input(std::string text);
  static Action enter();
  static Action clear();
  static Action back();
  static Action end();
  /// Parameterless action of the given type. Throws std::invalid_argument for
  /// Click, Swipe and Input.
  static Action of_type(ActionType type);

  ActionType type() const { return type_; }
  std::size_t item() const;
  Direction direction() const;
  const std::string& text() const;

  /// Structural equality (Input text compared byte for byte). Use
  /// actions_equal for the metric notion.
  bool operator==(const Action&) const = default;

 private:
  using Param = std::variant<std::monostate, std::size_t, Direction, std::string>;
  Action(ActionType type, Param param) : type_(type), param_(std::move(param)) {}

  ActionType type_ = ActionType::End;
  Param param_;
};

std::string_view to_string(ActionType type);
std::string_view to_string(Direction direction);
/// Parses "Click", "Swipe", ... (exact case). Throws ParseError.
ActionType action_type_from_string(std::string_view s);

/// Special token for an action type, used when encoding action histories.
std::string action_type_token(ActionType type);

/// Every rule the action breaks against the screen; empty when valid.
std::vector<std::string> validate_action(const Action& action, const Screen& screen);

/// Canonical form, e.g. Click(item=3), Swipe(direction=up), Input(text="7 pm"), End().
/// Quotes and backslashes inside Input text are backslash-escaped.
std::string serialize_action(const Action& action);

/// Inverse of serialize_action. Throws ParseError carrying the byte offset of
/// the first character that does not fit the grammar.
Action deserialize_action(std::string_view s);

/// Metric equality: same type and same parameter, Input text compared as
/// token sequences after tokenizer normalization.
bool actions_equal(const Action& pred, const Action& gold);

}  // namespace guitod
