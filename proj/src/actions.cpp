#include "guitod/actions.hpp"

#include <charconv>
#include <stdexcept>

#include "guitod/error.hpp"
#include "guitod/hierarchy.hpp"
#include "guitod/text.hpp"

namespace guitod {

ParameterKind parameter_kind(ActionType type) {
  switch (type) {
    case ActionType::Click: return ParameterKind::item;
    case ActionType::Swipe: return ParameterKind::direction;
    case ActionType::Input: return ParameterKind::text;
    default: return ParameterKind::none;
  }
}

Action Action::click(std::size_t item) { return Action(ActionType::Click, item); }
Action Action::swipe(Direction direction) { return Action(ActionType::Swipe, direction); }
Action Action::input(std::string text) { return Action(ActionType::Input, std::move(text)); }
Action Action::enter() { return Action(ActionType::Enter, std::monostate{}); }
Action Action::clear() { return Action(ActionType::Clear, std::monostate{}); }
Action Action::back() { return Action(ActionType::Back, std::monostate{}); }
Action Action::end() { return Action(ActionType::End, std::monostate{}); }

Action Action::of_type(ActionType type) {
  if (parameter_kind(type) != ParameterKind::none) {
    throw std::invalid_argument(std::string(to_string(type)) + " requires a parameter");
  }
  return Action(type, std::monostate{});
}

std::size_t Action::item() const {
  if (type_ != ActionType::Click) throw std::logic_error("item() on a non-Click action");
  return std::get<std::size_t>(param_);
}

Direction Action::direction() const {
  if (type_ != ActionType::Swipe) throw std::logic_error("direction() on a non-Swipe action");
  return std::get<Direction>(param_);
}

const std::string& Action::text() const {
  if (type_ != ActionType::Input) throw std::logic_error("text() on a non-Input action");
  return std::get<std::string>(param_);
}

std::string_view to_string(ActionType type) {
  switch (type) {
    case ActionType::Click: return "Click";
    case ActionType::Swipe: return "Swipe";
    case ActionType::Input: return "Input";
    case ActionType::Enter: return "Enter";
    case ActionType::Clear: return "Clear";
    case ActionType::Back: return "Back";
    case ActionType::End: return "End";
  }
  return "?";
}

std::string_view to_string(Direction direction) {
  return direction == Direction::Up ? "up" : "down";
}

ActionType action_type_from_string(std::string_view s) {
  for (ActionType t : kAllActionTypes) {
    if (to_string(t) == s) return t;
  }
  throw ParseError("unknown action type '" + std::string(s) + "'", 0);
}

std::string action_type_token(ActionType type) {
  std::string name(to_string(type));
  for (auto& c : name) c = static_cast<char>(c >= 'a' && c <= 'z' ? c - 'a' + 'A' : c);
  return "[ACT:" + name + "]";
}

std::vector<std::string> validate_action(const Action& action, const Screen& screen) {
  std::vector<std::string> violations;
  switch (action.type()) {
    case ActionType::Click:
      if (action.item() >= screen.items.size()) {
        violations.push_back("index out of range: item " + std::to_string(action.item()) +
                             " on a screen with " + std::to_string(screen.items.size()) +
                             " items");
      }
      break;
    case ActionType::Swipe:
      if (action.direction() != Direction::Up && action.direction() != Direction::Down) {
        violations.push_back("swipe direction must be up or down");
      }
      break;
    case ActionType::Input:
      if (action.text().empty()) violations.push_back("input text is empty");
      break;
    default:
      break;
  }
  return violations;
}

std::string serialize_action(const Action& action) {
  std::string out(to_string(action.type()));
  out.push_back('(');
  switch (action.type()) {
    case ActionType::Click:
      out += "item=" + std::to_string(action.item());
      break;
    case ActionType::Swipe:
      out += "direction=";
      out += to_string(action.direction());
      break;
    case ActionType::Input:
      out += "text=\"";
      for (char c : action.text()) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
      }
      out.push_back('"');
      break;
    default:
      break;
  }
  out.push_back(')');
  return out;
}

namespace {

class ActionParser {
 public:
  explicit ActionParser(std::string_view s) : s_(s) {}

  Action parse() {
    std::size_t name_begin = pos_;
    while (pos_ < s_.size() && ((s_[pos_] >= 'A' && s_[pos_] <= 'Z') ||
                                (s_[pos_] >= 'a' && s_[pos_] <= 'z'))) {
      ++pos_;
    }
    std::string_view name = s_.substr(name_begin, pos_ - name_begin);
    ActionType type{};
    bool known = false;
    for (ActionType t : kAllActionTypes) {
      if (to_string(t) == name) {
        type = t;
        known = true;
      }
    }
    if (!known) fail("unknown action type '" + std::string(name) + "'", name_begin);
    expect('(');

    Action result = Action::end();
    switch (parameter_kind(type)) {
      case ParameterKind::none:
        result = Action::of_type(type);
        break;
      case ParameterKind::item: {
        key("item");
        std::size_t begin = pos_;
        std::size_t value = 0;
        auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), value);
        if (ec != std::errc() || ptr == s_.data() + pos_) fail("expected a non-negative item index", begin);
        pos_ = static_cast<std::size_t>(ptr - s_.data());
        result = Action::click(value);
        break;
      }
      case ParameterKind::direction: {
        key("direction");
        std::size_t begin = pos_;
        if (s_.substr(pos_).starts_with("up")) {
          pos_ += 2;
          result = Action::swipe(Direction::Up);
        } else if (s_.substr(pos_).starts_with("down")) {
          pos_ += 4;
          result = Action::swipe(Direction::Down);
        } else {
          fail("invalid swipe direction (expected up or down)", begin);
        }
        break;
      }
      case ParameterKind::text: {
        key("text");
        std::size_t begin = pos_;
        expect('"');
        std::string text;
        for (;;) {
          if (pos_ >= s_.size()) fail("unterminated input text", begin);
          char c = s_[pos_++];
          if (c == '"') break;
          if (c == '\\') {
            if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\\')) {
              fail("invalid escape in input text", pos_ - 1);
            }
            c = s_[pos_++];
          }
          text.push_back(c);
        }
        if (text.empty()) fail("input text must not be empty", begin);
        result = Action::input(std::move(text));
        break;
      }
    }
    expect(')');
    if (pos_ != s_.size()) fail("trailing characters after action", pos_);
    return result;
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw ParseError(what + " in '" + std::string(s_) + "'", at);
  }

  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  void key(std::string_view k) {
    if (!s_.substr(pos_).starts_with(k)) fail("expected '" + std::string(k) + "='", pos_);
    pos_ += k.size();
    expect('=');
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Action deserialize_action(std::string_view s) { return ActionParser(s).parse(); }

bool actions_equal(const Action& pred, const Action& gold) {
  if (pred.type() != gold.type()) return false;
  switch (pred.type()) {
    case ActionType::Click: return pred.item() == gold.item();
    case ActionType::Swipe: return pred.direction() == gold.direction();
    case ActionType::Input: return tokenize(pred.text()) == tokenize(gold.text());
    default: return true;
  }
}

}  // namespace guitod
