#include "guitod/hierarchy.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

#include <nlohmann/json.hpp>

#include "guitod/error.hpp"
#include "xml_reader.hpp"

namespace guitod {

std::size_t ViewNode::subtree_size() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.subtree_size();
  return n;
}

const std::vector<std::string>& known_item_types() {
  static const std::vector<std::string> types = {
      "Button",     "CheckBox",       "CheckedTextView", "EditText",     "FrameLayout",
      "Image",      "ImageButton",    "ImageView",       "LinearLayout", "ListView",
      "RadioButton", "RelativeLayout", "Switch",         "TextView",     "ToggleButton",
      "View",       "ViewGroup",      "WebView"};
  return types;
}

std::string item_type_for_class(std::string_view node_class) {
  auto dot = node_class.rfind('.');
  std::string_view short_name =
      dot == std::string_view::npos ? node_class : node_class.substr(dot + 1);
  const auto& types = known_item_types();
  if (std::find(types.begin(), types.end(), short_name) != types.end()) {
    return std::string(short_name);
  }
  return "Unknown";
}

std::string to_string(ItemSource source) {
  return source == ItemSource::xml ? "xml" : "pseudo_layout";
}

namespace {

// "[l,t][r,b]", integers optionally negative.
bool parse_bounds(std::string_view s, BBox& out) {
  int values[4];
  std::size_t p = 0;
  auto number = [&](int& v) {
    bool neg = p < s.size() && s[p] == '-';
    if (neg) ++p;
    std::size_t begin = p;
    long long acc = 0;
    while (p < s.size() && s[p] >= '0' && s[p] <= '9') {
      acc = acc * 10 + (s[p] - '0');
      if (acc > std::numeric_limits<int>::max()) return false;
      ++p;
    }
    if (p == begin) return false;
    v = static_cast<int>(neg ? -acc : acc);
    return true;
  };
  auto literal = [&](char c) {
    if (p < s.size() && s[p] == c) {
      ++p;
      return true;
    }
    return false;
  };
  for (int pair = 0; pair < 2; ++pair) {
    if (!literal('[') || !number(values[2 * pair]) || !literal(',') ||
        !number(values[2 * pair + 1]) || !literal(']')) {
      return false;
    }
  }
  if (p != s.size()) return false;
  out = {values[0], values[1], values[2], values[3]};
  return true;
}

std::string attr_or_empty(const xml::Element& el, std::string_view key) {
  const std::string* v = el.attribute(key);
  return v ? *v : std::string();
}

std::string where(const xml::Element& el) {
  return "line " + std::to_string(el.line) + ", column " + std::to_string(el.column);
}

ViewNode convert(const xml::Element& el) {
  ViewNode node;
  node.node_class = attr_or_empty(el, "class");
  node.text = attr_or_empty(el, "text");
  node.content_desc = attr_or_empty(el, "content-desc");
  node.resource_id = attr_or_empty(el, "resource-id");
  node.clickable = attr_or_empty(el, "clickable") == "true";
  if (const std::string* b = el.attribute("bounds")) {
    if (!parse_bounds(*b, node.bounds)) {
      throw ValidationError("malformed attribute bounds=\"" + *b + "\" on <node> at " + where(el));
    }
    if (!node.bounds.valid()) {
      throw ValidationError("attribute bounds=\"" + *b + "\" on <node> at " + where(el) +
                            " has left > right or top > bottom");
    }
  }
  for (const auto& child : el.children) {
    if (child.name == "node") node.children.push_back(convert(child));
  }
  return node;
}

void collect(const ViewNode& node, bool parent_clickable, bool ancestor_clickable,
             ClickInheritance inheritance, std::vector<Item>& out) {
  if (node.is_leaf()) {
    bool inherited =
        inheritance == ClickInheritance::any_ancestor ? ancestor_clickable : parent_clickable;
    if (node.clickable || inherited) {
      Item item;
      item.index = out.size();
      if (!node.text.empty()) item.text = node.text;
      else if (!node.content_desc.empty()) item.text = node.content_desc;
      else item.text = node.resource_id;
      item.item_type = item_type_for_class(node.node_class);
      item.bbox = node.bounds;
      item.source = ItemSource::xml;
      out.push_back(std::move(item));
    }
    return;
  }
  for (const auto& child : node.children) {
    collect(child, node.clickable, ancestor_clickable || node.clickable, inheritance, out);
  }
}

}  // namespace

ViewNode parse_hierarchy(std::string_view xml_text) {
  xml::Element doc = xml::parse_document(xml_text);
  if (doc.name == "node") return convert(doc);
  if (doc.name != "hierarchy") {
    throw ParseError("unexpected root element <" + doc.name + ">", doc.line, doc.column);
  }
  std::vector<ViewNode> tops;
  for (const auto& child : doc.children) {
    if (child.name == "node") tops.push_back(convert(child));
  }
  if (tops.size() == 1) return std::move(tops.front());

  ViewNode root;
  root.node_class = "hierarchy";
  if (!tops.empty()) {
    root.bounds = tops.front().bounds;
    for (const auto& t : tops) {
      root.bounds.left = std::min(root.bounds.left, t.bounds.left);
      root.bounds.top = std::min(root.bounds.top, t.bounds.top);
      root.bounds.right = std::max(root.bounds.right, t.bounds.right);
      root.bounds.bottom = std::max(root.bounds.bottom, t.bounds.bottom);
    }
  }
  root.children = std::move(tops);
  return root;
}

std::vector<Item> extract_items(const ViewNode& root, ClickInheritance inheritance) {
  std::vector<Item> items;
  collect(root, false, false, inheritance, items);
  return items;
}

Screen screen_from_hierarchy(ViewNode root, ScreenSize size,
                             std::optional<std::string> screenshot_ref,
                             ClickInheritance inheritance) {
  Screen screen;
  screen.items = extract_items(root, inheritance);
  screen.root = std::move(root);
  screen.screen_size = size;
  screen.screenshot_ref = std::move(screenshot_ref);
  return screen;
}

Screen parse_pseudo_layout(std::string_view json_text, ScreenSize size) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid pseudo-layout JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_array()) throw ParseError("pseudo-layout top level must be a JSON array", 0);

  Screen screen;
  screen.screen_size = size;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    const std::string where = "pseudo-layout record " + std::to_string(i);
    if (!rec.is_object()) throw ValidationError(where + ": expected an object");
    auto text = rec.find("text");
    auto bbox = rec.find("bbox");
    if (text == rec.end() || !text->is_string()) {
      throw ValidationError(where + ": missing string field 'text'");
    }
    if (bbox == rec.end() || !bbox->is_array() || bbox->size() != 4 ||
        !std::all_of(bbox->begin(), bbox->end(), [](const auto& v) { return v.is_number_integer(); })) {
      throw ValidationError(where + ": field 'bbox' must be [l,t,r,b] integers");
    }
    BBox box{(*bbox)[0].get<int>(), (*bbox)[1].get<int>(), (*bbox)[2].get<int>(),
             (*bbox)[3].get<int>()};
    if (!box.valid()) throw ValidationError(where + ": bbox has left > right or top > bottom");
    if (box.left < 0 || box.top < 0 || box.right > size.width || box.bottom > size.height) {
      throw ValidationError(where + ": bbox [" + std::to_string(box.left) + "," +
                            std::to_string(box.top) + "," + std::to_string(box.right) + "," +
                            std::to_string(box.bottom) + "] lies outside the " +
                            std::to_string(size.width) + "x" + std::to_string(size.height) +
                            " screen");
    }
    Item item;
    item.index = screen.items.size();
    item.text = text->get<std::string>();
    item.item_type = "Unknown";
    item.bbox = box;
    item.source = ItemSource::pseudo_layout;
    screen.items.push_back(std::move(item));
  }
  return screen;
}

std::size_t resolve_click(const Screen& screen, int x, int y) {
  const auto& items = screen.items;
  std::optional<std::size_t> best;
  for (const auto& item : items) {
    if (!item.bbox.contains(x, y)) continue;
    if (!best || item.bbox.area() < items[*best].bbox.area()) best = item.index;
  }
  if (best) return *best;

  std::string msg = "click at (" + std::to_string(x) + "," + std::to_string(y) + ") hits no item";
  if (items.empty()) {
    msg += "; the screen has no items";
  } else {
    // Nearest item by Euclidean distance from the point to the box.
    double best_dist = std::numeric_limits<double>::infinity();
    std::size_t nearest = 0;
    for (const auto& item : items) {
      double dx = std::max({item.bbox.left - x, 0, x - item.bbox.right});
      double dy = std::max({item.bbox.top - y, 0, y - item.bbox.bottom});
      double dist = dx * dx + dy * dy;
      if (dist < best_dist) {
        best_dist = dist;
        nearest = item.index;
      }
    }
    const auto& n = items[nearest].bbox;
    msg += "; nearest is item " + std::to_string(nearest) + " \"" + items[nearest].text +
           "\" at [" + std::to_string(n.left) + "," + std::to_string(n.top) + "," +
           std::to_string(n.right) + "," + std::to_string(n.bottom) + "]";
  }
  throw ResolutionError(msg, x, y);
}

}  // namespace guitod
