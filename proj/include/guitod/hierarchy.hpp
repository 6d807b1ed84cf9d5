#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace guitod {

/// Integer pixel rectangle. Containment tests are half-open: a point on the
/// right or bottom edge is outside.
struct BBox {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  int width() const { return right - left; }
  int height() const { return bottom - top; }
  std::int64_t area() const {
    return static_cast<std::int64_t>(width()) * static_cast<std::int64_t>(height());
  }
  bool contains(int x, int y) const {
    return x >= left && x < right && y >= top && y < bottom;
  }
  bool valid() const { return left <= right && top <= bottom; }

  bool operator==(const BBox&) const = default;
};

struct ScreenSize {
  int width = 0;
  int height = 0;

  bool operator==(const ScreenSize&) const = default;
};

struct ViewNode {
  std::string node_class;
  std::string text;
  std::string content_desc;
  std::string resource_id;
  bool clickable = false;
  BBox bounds;
  std::vector<ViewNode> children;

  bool is_leaf() const { return children.empty(); }
  /// Number of nodes in the subtree rooted here, including this one.
  std::size_t subtree_size() const;

  bool operator==(const ViewNode&) const = default;
};

enum class ItemSource { xml, pseudo_layout };

struct Item {
  std::size_t index = 0;
  std::string text;
  std::string item_type;
  BBox bbox;
  ItemSource source = ItemSource::xml;

  bool operator==(const Item&) const = default;
};

struct Screen {
  std::optional<std::string> screenshot_ref;
  std::optional<ViewNode> root;
  std::vector<Item> items;
  ScreenSize screen_size;

  bool operator==(const Screen&) const = default;
};

/// How clickability propagates from containers to leaves.
enum class ClickInheritance {
  any_ancestor,  ///< a leaf is clickable if any ancestor is clickable
  parent_only,   ///< only the literal parent counts
};

/// The item types a leaf can carry, in a fixed order. Any other class maps to
/// "Unknown".
const std::vector<std::string>& known_item_types();

/// Unqualified class name ("android.widget.TextView" -> "TextView"), or
/// "Unknown" when the short name is not one of known_item_types().
std::string item_type_for_class(std::string_view node_class);

/// Parses a uiautomator-style dump. The document element may be a <node> or a
/// <hierarchy> wrapper; a wrapper with several top-level nodes yields a
/// synthetic "hierarchy" root spanning their union.
///
/// Throws ParseError for malformed XML and ValidationError for a malformed or
/// inverted bounds attribute.
ViewNode parse_hierarchy(std::string_view xml);

/// Clickable leaves in document pre-order, indexed 0..k-1.
std::vector<Item> extract_items(const ViewNode& root,
                                ClickInheritance inheritance = ClickInheritance::any_ancestor);

/// Builds a Screen from an OCR pseudo-layout: a JSON array of
/// {"text": str, "bbox": [l,t,r,b]} records. Every record becomes a clickable
/// item of type "Unknown".
Screen parse_pseudo_layout(std::string_view json, ScreenSize size);

Screen screen_from_hierarchy(ViewNode root, ScreenSize size,
                             std::optional<std::string> screenshot_ref = std::nullopt,
                             ClickInheritance inheritance = ClickInheritance::any_ancestor);

/// Index of the smallest-area item whose box contains (x, y); ties go to the
/// lowest index. Throws ResolutionError when no item contains the point.
std::size_t resolve_click(const Screen& screen, int x, int y);

std::string to_string(ItemSource source);

}  // namespace guitod
