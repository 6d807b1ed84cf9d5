#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace guitod::xml {

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::size_t line = 0;
  std::size_t column = 0;

  /// Decoded attribute value, or nullptr when absent.
  const std::string* attribute(std::string_view key) const;
};

/// Non-validating reader for the subset of XML that view-hierarchy dumps use:
/// declaration, comments, processing instructions, a DOCTYPE without an
/// internal subset, CDATA, elements, attributes and the predefined/numeric
/// entities. Character data between elements is checked but discarded.
///
/// Throws ParseError with the 1-based line/column of the offending character.
Element parse_document(std::string_view text);

}  // namespace guitod::xml
