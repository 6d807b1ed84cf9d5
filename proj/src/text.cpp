#include "guitod/text.hpp"

#include <cstdint>

namespace guitod {

namespace {

// Decodes one UTF-8 sequence at s[i]; returns its length (1 on malformed
// input so the byte is treated as an ordinary character).
std::size_t decode(std::string_view s, std::size_t i, std::uint32_t& cp) {
  auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
  if (len == 0 || i + len > s.size()) {
    cp = b0;
    return 1;
  }
  if (len == 1) {
    cp = b0;
    return 1;
  }
  cp = b0 & (0x7F >> len);
  for (std::size_t k = 1; k < len; ++k) {
    auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      cp = b0;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

bool is_unicode_space(std::uint32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_ascii_punct(char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
         (c >= '{' && c <= '~');
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

void emit_chunk(std::string_view s, std::size_t begin, std::size_t end,
                std::vector<TokenSpan>& out) {
  std::size_t lead = begin;
  while (lead < end && is_ascii_punct(s[lead])) ++lead;
  std::size_t trail = end;
  while (trail > lead && is_ascii_punct(s[trail - 1])) --trail;

  for (std::size_t i = begin; i < lead; ++i) out.push_back({std::string(1, s[i]), i, i + 1});
  if (trail > lead) {
    TokenSpan core{std::string(), lead, trail};
    core.text.reserve(trail - lead);
    for (std::size_t i = lead; i < trail; ++i) core.text.push_back(lower(s[i]));
    out.push_back(std::move(core));
  }
  for (std::size_t i = trail; i < end; ++i) out.push_back({std::string(1, s[i]), i, i + 1});
}

}  // namespace

std::vector<TokenSpan> tokenize_with_spans(std::string_view s) {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  std::size_t chunk_begin = 0;
  bool in_chunk = false;
  while (i < s.size()) {
    std::uint32_t cp;
    std::size_t len = decode(s, i, cp);
    if (is_unicode_space(cp)) {
      if (in_chunk) emit_chunk(s, chunk_begin, i, out);
      in_chunk = false;
    } else if (!in_chunk) {
      in_chunk = true;
      chunk_begin = i;
    }
    i += len;
  }
  if (in_chunk) emit_chunk(s, chunk_begin, s.size(), out);
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : tokenize_with_spans(s)) out.push_back(std::move(t.text));
  return out;
}

}  // namespace guitod
