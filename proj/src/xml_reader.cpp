#include "xml_reader.hpp"

#include <cstdint>
#include <memory>

#include "guitod/error.hpp"

namespace guitod::xml {

const std::string* Element::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_name_start(char c) {
  auto u = static_cast<unsigned char>(c);
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':' || u >= 0x80;
}

bool is_name_char(char c) {
  return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  Element document() {
    skip_bom();
    skip_misc();
    if (eof()) fail("document has no root element");
    if (peek() != '<') fail("expected '<'");
    Element root = element();
    skip_misc();
    if (!eof()) fail("content after the root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, column_); }

  bool eof() const { return pos_ >= text_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }
  bool starts_with(std::string_view s) const { return text_.substr(pos_).starts_with(s); }

  char advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) advance();
  }

  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  void skip_space() {
    while (!eof() && is_space(peek())) advance();
  }

  void skip_bom() {
    if (starts_with("\xEF\xBB\xBF")) pos_ += 3;
  }

  void skip_until(std::string_view terminator, const char* what) {
    while (!starts_with(terminator)) {
      if (eof()) fail(std::string("unterminated ") + what);
      advance();
    }
    advance(terminator.size());
  }

  // Comments, processing instructions, DOCTYPE and whitespace outside the root.
  void skip_misc() {
    for (;;) {
      skip_space();
      if (starts_with("<?")) {
        skip_until("?>", "processing instruction");
      } else if (starts_with("<!--")) {
        skip_until("-->", "comment");
      } else if (starts_with("<!DOCTYPE")) {
        skip_until(">", "DOCTYPE");
      } else {
        return;
      }
    }
  }

  std::string name() {
    if (eof() || !is_name_start(peek())) fail("expected a name");
    std::size_t begin = pos_;
    while (!eof() && is_name_char(peek())) advance();
    return std::string(text_.substr(begin, pos_ - begin));
  }

  void entity(std::string& out) {
    std::size_t line = line_, column = column_;
    advance();  // '&'
    std::size_t begin = pos_;
    while (!eof() && peek() != ';') {
      if (pos_ - begin > 10) throw ParseError("unterminated entity reference", line, column);
      advance();
    }
    if (eof()) throw ParseError("unterminated entity reference", line, column);
    std::string_view ref = text_.substr(begin, pos_ - begin);
    advance();  // ';'
    if (ref == "lt") out.push_back('<');
    else if (ref == "gt") out.push_back('>');
    else if (ref == "amp") out.push_back('&');
    else if (ref == "quot") out.push_back('"');
    else if (ref == "apos") out.push_back('\'');
    else if (ref.size() > 1 && ref[0] == '#') {
      std::uint32_t cp = 0;
      bool hex = ref[1] == 'x';
      std::string_view digits = ref.substr(hex ? 2 : 1);
      if (digits.empty()) throw ParseError("empty character reference", line, column);
      for (char c : digits) {
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (hex && c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else throw ParseError("invalid character reference", line, column);
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(v);
        if (cp > 0x10FFFF) throw ParseError("character reference out of range", line, column);
      }
      append_utf8(out, cp);
    } else {
      throw ParseError("unknown entity '&" + std::string(ref) + ";'", line, column);
    }
  }

  std::string attribute_value() {
    if (eof() || (peek() != '"' && peek() != '\'')) fail("expected a quoted attribute value");
    char quote = advance();
    std::string value;
    for (;;) {
      if (eof()) fail("unterminated attribute value");
      char c = peek();
      if (c == quote) {
        advance();
        return value;
      }
      if (c == '<') fail("'<' in attribute value");
      if (c == '&') {
        entity(value);
      } else {
        value.push_back(advance());
      }
    }
  }

  // Parses '<name attrs...>' up to and including '>' or '/>'. Returns true
  // when the tag was self-closing.
  bool start_tag(Element& el) {
    el.line = line_;
    el.column = column_;
    expect('<');
    el.name = name();
    for (;;) {
      bool had_space = !eof() && is_space(peek());
      skip_space();
      if (eof()) fail("unterminated start tag <" + el.name + ">");
      if (peek() == '/') {
        advance();
        expect('>');
        return true;
      }
      if (peek() == '>') {
        advance();
        return false;
      }
      if (!had_space) fail("expected whitespace between attributes");
      std::size_t line = line_, column = column_;
      std::string key = name();
      skip_space();
      expect('=');
      skip_space();
      std::string value = attribute_value();
      if (el.attribute(key) != nullptr) {
        throw ParseError("duplicate attribute '" + key + "'", line, column);
      }
      el.attributes.emplace_back(std::move(key), std::move(value));
    }
  }

  Element element() {
    Element root;
    if (start_tag(root)) return root;

    std::vector<Element*> open{&root};
    while (!open.empty()) {
      if (eof()) fail("unexpected end of document inside <" + open.back()->name + ">");
      char c = peek();
      if (c != '<') {
        if (c == '&') {
          std::string sink;
          entity(sink);
        } else {
          advance();
        }
        continue;
      }
      if (starts_with("<!--")) {
        skip_until("-->", "comment");
      } else if (starts_with("<![CDATA[")) {
        skip_until("]]>", "CDATA section");
      } else if (starts_with("<?")) {
        skip_until("?>", "processing instruction");
      } else if (starts_with("</")) {
        std::size_t line = line_, column = column_;
        advance(2);
        std::string closing = name();
        skip_space();
        expect('>');
        if (closing != open.back()->name) {
          throw ParseError("mismatched end tag </" + closing + ">, expected </" +
                               open.back()->name + ">",
                           line, column);
        }
        open.pop_back();
      } else {
        Element child;
        bool closed = start_tag(child);
        auto& siblings = open.back()->children;
        siblings.push_back(std::move(child));
        if (!closed) open.push_back(&siblings.back());
      }
    }
    return root;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

}  // namespace

Element parse_document(std::string_view text) { return Reader(text).document(); }

}  // namespace guitod::xml
