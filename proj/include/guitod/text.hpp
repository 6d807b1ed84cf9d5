#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace guitod {

/// A token together with the byte range it came from in the source string.
struct TokenSpan {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Shared tokenizer for action equality, EM/F1 and BLEU.
///
/// Lowercases ASCII letters, splits on Unicode whitespace, then peels leading
/// and trailing ASCII punctuation off each chunk as one-character tokens.
/// Punctuation inside a chunk stays attached ("7pm", "o'clock").
std::vector<std::string> tokenize(std::string_view s);

std::vector<TokenSpan> tokenize_with_spans(std::string_view s);

}  // namespace guitod
