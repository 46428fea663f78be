#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace prefkit {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Whitespace-delimited tokens, as views into the input.
inline std::vector<std::string_view> tokenize(std::string_view text) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

inline size_t token_count(std::string_view text) {
  size_t n = 0;
  bool in_tok = false;
  for (char c : text) {
    if (is_space(c)) {
      in_tok = false;
    } else if (!in_tok) {
      in_tok = true;
      ++n;
    }
  }
  return n;
}

}  // namespace prefkit
