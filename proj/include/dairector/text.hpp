#pragma once

#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dairector {

namespace detail {

// Bytes >= 0x80 count as word characters so UTF-8 letters stay inside tokens.
inline bool is_word_byte(char c) noexcept {
  auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

}  // namespace detail

// A maximal run of word characters inside a larger string.
struct WordSpan {
  std::size_t offset;
  std::size_t length;
};

inline std::vector<WordSpan> word_spans(std::string_view text) {
  std::vector<WordSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!detail::is_word_byte(text[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && detail::is_word_byte(text[i])) ++i;
    spans.push_back({start, i - start});
  }
  return spans;
}

// Lowercase, split on runs of non-alphanumerics. Punctuation never survives.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for (const WordSpan& s : word_spans(text)) {
    std::string tok(text.substr(s.offset, s.length));
    for (char& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

// The set of character codes recognized inside fragment text. A token is a
// symbol when it is listed explicitly or, with uppercase_codes enabled, when
// it is a two- or three-letter all-uppercase ASCII word.
struct SymbolAlphabet {
  std::set<std::string, std::less<>> literals{"A", "B", "AUX"};
  bool uppercase_codes = true;

  bool contains(std::string_view token) const {
    if (literals.find(token) != literals.end()) return true;
    if (!uppercase_codes || token.size() < 2 || token.size() > 3) return false;
    for (char c : token)
      if (c < 'A' || c > 'Z') return false;
    return true;
  }

  static SymbolAlphabet defaults() { return {}; }
};

// Symbols occurring as standalone tokens, sorted and unique.
inline std::vector<std::string> extract_symbols(std::string_view text, const SymbolAlphabet& alphabet) {
  std::set<std::string> found;
  for (const WordSpan& s : word_spans(text)) {
    auto tok = text.substr(s.offset, s.length);
    if (alphabet.contains(tok)) found.emplace(tok);
  }
  return {found.begin(), found.end()};
}

}  // namespace dairector
