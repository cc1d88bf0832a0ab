#pragma once

// Token bags and the overlap similarity used for clone detection.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace apiguard {

// Multiset of tokens, stored sorted by token text.
class TokenBag {
 public:
  TokenBag() = default;
  explicit TokenBag(const std::map<std::string, std::size_t>& counts) {
    for (const auto& [tok, n] : counts)
      if (n > 0) {
        entries_.emplace_back(tok, n);
        size_ += n;
      }
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  const std::vector<std::pair<std::string, std::size_t>>& entries() const { return entries_; }

  std::size_t count(std::string_view token) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), token,
                               [](const auto& e, std::string_view t) { return e.first < t; });
    return it != entries_.end() && it->first == token ? it->second : 0;
  }

  friend bool operator==(const TokenBag&, const TokenBag&) = default;

 private:
  std::vector<std::pair<std::string, std::size_t>> entries_;
  std::size_t size_ = 0;
};

namespace detail {
inline bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}
}  // namespace detail

// Identifiers and numbers are maximal [A-Za-z0-9_] runs (non-ASCII bytes count
// as word characters); every other non-space character is its own token.
// Comments are dropped; string and char literals keep their quotes but lose
// their contents.
inline TokenBag token_bag(std::string_view src) {
  std::map<std::string, std::size_t> counts;
  std::size_t i = 0;
  const std::size_t n = src.size();
  while (i < n) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      const std::size_t end = src.find("*/", i + 2);
      i = end == std::string_view::npos ? n : end + 2;
    } else if (c == '"' || c == '\'') {
      ++counts[std::string(1, c)];
      ++i;
      while (i < n && src[i] != c) i += (src[i] == '\\' && i + 1 < n) ? 2 : 1;
      if (i < n) {
        ++counts[std::string(1, c)];
        ++i;
      }
    } else if (detail::word_char(c)) {
      const std::size_t start = i;
      while (i < n && detail::word_char(src[i])) ++i;
      ++counts[std::string(src.substr(start, i - start))];
    } else {
      ++counts[std::string(1, c)];
      ++i;
    }
  }
  return TokenBag(counts);
}

// Multiset intersection size.
inline std::size_t overlap(const TokenBag& a, const TokenBag& b) {
  std::size_t shared = 0;
  auto x = a.entries().begin(), y = b.entries().begin();
  while (x != a.entries().end() && y != b.entries().end()) {
    if (x->first < y->first) ++x;
    else if (y->first < x->first) ++y;
    else {
      shared += std::min(x->second, y->second);
      ++x;
      ++y;
    }
  }
  return shared;
}

// |a ∩ b| / max(|a|, |b|); 0 when either bag is empty.
inline double clone_similarity(const TokenBag& a, const TokenBag& b) {
  if (a.empty() || b.empty()) return 0.0;
  return static_cast<double>(overlap(a, b)) / static_cast<double>(std::max(a.size(), b.size()));
}

}  // namespace apiguard
