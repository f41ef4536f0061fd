#include "typolab/text.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

namespace typolab {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

}  // namespace

WordSeq split_words(std::string_view text) {
  WordSeq words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::string join_words(const WordSeq& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::size_t word_offset(const WordSeq& words, std::size_t index) {
  std::size_t off = 0;
  for (std::size_t i = 0; i < index && i < words.size(); ++i) off += words[i].size() + 1;
  return off;
}

WordParts split_punctuation(std::string_view word) {
  std::size_t b = 0;
  std::size_t e = word.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(word[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(word[e - 1]))) --e;
  return {word.substr(0, b), word.substr(b, e - b), word.substr(e)};
}

bool is_ascii_letters(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!is_alpha(c)) return false;
  return true;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::size_t round_half_up_count(double ratio, std::size_t total) {
  const double x = ratio * static_cast<double>(total);
  const double r = std::floor(x + 0.5 + 1e-9);
  if (r <= 0) return 0;
  const auto n = static_cast<std::size_t>(r);
  return n > total ? total : n;
}

std::string format_level(double level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", level);
  return buf;
}

std::string format_g9(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

}  // namespace typolab
