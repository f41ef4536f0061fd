#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace typolab {

using WordSeq = std::vector<std::string>;

// Whitespace-delimited words; runs of whitespace collapse.
WordSeq split_words(std::string_view text);

// Words joined by a single space. This is the prompt rendering everywhere.
std::string join_words(const WordSeq& words);

// Byte offset of words[index] inside join_words(words).
std::size_t word_offset(const WordSeq& words, std::size_t index);

// A word with leading/trailing punctuation separated from its core.
struct WordParts {
  std::string_view prefix;
  std::string_view core;
  std::string_view suffix;
};

WordParts split_punctuation(std::string_view word);

bool is_ascii_letters(std::string_view s);
std::string ascii_lower(std::string_view s);

// round-half-up(ratio * total), tolerant to binary representation error so
// that e.g. 0.35 * 10 rounds to 4.
std::size_t round_half_up_count(double ratio, std::size_t total);

// Shortest decimal rendering of a level ("0", "0.25", "1").
std::string format_level(double level);

// Fixed 9-significant-digit rendering used by every CSV writer.
std::string format_g9(double value);

}  // namespace typolab
