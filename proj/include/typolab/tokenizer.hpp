#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "typolab/text.hpp"

namespace typolab {

struct Token {
  std::int32_t id = 0;
  std::string text;
  std::size_t char_start = 0;  // half-open [char_start, char_end)
  std::size_t char_end = 0;
};

// Half-open token index range of one word inside a prompt.
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  std::size_t t_last() const { return end - 1; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct CharRange {
  std::size_t start = 0;
  std::size_t end = 0;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  // Throws kPrecondition on an empty prompt.
  virtual std::vector<Token> encode(std::string_view prompt) const = 0;
  virtual std::size_t vocab_size() const = 0;
};

// Word-level tokenizer with a printable-ASCII character fallback.
//
// A maximal run of ASCII letters, optionally preceded by one space, becomes a
// single token when its lowercase form is in the vocabulary; the leading space
// is folded into that token the way byte-level BPE vocabularies do. Every
// other byte becomes its own fallback token. In-vocabulary words therefore
// encode to one token and scrambled words split into one token per character.
//
// Ids: vocabulary words 0..N-1 in sorted order, then the fallback alphabet.
class ReferenceTokenizer final : public Tokenizer {
 public:
  static constexpr std::string_view kNormalization = "ascii-lowercase";

  explicit ReferenceTokenizer(std::vector<std::string> words);

  // Vocabulary from every alphabetic run of every word in the corpus.
  static ReferenceTokenizer from_corpus(const std::vector<WordSeq>& texts);

  static ReferenceTokenizer load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::vector<Token> encode(std::string_view prompt) const override;
  std::size_t vocab_size() const override { return words_.size() + alphabet().size(); }

  bool contains(std::string_view word) const;
  const std::vector<std::string>& words() const { return words_; }

  static std::string_view alphabet();

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int32_t> index_;
};

// True iff the word encodes to exactly one token both in isolation and when
// preceded by a single space.
bool is_single_token(std::string_view word, const Tokenizer& tokenizer);

// Minimal token span covering `range`. The first covering token may carry
// leading whitespace before the range (space-folded word tokens); any other
// spill past the range means the word is fused with a neighbour and raises
// kSpanMismatch.
TokenSpan locate_subword_span(const std::vector<Token>& tokens, CharRange range);

}  // namespace typolab
