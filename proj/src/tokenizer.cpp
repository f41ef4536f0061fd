#include "typolab/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "typolab/error.hpp"

namespace typolab {

namespace {

constexpr std::string_view kAlphabet =
    " !\"#$%&'()*+,-./0123456789:;<=>?@ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "[\\]^_`abcdefghijklmnopqrstuvwxyz{|}~";

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

}  // namespace

std::string_view ReferenceTokenizer::alphabet() { return kAlphabet; }

ReferenceTokenizer::ReferenceTokenizer(std::vector<std::string> words) {
  for (auto& w : words) {
    if (!is_ascii_letters(w))
      throw Error(ErrorCode::kConfig, "vocabulary entry is not alphabetic: '" + w + "'");
    w = ascii_lower(w);
  }
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  words_ = std::move(words);
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i)
    index_.emplace(words_[i], static_cast<std::int32_t>(i));
}

ReferenceTokenizer ReferenceTokenizer::from_corpus(const std::vector<WordSeq>& texts) {
  std::set<std::string> vocab;
  for (const auto& text : texts) {
    for (const auto& word : text) {
      std::size_t i = 0;
      while (i < word.size()) {
        while (i < word.size() && !is_alpha(word[i])) ++i;
        std::size_t j = i;
        while (j < word.size() && is_alpha(word[j])) ++j;
        if (j > i) vocab.insert(ascii_lower(std::string_view(word).substr(i, j - i)));
        i = j;
      }
    }
  }
  return ReferenceTokenizer(std::vector<std::string>(vocab.begin(), vocab.end()));
}

ReferenceTokenizer ReferenceTokenizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open vocabulary file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, "malformed vocabulary file " + path.string() + ": " + e.what());
  }
  if (!j.contains("words") || !j["words"].is_array())
    throw Error(ErrorCode::kConfig, "vocabulary file lacks a 'words' array: " + path.string());
  if (j.contains("normalization") && j["normalization"] != kNormalization)
    throw Error(ErrorCode::kConfig, "unsupported normalization rule in " + path.string());
  ReferenceTokenizer tok(j["words"].get<std::vector<std::string>>());
  if (j.contains("size") && j["size"].get<std::size_t>() != tok.words_.size())
    throw Error(ErrorCode::kConfig, "vocabulary size header disagrees with word list");
  return tok;
}

void ReferenceTokenizer::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["format"] = "typolab-vocab";
  j["version"] = 1;
  j["size"] = words_.size();
  j["fallback_alphabet"] = std::string(kAlphabet);
  j["normalization"] = std::string(kNormalization);
  j["words"] = words_;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write vocabulary file " + path.string());
  out << j.dump(1) << '\n';
}

bool ReferenceTokenizer::contains(std::string_view word) const {
  return index_.count(ascii_lower(word)) != 0;
}

std::vector<Token> ReferenceTokenizer::encode(std::string_view prompt) const {
  if (prompt.empty()) throw Error(ErrorCode::kPrecondition, "encode: empty prompt");
  const auto n_words = static_cast<std::int32_t>(words_.size());
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < prompt.size()) {
    const char c = prompt[i];
    const auto alpha_pos = kAlphabet.find(c);
    if (alpha_pos == std::string_view::npos)
      throw Error(ErrorCode::kUnknownCharacter,
                  "byte " + std::to_string(static_cast<unsigned char>(c)) + " at offset " +
                      std::to_string(i));
    std::size_t j = i;
    if (c == ' ' && i + 1 < prompt.size() && is_alpha(prompt[i + 1])) j = i + 1;
    if (is_alpha(prompt[j])) {
      std::size_t k = j;
      while (k < prompt.size() && is_alpha(prompt[k])) ++k;
      auto it = index_.find(ascii_lower(prompt.substr(j, k - j)));
      if (it != index_.end()) {
        tokens.push_back({it->second, std::string(prompt.substr(i, k - i)), i, k});
        i = k;
        continue;
      }
    }
    tokens.push_back({n_words + static_cast<std::int32_t>(alpha_pos), std::string(1, c), i, i + 1});
    ++i;
  }
  return tokens;
}

bool is_single_token(std::string_view word, const Tokenizer& tokenizer) {
  if (word.empty()) return false;
  try {
    if (tokenizer.encode(word).size() != 1) return false;
    const std::string spaced = " " + std::string(word);
    return tokenizer.encode(spaced).size() == 1;
  } catch (const Error&) {
    return false;
  }
}

TokenSpan locate_subword_span(const std::vector<Token>& tokens, CharRange range) {
  if (range.start >= range.end)
    throw Error(ErrorCode::kSpanMismatch, "empty character range");
  std::size_t first = tokens.size();
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t].char_end > range.start) {
      first = t;
      break;
    }
  }
  if (first == tokens.size() || tokens[first].char_start >= range.end)
    throw Error(ErrorCode::kSpanMismatch, "character range outside the prompt");
  std::size_t last = first;
  while (last + 1 < tokens.size() && tokens[last + 1].char_start < range.end) ++last;

  const Token& head = tokens[first];
  if (head.char_start < range.start) {
    const std::string_view lead =
        std::string_view(head.text).substr(0, range.start - head.char_start);
    if (lead.find_first_not_of(' ') != std::string_view::npos)
      throw Error(ErrorCode::kSpanMismatch,
                  "token " + std::to_string(first) + " fuses the word with preceding text");
  }
  if (tokens[last].char_end != range.end)
    throw Error(ErrorCode::kSpanMismatch,
                "token " + std::to_string(last) + " fuses the word with following text");
  return {first, last + 1};
}

}  // namespace typolab
