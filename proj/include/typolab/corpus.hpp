#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "typolab/text.hpp"
#include "typolab/tokenizer.hpp"

namespace typolab {

struct CorpusSample {
  std::string id;
  WordSeq words;
};

using Corpus = std::vector<CorpusSample>;

enum class CorpusFormat { kAuto, kSquadJson, kPlainText };

CorpusFormat parse_corpus_format(const std::string& name);

// SQuAD-shaped JSON: either a top-level array of {"id", "context"} entries or
// the official {"data": [{"title", "paragraphs": [{"context", "qas"}]}]}
// layout. Plain text: one passage per line, ids "p000001", ... in line order.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format = CorpusFormat::kAuto);
Corpus parse_squad_json(const std::string& json_text);
Corpus parse_plain_text(const std::string& text);

struct TargetCandidate {
  std::string sample_id;
  WordSeq text;
  std::size_t target_index = 0;
  std::string target_word;  // punctuation-stripped core of text[target_index]
};

inline constexpr std::size_t kDefaultMinWordLength = 10;

// First eligible word per sample, in corpus order. A word is eligible when its
// punctuation-stripped core is all letters, at least `min_len` long, and a
// single token under `tokenizer`.
std::vector<TargetCandidate> select_targets(const Corpus& corpus, const Tokenizer& tokenizer,
                                            std::size_t min_len = kDefaultMinWordLength);

}  // namespace typolab
