#include "typolab/corpus.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "typolab/error.hpp"

namespace typolab {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open corpus " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CorpusSample make_sample(std::string id, const std::string& context) {
  CorpusSample s{std::move(id), split_words(context)};
  if (s.words.empty())
    throw Error(ErrorCode::kCorpusParse, "sample '" + s.id + "' has an empty context");
  return s;
}

}  // namespace

CorpusFormat parse_corpus_format(const std::string& name) {
  if (name.empty() || name == "auto") return CorpusFormat::kAuto;
  if (name == "squad" || name == "json") return CorpusFormat::kSquadJson;
  if (name == "text" || name == "txt") return CorpusFormat::kPlainText;
  throw Error(ErrorCode::kConfig, "unknown corpus format '" + name + "'");
}

Corpus parse_squad_json(const std::string& json_text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorpusParse, std::string("corpus is not valid JSON: ") + e.what());
  }
  Corpus corpus;
  if (root.is_array()) {
    for (std::size_t i = 0; i < root.size(); ++i) {
      const auto& entry = root[i];
      std::string id = entry.contains("id") && entry["id"].is_string()
                           ? entry["id"].get<std::string>()
                           : "entry#" + std::to_string(i);
      if (!entry.contains("context") || !entry["context"].is_string())
        throw Error(ErrorCode::kCorpusParse, "sample '" + id + "' lacks a string 'context'");
      corpus.push_back(make_sample(std::move(id), entry["context"].get<std::string>()));
    }
    return corpus;
  }
  if (!root.is_object() || !root.contains("data") || !root["data"].is_array())
    throw Error(ErrorCode::kCorpusParse, "corpus JSON is neither an entry array nor SQuAD 'data'");
  for (const auto& article : root["data"]) {
    const std::string title = article.value("title", std::string("untitled"));
    if (!article.contains("paragraphs")) continue;
    std::size_t p = 0;
    for (const auto& para : article["paragraphs"]) {
      std::string id = title + "#" + std::to_string(p++);
      if (para.contains("qas") && para["qas"].is_array() && !para["qas"].empty() &&
          para["qas"][0].contains("id"))
        id = para["qas"][0]["id"].get<std::string>();
      if (!para.contains("context") || !para["context"].is_string())
        throw Error(ErrorCode::kCorpusParse, "sample '" + id + "' lacks a string 'context'");
      corpus.push_back(make_sample(std::move(id), para["context"].get<std::string>()));
    }
  }
  return corpus;
}

Corpus parse_plain_text(const std::string& text) {
  Corpus corpus;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (split_words(line).empty()) continue;
    char id[32];
    std::snprintf(id, sizeof id, "p%06zu", ++n);
    corpus.push_back(make_sample(id, line));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  const std::string content = read_file(path);
  if (format == CorpusFormat::kAuto) {
    const auto first = content.find_first_not_of(" \t\r\n");
    const bool looks_json = first != std::string::npos &&
                            (content[first] == '[' || content[first] == '{');
    format = (path.extension() == ".json" || looks_json) ? CorpusFormat::kSquadJson
                                                          : CorpusFormat::kPlainText;
  }
  return format == CorpusFormat::kSquadJson ? parse_squad_json(content)
                                            : parse_plain_text(content);
}

std::vector<TargetCandidate> select_targets(const Corpus& corpus, const Tokenizer& tokenizer,
                                            std::size_t min_len) {
  std::vector<TargetCandidate> out;
  for (const auto& sample : corpus) {
    for (std::size_t i = 0; i < sample.words.size(); ++i) {
      const auto core = split_punctuation(sample.words[i]).core;
      if (core.size() < min_len || !is_ascii_letters(core)) continue;
      if (!is_single_token(core, tokenizer)) continue;
      out.push_back({sample.id, sample.words, i, std::string(core)});
      break;
    }
  }
  return out;
}

}  // namespace typolab
