#include <fstream>
#include <memory>

#include <spdlog/spdlog.h>

#include "typolab/harness.hpp"

namespace typolab {

namespace {

std::string reason_name(const std::string& reason) {
  return reason.substr(0, reason.find(':'));
}

std::unique_ptr<Tokenizer> make_tokenizer(const ExperimentConfig& config, const Corpus& corpus,
                                          ReferenceTokenizer** as_reference) {
  std::unique_ptr<ReferenceTokenizer> tok;
  if (config.tokenizer == "reference") {
    std::vector<WordSeq> texts;
    texts.reserve(corpus.size());
    for (const auto& s : corpus) texts.push_back(s.words);
    tok = std::make_unique<ReferenceTokenizer>(ReferenceTokenizer::from_corpus(texts));
  } else {
    tok = std::make_unique<ReferenceTokenizer>(ReferenceTokenizer::load(config.tokenizer));
  }
  *as_reference = tok.get();
  return tok;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<PerturbedSample> read_dataset(const fs::path& jsonl) {
  std::ifstream in(jsonl, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open dataset " + jsonl.string());
  std::vector<PerturbedSample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorpusParse,
                  jsonl.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

GenSummary cmd_gen(const ExperimentConfig& config) {
  config.validate();
  if (config.corpus.empty()) throw Error(ErrorCode::kConfig, "no corpus configured");
  const Corpus corpus = load_corpus(config.corpus, config.corpus_format);
  ReferenceTokenizer* reference = nullptr;
  const auto tokenizer = make_tokenizer(config, corpus, &reference);

  GenSummary summary;
  summary.corpus_samples = corpus.size();
  std::vector<SkipRecord> skips;

  Corpus usable;
  for (const auto& sample : corpus) {
    try {
      tokenizer->encode(join_words(sample.words));
      usable.push_back(sample);
    } catch (const Error& e) {
      skips.push_back({sample.id, e.what(), std::nullopt, std::nullopt, std::nullopt});
    }
  }

  auto candidates = select_targets(usable, *tokenizer, config.min_word_length);
  if (config.max_candidates > 0 && candidates.size() > config.max_candidates)
    candidates.resize(config.max_candidates);
  summary.candidates = candidates.size();
  spdlog::info("gen: {} corpus samples, {} candidates", corpus.size(), candidates.size());
  if (candidates.empty())
    throw Error(ErrorCode::kNoCandidates, "no word of at least " +
                                              std::to_string(config.min_word_length) +
                                              " letters is a single token in " +
                                              config.corpus.string());

  std::vector<std::vector<PerturbedSample>> per_candidate(candidates.size());
  std::vector<std::vector<SkipRecord>> per_candidate_skips(candidates.size());
  const auto n = static_cast<long>(candidates.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i)
    per_candidate[i] = build_matrix(candidates[i], config.sr_levels, config.ci_levels,
                                    config.seeds, &per_candidate_skips[i]);

  const fs::path dir = config.dataset_dir();
  fs::create_directories(dir);

  std::map<std::string, std::ofstream> cells;
  for (auto seed : config.seeds)
    for (double sr : config.sr_levels)
      for (double ci : config.ci_levels) {
        const auto name = cell_file_name(sr, ci, seed);
        cells.emplace(name, open_out(dir / name));
      }

  auto all = open_out(dir / "dataset.jsonl");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (const auto& s : per_candidate[i]) {
      const std::string line = to_json(s).dump() + "\n";
      all << line;
      cells.at(cell_file_name(s.sr(), s.ci(), s.seed())) << line;
      ++summary.samples;
    }
    for (auto& skip : per_candidate_skips[i]) skips.push_back(std::move(skip));
  }

  reference->save(dir / "vocab.json");

  auto skip_out = open_out(dir / "skips.jsonl");
  for (const auto& skip : skips) {
    skip_out << to_json(skip).dump() << "\n";
    ++summary.skips_by_reason[reason_name(skip.reason)];
  }

  nlohmann::ordered_json js;
  js["corpus"] = config.corpus.filename().string();
  js["corpus_samples"] = summary.corpus_samples;
  js["candidates"] = summary.candidates;
  js["samples"] = summary.samples;
  js["skips_by_reason"] = summary.skips_by_reason;
  js["sr_levels"] = config.sr_levels;
  js["ci_levels"] = config.ci_levels;
  js["seeds"] = config.seeds;
  js["min_word_length"] = config.min_word_length;
  js["tokenizer"] = config.tokenizer == "reference" ? "reference" : "vocabulary-file";
  js["vocab_size"] = tokenizer->vocab_size();
  open_out(dir / "summary.json") << js.dump(1) << "\n";

  spdlog::info("gen: wrote {} samples, {} skips to {}", summary.samples, skips.size(),
               dir.string());
  return summary;
}

}  // namespace typolab
