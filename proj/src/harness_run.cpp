#include <cstdio>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "typolab/harness.hpp"

namespace typolab {

namespace {

struct Job {
  const PerturbedSample* sample = nullptr;
  bool baseline = false;
  std::string key;
};

struct JobResult {
  std::optional<DumpRecordMeta> meta;
  std::string skip_reason;
};

std::string dump_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "d%06zu.actd", index);
  return buf;
}

JobResult run_job(const Job& job, std::size_t index, const RefModel& model,
                  const Tokenizer& tokenizer, const fs::path& dir) {
  const PerturbedSample& s = *job.sample;
  JobResult result;
  try {
    const std::string prompt = job.baseline ? s.baseline_prompt() : s.prompt();
    const CharRange range = job.baseline ? s.baseline_range() : s.target_range();
    const auto tokens = tokenizer.encode(prompt);
    const TokenSpan span = locate_subword_span(tokens, range);
    std::vector<std::int32_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(t.id);
    if (ids.size() > model.config().max_seq_len)
      throw Error(ErrorCode::kPrecondition, "prompt of " + std::to_string(ids.size()) +
                                                " tokens exceeds max_seq_len");
    const ActivationDump dump = model.forward(ids, span, kernels::Backend::kSerial);

    DumpRecordMeta meta;
    meta.sample_id = s.sample_id;
    meta.sr = job.baseline ? 0.0 : s.sr();
    meta.ci = s.ci();
    meta.seed = s.seed();
    meta.role = job.baseline ? "baseline" : "sample";
    meta.prompt_token_count = ids.size();
    meta.target_span = span;
    meta.file = dump_file_name(index);
    write_dump(meta, dump, dir);
    result.meta = std::move(meta);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    result.skip_reason = e.what();
  }
  return result;
}

}  // namespace

RunSummary cmd_run_ref(const ExperimentConfig& config) {
  config.validate();
  if (config.model_source != "refmodel")
    throw Error(ErrorCode::kConfig, "run-ref needs model_source 'refmodel'");

  const auto samples = read_dataset(config.dataset_dir() / "dataset.jsonl");
  const auto tokenizer = ReferenceTokenizer::load(config.dataset_dir() / "vocab.json");

  RefModelConfig model_config = config.refmodel;
  if (model_config.vocab_size != 0 && model_config.vocab_size != tokenizer.vocab_size())
    throw Error(ErrorCode::kConfig,
                "refmodel.vocab_size " + std::to_string(model_config.vocab_size) +
                    " differs from the tokenizer's " + std::to_string(tokenizer.vocab_size()));
  model_config.vocab_size = tokenizer.vocab_size();
  const RefModel model = RefModel::init(model_config);
  spdlog::info("run-ref: {} samples, model {} parameters", samples.size(),
               model.parameter_count());

  // Samples first, then an SR=0 baseline for every key that has no SR=0 sample.
  std::vector<Job> jobs;
  std::set<std::string> keys_with_zero;
  for (const auto& s : samples) {
    const auto key = consistency_key(s.sample_id, s.ci(), s.seed());
    jobs.push_back({&s, false, key});
    if (s.sr() == 0.0) keys_with_zero.insert(key);
  }
  std::set<std::string> planned;
  for (const auto& s : samples) {
    const auto key = consistency_key(s.sample_id, s.ci(), s.seed());
    if (keys_with_zero.count(key) || !planned.insert(key).second) continue;
    jobs.push_back({&s, true, key});
  }

  const fs::path dir = config.dump_dir();
  fs::create_directories(dir);

  std::vector<JobResult> results(jobs.size());
  const auto n = static_cast<long>(jobs.size());
  const bool parallel = config.backend == kernels::Backend::kOpenMP;
  std::optional<Error> io_error;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < n; ++i) {
    try {
      results[i] = run_job(jobs[i], static_cast<std::size_t>(i), model, tokenizer, dir);
    } catch (const Error& e) {
#pragma omp critical
      if (!io_error) io_error = e;
    }
  }
  if (io_error) throw *io_error;

  // A key whose SR=0 reference failed cannot be scored; drop its samples too.
  std::set<std::string> dead_keys;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (!results[i].meta && (jobs[i].baseline || jobs[i].sample->sr() == 0.0))
      dead_keys.insert(jobs[i].key);

  RunSummary summary;
  summary.samples = samples.size();
  DumpManifest manifest;
  manifest.model_name = config.model_name;
  manifest.n_layers = model_config.n_layers;
  manifest.n_heads = model_config.n_heads;
  manifest.d_model = model_config.d_model;
  manifest.vocab_size = model_config.vocab_size;
  manifest.metadata["source"] = "refmodel";
  manifest.metadata["refmodel"] = to_json(model_config);
  manifest.metadata["tokenizer"] = "reference";
  manifest.metadata["tokenizer_vocab_size"] = tokenizer.vocab_size();
  manifest.metadata["prompt_template"] = "raw";

  std::vector<SkipRecord> skips;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& job = jobs[i];
    const PerturbedSample& s = *job.sample;
    std::string reason = results[i].skip_reason;
    if (results[i].meta && dead_keys.count(job.key))
      reason = "BaselineMissing: SR=0 reference for " + job.key + " was skipped";
    if (!reason.empty()) {
      skips.push_back({s.sample_id, reason, job.baseline ? 0.0 : s.sr(), s.ci(), s.seed()});
      if (!job.baseline) ++summary.skipped;
      continue;
    }
    manifest.records.push_back(*results[i].meta);
    ++summary.dumps_written;
    if (job.baseline) ++summary.baselines;
  }

  {
    std::ofstream out(dir / "skips.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / "skips.jsonl").string());
    for (const auto& skip : skips) out << to_json(skip).dump() << "\n";
  }

  if (!samples.empty() && static_cast<double>(summary.skipped) >
                              config.max_skip_fraction * static_cast<double>(samples.size()))
    throw Error(ErrorCode::kPartialSkip,
                std::to_string(summary.skipped) + " of " + std::to_string(samples.size()) +
                    " samples skipped; see " + (dir / "skips.jsonl").string());

  commit_manifest(manifest, dir);
  spdlog::info("run-ref: {} dumps ({} baselines), {} samples skipped, in {}",
               summary.dumps_written, summary.baselines, summary.skipped, dir.string());
  return summary;
}

}  // namespace typolab
