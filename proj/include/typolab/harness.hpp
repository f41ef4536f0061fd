#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "typolab/corpus.hpp"
#include "typolab/error.hpp"
#include "typolab/kernels.hpp"
#include "typolab/metrics.hpp"
#include "typolab/perturb.hpp"
#include "typolab/refmodel.hpp"

namespace typolab {

namespace fs = std::filesystem;

enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kData = 3,
  kPartialSkip = 4,
};

ExitCode exit_code_for(ErrorCode code);

struct ExperimentConfig {
  fs::path corpus;
  CorpusFormat corpus_format = CorpusFormat::kAuto;
  std::vector<double> sr_levels{0, 0.25, 0.5, 0.75, 1};
  std::vector<double> ci_levels{0, 0.25, 0.5, 0.75, 1};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t min_word_length = kDefaultMinWordLength;
  std::size_t max_candidates = 0;  // 0 = every candidate
  std::string tokenizer = "reference";  // "reference" or a vocabulary file path
  std::string model_source = "refmodel";  // "refmodel" or "dumps"
  RefModelConfig refmodel;
  std::string model_name = "typolab-refmodel";
  kernels::Backend backend = kernels::Backend::kOpenMP;
  fs::path output_dir = "typolab_out";
  std::optional<fs::path> dumps;  // pre-existing or explicit dump directory
  NegCorrMode negcorr_mode = NegCorrMode::kPerWord;
  std::size_t top_k = 8;
  bool allow_partial = false;
  double max_skip_fraction = 0.5;

  fs::path dataset_dir() const { return output_dir / "dataset"; }
  fs::path dump_dir() const { return dumps ? *dumps : output_dir / "dumps"; }
  fs::path metrics_dir() const { return output_dir / "metrics"; }
  fs::path report_dir() const { return output_dir / "report"; }

  // Throws kConfig on out-of-range levels, empty lists, or bad counts.
  void validate() const;
};

// Relative paths in the file resolve against the file's directory.
ExperimentConfig load_experiment_config(const fs::path& path);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const fs::path& base_dir);

struct GenSummary {
  std::size_t corpus_samples = 0;
  std::size_t candidates = 0;
  std::size_t samples = 0;
  std::map<std::string, std::size_t> skips_by_reason;
};

struct RunSummary {
  std::size_t samples = 0;
  std::size_t dumps_written = 0;
  std::size_t baselines = 0;
  std::size_t skipped = 0;
};

struct MetricsSummary {
  std::size_t records = 0;
  std::size_t scored = 0;
  std::size_t skipped = 0;
};

// gen: corpus -> dataset/{dataset.jsonl, dataset_sr*_ci*_seed*.jsonl, vocab.json,
// skips.jsonl, summary.json}. Throws kNoCandidates when nothing qualifies.
GenSummary cmd_gen(const ExperimentConfig& config);

// run-ref: dataset -> dump directory with one dump per sample plus an SR=0
// baseline per (sample_id, ci, seed) key that lacks one. Throws kPartialSkip
// when more than max_skip_fraction of samples are skipped.
RunSummary cmd_run_ref(const ExperimentConfig& config);

// metrics: dump directory -> CSVs in metrics/. Refuses invalid dump sets
// unless allow_partial; throws kBaselineMissing listing keys without SR=0.
MetricsSummary cmd_metrics(const ExperimentConfig& config);

// report: metrics CSVs -> JSON plot bundles in report/.
std::vector<fs::path> cmd_report(const ExperimentConfig& config);

// Identifier of a word key shared by all SR levels of one masked context.
std::string consistency_key(const std::string& sample_id, double ci, std::uint64_t seed);

// Dataset file name for one grid cell.
std::string cell_file_name(double sr, double ci, std::uint64_t seed);

std::vector<PerturbedSample> read_dataset(const fs::path& jsonl);

}  // namespace typolab
