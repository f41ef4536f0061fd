#include <fstream>
#include <set>

#include "typolab/harness.hpp"
#include "typolab/text.hpp"

namespace typolab {

ExitCode exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kPrecondition:
      return ExitCode::kConfig;
    case ErrorCode::kPartialSkip:
      return ExitCode::kPartialSkip;
    default:
      return ExitCode::kData;
  }
}

void ExperimentConfig::validate() const {
  auto check_levels = [](const std::vector<double>& levels, const char* name) {
    if (levels.empty()) throw Error(ErrorCode::kConfig, std::string(name) + " is empty");
    std::set<double> seen;
    for (double v : levels) {
      if (!(v >= 0.0 && v <= 1.0))
        throw Error(ErrorCode::kConfig, std::string(name) + " value " + format_level(v) +
                                            " outside [0, 1]");
      if (!seen.insert(v).second)
        throw Error(ErrorCode::kConfig, std::string(name) + " repeats " + format_level(v));
    }
  };
  check_levels(sr_levels, "sr_levels");
  check_levels(ci_levels, "ci_levels");
  if (seeds.empty()) throw Error(ErrorCode::kConfig, "seeds is empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw Error(ErrorCode::kConfig, "seeds repeat");
  if (min_word_length < 4) throw Error(ErrorCode::kConfig, "min_word_length must be >= 4");
  if (top_k == 0) throw Error(ErrorCode::kConfig, "top_k must be >= 1");
  if (!(max_skip_fraction >= 0.0 && max_skip_fraction <= 1.0))
    throw Error(ErrorCode::kConfig, "max_skip_fraction outside [0, 1]");
  if (model_source != "refmodel" && model_source != "dumps")
    throw Error(ErrorCode::kConfig, "model_source must be 'refmodel' or 'dumps'");
  if (model_source == "dumps" && !dumps)
    throw Error(ErrorCode::kConfig, "model_source 'dumps' needs a dumps directory");
  if (output_dir.empty()) throw Error(ErrorCode::kConfig, "output_dir is empty");
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  static const std::set<std::string> kKeys = {
      "corpus",     "corpus_format", "sr_levels",    "ci_levels",    "seeds",
      "min_word_length", "max_candidates", "tokenizer", "model_source", "refmodel",
      "model_name", "backend",       "output_dir",   "dumps",        "negcorr_mode",
      "top_k",      "allow_partial", "max_skip_fraction"};
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "experiment config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kKeys.count(key)) throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");

  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  ExperimentConfig c;
  try {
    if (j.contains("corpus")) c.corpus = resolve(j["corpus"].get<std::string>());
    if (j.contains("corpus_format"))
      c.corpus_format = parse_corpus_format(j["corpus_format"].get<std::string>());
    if (j.contains("sr_levels")) c.sr_levels = j["sr_levels"].get<std::vector<double>>();
    if (j.contains("ci_levels")) c.ci_levels = j["ci_levels"].get<std::vector<double>>();
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    c.min_word_length = j.value("min_word_length", c.min_word_length);
    c.max_candidates = j.value("max_candidates", c.max_candidates);
    if (j.contains("tokenizer")) {
      c.tokenizer = j["tokenizer"].get<std::string>();
      if (c.tokenizer != "reference") c.tokenizer = resolve(c.tokenizer).string();
    }
    c.model_source = j.value("model_source", c.model_source);
    if (j.contains("refmodel")) c.refmodel = refmodel_config_from_json(j["refmodel"]);
    c.model_name = j.value("model_name", c.model_name);
    if (j.contains("backend")) c.backend = kernels::parse_backend(j["backend"].get<std::string>());
    if (j.contains("output_dir")) c.output_dir = resolve(j["output_dir"].get<std::string>());
    if (j.contains("dumps")) c.dumps = resolve(j["dumps"].get<std::string>());
    if (j.contains("negcorr_mode"))
      c.negcorr_mode = parse_negcorr_mode(j["negcorr_mode"].get<std::string>());
    c.top_k = j.value("top_k", c.top_k);
    c.allow_partial = j.value("allow_partial", c.allow_partial);
    c.max_skip_fraction = j.value("max_skip_fraction", c.max_skip_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return experiment_config_from_json(j, path.parent_path());
}

std::string consistency_key(const std::string& sample_id, double ci, std::uint64_t seed) {
  return sample_id + "|ci=" + format_level(ci) + "|seed=" + std::to_string(seed);
}

std::string cell_file_name(double sr, double ci, std::uint64_t seed) {
  return "dataset_sr" + format_level(sr) + "_ci" + format_level(ci) + "_seed" +
         std::to_string(seed) + ".jsonl";
}

}  // namespace typolab
