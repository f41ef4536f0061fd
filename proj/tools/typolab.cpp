// typolab: gen | run-ref | validate | metrics | report
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "typolab/activation_store.hpp"
#include "typolab/harness.hpp"
#include "typolab/log.hpp"

namespace {

using namespace typolab;

struct Overrides {
  std::string config;
  std::vector<double> sr, ci;
  std::vector<std::uint64_t> seeds;
  std::string out, dumps, corpus, negcorr_mode;
  std::optional<std::size_t> top_k;
  bool allow_partial = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "ExperimentConfig JSON");
  cmd->add_option("--sr", o.sr, "SR levels")->delimiter(',');
  cmd->add_option("--ci", o.ci, "CI levels")->delimiter(',');
  cmd->add_option("--seeds", o.seeds, "seeds")->delimiter(',');
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--dumps", o.dumps, "dump directory");
  cmd->add_option("--corpus", o.corpus, "corpus file");
  cmd->add_option("--negcorr-mode", o.negcorr_mode, "per-word or pooled");
  cmd->add_option("--top-k", o.top_k, "form-sensitive heads per SR level");
  cmd->add_flag("--allow-partial", o.allow_partial, "score valid records of a damaged dump set");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_experiment_config(o.config);
  if (!o.sr.empty()) c.sr_levels = o.sr;
  if (!o.ci.empty()) c.ci_levels = o.ci;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.dumps.empty()) c.dumps = fs::path(o.dumps);
  if (!o.corpus.empty()) c.corpus = o.corpus;
  if (!o.negcorr_mode.empty()) c.negcorr_mode = parse_negcorr_mode(o.negcorr_mode);
  if (o.top_k) c.top_k = *o.top_k;
  if (o.allow_partial) c.allow_partial = true;
  c.validate();
  return c;
}

int run_validate(const ExperimentConfig& c) {
  const auto report = validate_directory(c.dump_dir());
  for (const auto& issue : report.issues) std::printf("ERROR %s: %s\n", issue.file.c_str(),
                                                      issue.error.c_str());
  std::printf("%zu records, %zu valid, %zu errors\n", report.records, report.valid,
              report.issues.size());
  return report.ok() ? 0 : static_cast<int>(ExitCode::kData);
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"typoglycemia interpretability harness"};
  app.require_subcommand(1);
  Overrides o;
  auto* gen = app.add_subcommand("gen", "corpus -> perturbed dataset");
  auto* run = app.add_subcommand("run-ref", "dataset -> reference-model activation dumps");
  auto* val = app.add_subcommand("validate", "check a dump directory");
  auto* met = app.add_subcommand("metrics", "dumps -> metric CSVs");
  auto* rep = app.add_subcommand("report", "metric CSVs -> JSON plot bundles");
  for (auto* cmd : {gen, run, val, met, rep}) add_common(cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    const ExperimentConfig config = resolve(o);
    if (gen->parsed()) {
      const auto s = cmd_gen(config);
      std::printf("candidates %zu, samples %zu\n", s.candidates, s.samples);
      for (const auto& [reason, n] : s.skips_by_reason) std::printf("skipped %s: %zu\n",
                                                                   reason.c_str(), n);
    } else if (run->parsed()) {
      const auto s = cmd_run_ref(config);
      std::printf("dumps %zu (baselines %zu), samples skipped %zu\n", s.dumps_written,
                  s.baselines, s.skipped);
    } else if (val->parsed()) {
      return run_validate(config);
    } else if (met->parsed()) {
      const auto s = cmd_metrics(config);
      std::printf("records %zu, scored %zu, skipped %zu\n", s.records, s.scored, s.skipped);
    } else if (rep->parsed()) {
      for (const auto& p : cmd_report(config)) std::printf("%s\n", p.string().c_str());
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(exit_code_for(e.code()));
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ExitCode::kData);
  }
  return 0;
}
