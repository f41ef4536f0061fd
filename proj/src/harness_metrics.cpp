#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "typolab/csv.hpp"
#include "typolab/harness.hpp"
#include "typolab/text.hpp"

namespace typolab {

namespace {

struct KeyGroup {
  std::string key;
  std::optional<std::size_t> baseline;  // record index
  std::vector<std::size_t> samples;
};

struct Scored {
  std::vector<double> scores;
  double kl = 0;
  AttentionSelfRecord attn;
};

struct RecordOutcome {
  std::optional<Scored> scored;
  std::string skip_reason;
  bool invalid = false;  // failed to read or validate, as opposed to a metric skip
};

std::string g9(double v) { return format_g9(v); }

// Distinct SR differences (including 0), merged within the pair-matching tolerance.
std::vector<double> distinct_deltas(const std::set<double>& levels) {
  std::vector<double> out;
  for (double a : levels)
    for (double b : levels)
      if (a >= b) out.push_back(a - b);
  std::sort(out.begin(), out.end());
  std::vector<double> merged;
  for (double d : out)
    if (merged.empty() || d - merged.back() > kSrMatchTolerance) merged.push_back(d);
  return merged;
}

}  // namespace

MetricsSummary cmd_metrics(const ExperimentConfig& config) {
  config.validate();
  const fs::path dump_dir = config.dump_dir();
  const DumpManifest manifest = load_manifest(dump_dir);
  const auto& records = manifest.records;

  std::vector<KeyGroup> groups;
  std::map<std::string, std::size_t> group_of;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto key = consistency_key(r.sample_id, r.ci, r.seed);
    auto [it, fresh] = group_of.emplace(key, groups.size());
    if (fresh) groups.push_back({key, std::nullopt, {}});
    KeyGroup& g = groups[it->second];
    if (r.role == "sample") {
      g.samples.push_back(i);
      if (r.sr == 0.0 && !g.baseline) g.baseline = i;
    } else if (!g.baseline || records[*g.baseline].role != "sample") {
      g.baseline = i;
    }
  }

  std::vector<std::string> missing;
  for (const auto& g : groups)
    if (!g.baseline && !g.samples.empty()) missing.push_back(g.key);
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i)
      list += (i ? ", " : "") + missing[i];
    if (missing.size() > 10) list += ", ...";
    throw Error(ErrorCode::kBaselineMissing, std::to_string(missing.size()) +
                                                 " keys have no SR=0 reference: " + list);
  }

  std::vector<RecordOutcome> outcomes(records.size());
  std::vector<std::string> baseline_issues(records.size());
  const auto n_groups = static_cast<long>(groups.size());
#pragma omp parallel for schedule(dynamic)
  for (long gi = 0; gi < n_groups; ++gi) {
    const KeyGroup& g = groups[gi];
    std::optional<ActivationDump> base;
    try {
      base = read_dump(records[*g.baseline], dump_dir, &manifest);
    } catch (const Error& e) {
      baseline_issues[*g.baseline] = e.what();
    }
    for (std::size_t idx : g.samples) {
      RecordOutcome& out = outcomes[idx];
      std::optional<ActivationDump> dump;
      try {
        dump = idx == *g.baseline && base ? *base : read_dump(records[idx], dump_dir, &manifest);
      } catch (const Error& e) {
        out.invalid = true;
        out.skip_reason = e.what();
        continue;
      }
      if (!base) {
        out.skip_reason = "BaselineMissing: SR=0 reference " + records[*g.baseline].file +
                          " is unreadable";
        continue;
      }
      try {
        Scored s;
        s.scores = sem_rec_score(*base, *dump).scores;
        s.kl = kl_divergence(std::span<const float>(dump->next_token_dist),
                             std::span<const float>(base->next_token_dist));
        s.attn = attention_self(*dump);
        out.scored = std::move(s);
      } catch (const Error& e) {
        out.skip_reason = e.what();
      }
    }
  }

  std::vector<std::string> issues;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!baseline_issues[i].empty()) issues.push_back(records[i].file + ": " + baseline_issues[i]);
    else if (outcomes[i].invalid) issues.push_back(records[i].file + ": " + outcomes[i].skip_reason);
  }
  if (!issues.empty() && !config.allow_partial) {
    std::string list;
    for (std::size_t i = 0; i < issues.size() && i < 5; ++i) list += "\n  " + issues[i];
    throw Error(ErrorCode::kValidation, std::to_string(issues.size()) +
                                            " dump records failed validation (use "
                                            "--allow-partial to score the rest):" + list);
  }

  const fs::path out_dir = config.metrics_dir();
  fs::create_directories(out_dir);
  MetricsSummary summary;
  summary.records = records.size();

  const std::size_t n_layers = manifest.n_layers;
  std::vector<std::size_t> scored_idx;
  std::vector<SkipRecord> skips;
  for (const auto& g : groups)
    for (std::size_t idx : g.samples) {
      const auto& r = records[idx];
      if (outcomes[idx].scored) {
        scored_idx.push_back(idx);
      } else {
        skips.push_back({r.sample_id, outcomes[idx].skip_reason, r.sr, r.ci, r.seed});
      }
    }
  summary.scored = scored_idx.size();
  summary.skipped = skips.size();

  auto condition_less = [&](std::size_t a, std::size_t b) {
    const auto& x = records[a];
    const auto& y = records[b];
    return std::tie(x.sr, x.ci, x.seed, x.sample_id) < std::tie(y.sr, y.ci, y.seed, y.sample_id);
  };
  std::vector<std::size_t> ordered = scored_idx;
  std::stable_sort(ordered.begin(), ordered.end(), condition_less);

  {
    CsvWriter w(out_dir / "semrec.csv", {"sample_id", "sr", "ci", "seed", "layer", "score"});
    for (std::size_t idx : ordered) {
      const auto& r = records[idx];
      const auto& scores = outcomes[idx].scored->scores;
      for (std::size_t l = 0; l < scores.size(); ++l)
        w.row({r.sample_id, g9(r.sr), g9(r.ci), std::to_string(r.seed), std::to_string(l),
               g9(scores[l])});
    }
  }

  std::map<std::pair<double, double>, std::vector<std::size_t>> by_condition;
  for (std::size_t idx : ordered) by_condition[{records[idx].sr, records[idx].ci}].push_back(idx);

  {
    CsvWriter w(out_dir / "layer_curves.csv", {"sr", "ci", "layer", "mean", "std", "n"});
    for (const auto& [cond, idxs] : by_condition)
      for (std::size_t l = 0; l <= n_layers; ++l) {
        std::vector<double> v;
        for (std::size_t idx : idxs) v.push_back(outcomes[idx].scored->scores[l]);
        const MeanStd ms = mean_std(v);
        w.row({g9(cond.first), g9(cond.second), std::to_string(l), g9(ms.mean), g9(ms.std),
               std::to_string(ms.n)});
      }
  }

  std::vector<ConsistencyRecord> consistency;
  std::set<double> sr_seen;
  {
    CsvWriter w(out_dir / "consistency.csv", {"key", "sr", "final_score", "kldiv"});
    for (const auto& g : groups) {
      ConsistencyRecord rec{g.key, {}};
      for (std::size_t idx : g.samples) {
        if (!outcomes[idx].scored) continue;
        const auto& s = *outcomes[idx].scored;
        rec.levels.push_back({records[idx].sr, s.scores.back(), s.kl});
        sr_seen.insert(records[idx].sr);
      }
      if (rec.levels.empty()) continue;
      std::stable_sort(rec.levels.begin(), rec.levels.end(),
                       [](const SrLevelStat& a, const SrLevelStat& b) { return a.sr < b.sr; });
      for (const auto& lv : rec.levels)
        w.row({rec.key, g9(lv.sr), g9(lv.final_score), g9(lv.kldiv)});
      consistency.push_back(std::move(rec));
    }
  }

  {
    CsvWriter w(out_dir / "negcorr.csv", {"delta_sr", "mode", "rate", "n_pairs", "n_words"});
    for (double delta : distinct_deltas(sr_seen))
      for (NegCorrMode mode : {NegCorrMode::kPerWord, NegCorrMode::kPooled}) {
        try {
          const auto r = neg_corr_rate(consistency, delta, mode);
          w.row({g9(delta), to_string(mode), g9(r.rate), std::to_string(r.n_pairs),
                 std::to_string(r.n_words)});
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kEmptyPairSet) throw;
        }
      }
  }

  {
    CsvWriter w(out_dir / "attnself.csv", {"sample_id", "sr", "ci", "seed", "layer", "aggregate"});
    for (std::size_t idx : ordered) {
      const auto& r = records[idx];
      const auto& a = outcomes[idx].scored->attn;
      for (std::size_t l = 0; l < a.n_layers; ++l)
        w.row({r.sample_id, g9(r.sr), g9(r.ci), std::to_string(r.seed), std::to_string(l),
               g9(a.aggregate[l])});
    }
  }
  {
    CsvWriter w(out_dir / "attnself_curves.csv", {"sr", "ci", "layer", "mean", "std", "n"});
    for (const auto& [cond, idxs] : by_condition)
      for (std::size_t l = 0; l < n_layers; ++l) {
        std::vector<double> v;
        for (std::size_t idx : idxs) v.push_back(outcomes[idx].scored->attn.aggregate[l]);
        const MeanStd ms = mean_std(v);
        w.row({g9(cond.first), g9(cond.second), std::to_string(l), g9(ms.mean), g9(ms.std),
               std::to_string(ms.n)});
      }
  }

  // Heatmaps pool every CI level and seed of one SR level.
  std::map<double, std::vector<AttentionSelfRecord>> by_sr;
  for (std::size_t idx : ordered) {
    AttentionSelfRecord a = outcomes[idx].scored->attn;
    a.sample_id = records[idx].sample_id;
    a.sr = records[idx].sr;
    a.ci = records[idx].ci;
    a.seed = records[idx].seed;
    by_sr[a.sr].push_back(std::move(a));
  }
  for (const auto& old : fs::directory_iterator(out_dir)) {
    const auto name = old.path().filename().string();
    if (name.rfind("heatmap_sr", 0) == 0) fs::remove(old.path());
  }
  const std::size_t k = std::min(config.top_k, manifest.n_layers * manifest.n_heads);
  std::map<double, std::vector<HeadId>> top_sets;
  {
    CsvWriter heads(out_dir / "form_heads.csv", {"sr", "rank", "layer", "head", "value"});
    for (const auto& [sr, recs] : by_sr) {
      const HeadHeatmap hm = head_heatmap(recs);
      CsvWriter w(out_dir / ("heatmap_sr" + format_level(sr) + ".csv"),
                  {"layer", "head", "mean", "n"});
      for (std::size_t l = 0; l < hm.n_layers; ++l)
        for (std::size_t h = 0; h < hm.n_heads; ++h)
          w.row({std::to_string(l), std::to_string(h), g9(hm.at(l, h)), std::to_string(hm.count)});
      const auto top = form_sensitive_heads(hm, k);
      auto& ids = top_sets[sr];
      for (std::size_t i = 0; i < top.size(); ++i) {
        heads.row({g9(sr), std::to_string(i + 1), std::to_string(top[i].id.layer),
                   std::to_string(top[i].id.head), g9(top[i].value)});
        ids.push_back(top[i].id);
      }
    }
  }
  {
    CsvWriter w(out_dir / "head_stability.csv", {"sr_a", "sr_b", "k", "jaccard"});
    for (auto a = top_sets.begin(); a != top_sets.end(); ++a)
      for (auto b = std::next(a); b != top_sets.end(); ++b)
        w.row({g9(a->first), g9(b->first), std::to_string(k),
               g9(head_set_stability(a->second, b->second))});
  }

  {
    std::ofstream out(out_dir / "skips.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (out_dir / "skips.jsonl").string());
    for (const auto& skip : skips) out << to_json(skip).dump() << "\n";
  }

  if (!issues.empty())
    spdlog::warn("metrics: {} invalid records left out (allow_partial)", issues.size());
  spdlog::info("metrics: {} records, {} scored, {} skipped -> {}", summary.records,
               summary.scored, summary.skipped, out_dir.string());
  return summary;
}

}  // namespace typolab
