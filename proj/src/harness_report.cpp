#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

#include "typolab/csv.hpp"
#include "typolab/harness.hpp"
#include "typolab/text.hpp"

namespace typolab {

namespace {

using ojson = nlohmann::ordered_json;

double num(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kFormat, "metrics CSV field '" + s + "' is not a number");
  }
}

struct CurveRow {
  double sr, ci;
  double layer, mean, std, n;
};

std::vector<CurveRow> read_curves(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto sr = t.column("sr"), ci = t.column("ci"), layer = t.column("layer"),
             mean = t.column("mean"), sd = t.column("std"), n = t.column("n");
  std::vector<CurveRow> out;
  for (const auto& r : t.rows)
    out.push_back({num(r[sr]), num(r[ci]), num(r[layer]), num(r[mean]), num(r[sd]), num(r[n])});
  return out;
}

// Panels keyed by one condition, series by the other, x = layer.
ojson curve_figure(const std::vector<CurveRow>& rows, const std::string& figure,
                   const std::string& y_label, bool panel_by_ci) {
  std::map<double, std::map<double, std::vector<const CurveRow*>>> panels;
  for (const auto& r : rows) {
    const double p = panel_by_ci ? r.ci : r.sr;
    const double s = panel_by_ci ? r.sr : r.ci;
    panels[p][s].push_back(&r);
  }
  const char* panel_name = panel_by_ci ? "ci" : "sr";
  const char* series_name = panel_by_ci ? "sr" : "ci";
  ojson fig;
  fig["figure"] = figure;
  fig["x_label"] = "layer";
  fig["y_label"] = y_label;
  fig["panel_condition"] = panel_by_ci ? "CI" : "SR";
  fig["series_condition"] = panel_by_ci ? "SR" : "CI";
  fig["panels"] = ojson::array();
  for (const auto& [p, series] : panels) {
    ojson panel;
    panel["condition"] = {{panel_name, p}};
    panel["series"] = ojson::array();
    for (const auto& [s, pts] : series) {
      ojson se;
      se["label"] = std::string(panel_by_ci ? "SR=" : "CI=") + format_level(s);
      se[series_name] = s;
      ojson layer = ojson::array(), mean = ojson::array(), sd = ojson::array(), n = ojson::array();
      for (const CurveRow* r : pts) {
        layer.push_back(static_cast<std::size_t>(r->layer));
        mean.push_back(r->mean);
        sd.push_back(r->std);
        n.push_back(static_cast<std::size_t>(r->n));
      }
      se["layer"] = layer;
      se["mean"] = mean;
      se["std"] = sd;
      se["n"] = n;
      panel["series"].push_back(se);
    }
    fig["panels"].push_back(panel);
  }
  return fig;
}

void write_json(const fs::path& path, const ojson& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(1) << "\n";
}

}  // namespace

std::vector<fs::path> cmd_report(const ExperimentConfig& config) {
  const fs::path in = config.metrics_dir();
  const std::vector<std::string> required = {"negcorr.csv", "layer_curves.csv",
                                             "attnself_curves.csv", "form_heads.csv",
                                             "head_stability.csv"};
  std::vector<std::string> absent;
  for (const auto& name : required)
    if (!fs::exists(in / name)) absent.push_back(name);
  std::vector<fs::path> heatmaps;
  if (fs::is_directory(in))
    for (const auto& e : fs::directory_iterator(in)) {
      const auto name = e.path().filename().string();
      if (name.rfind("heatmap_sr", 0) == 0 && e.path().extension() == ".csv")
        heatmaps.push_back(e.path());
    }
  if (heatmaps.empty()) absent.push_back("heatmap_sr*.csv");
  if (!absent.empty()) {
    std::string list;
    for (const auto& a : absent) list += (list.empty() ? "" : ", ") + a;
    throw Error(ErrorCode::kIo, "missing metrics files in " + in.string() + ": " + list);
  }

  const fs::path out = config.report_dir();
  fs::create_directories(out);
  std::vector<fs::path> written;

  {
    const CsvTable t = read_csv(in / "negcorr.csv");
    const auto delta = t.column("delta_sr"), mode = t.column("mode"), rate = t.column("rate"),
               pairs = t.column("n_pairs"), words = t.column("n_words");
    const std::string primary = to_string(config.negcorr_mode);
    std::vector<std::string> modes = {primary};
    for (const auto& m : {NegCorrMode::kPerWord, NegCorrMode::kPooled})
      if (to_string(m) != primary) modes.push_back(to_string(m));
    ojson fig;
    fig["figure"] = "negcorr_vs_delta_sr";
    fig["x_label"] = "delta SR";
    fig["y_label"] = "NegCorrRate";
    fig["primary_mode"] = primary;
    fig["series"] = ojson::array();
    for (const auto& m : modes) {
      ojson se;
      se["mode"] = m;
      se["points"] = ojson::array();
      for (const auto& r : t.rows) {
        if (r[mode] != m) continue;
        se["points"].push_back({{"delta_sr", num(r[delta])},
                                {"rate", num(r[rate])},
                                {"n_pairs", static_cast<std::size_t>(num(r[pairs]))},
                                {"n_words", static_cast<std::size_t>(num(r[words]))}});
      }
      fig["series"].push_back(se);
    }
    written.push_back(out / "fig1_negcorr.json");
    write_json(written.back(), fig);
  }

  const auto semrec = read_curves(in / "layer_curves.csv");
  written.push_back(out / "fig2_semrec_by_sr.json");
  write_json(written.back(), curve_figure(semrec, "semrec_by_sr", "SemRecScore", true));
  written.push_back(out / "fig2_semrec_by_ci.json");
  write_json(written.back(), curve_figure(semrec, "semrec_by_ci", "SemRecScore", false));

  written.push_back(out / "fig3_attnself.json");
  write_json(written.back(), curve_figure(read_curves(in / "attnself_curves.csv"),
                                          "attnself_by_sr", "AttentionSelf", true));

  {
    const CsvTable heads = read_csv(in / "form_heads.csv");
    const auto h_sr = heads.column("sr"), h_rank = heads.column("rank"),
               h_layer = heads.column("layer"), h_head = heads.column("head"),
               h_value = heads.column("value");
    std::vector<std::pair<double, fs::path>> sorted;
    for (const auto& p : heatmaps) {
      const auto stem = p.stem().string().substr(std::string("heatmap_sr").size());
      sorted.emplace_back(num(stem), p);
    }
    std::sort(sorted.begin(), sorted.end());

    ojson fig;
    fig["figure"] = "attention_self_heatmaps";
    fig["x_label"] = "head";
    fig["y_label"] = "layer";
    fig["panels"] = ojson::array();
    for (const auto& [sr, path] : sorted) {
      const CsvTable t = read_csv(path);
      const auto layer = t.column("layer"), head = t.column("head"), mean = t.column("mean"),
                 n = t.column("n");
      ojson matrix = ojson::array();
      std::size_t count = 0;
      for (const auto& r : t.rows) {
        const auto l = static_cast<std::size_t>(num(r[layer]));
        const auto h = static_cast<std::size_t>(num(r[head]));
        while (matrix.size() <= l) matrix.push_back(ojson::array());
        while (matrix[l].size() <= h) matrix[l].push_back(0.0);
        matrix[l][h] = num(r[mean]);
        count = static_cast<std::size_t>(num(r[n]));
      }
      ojson top = ojson::array();
      for (const auto& r : heads.rows)
        if (std::abs(num(r[h_sr]) - sr) <= kSrMatchTolerance)
          top.push_back({{"rank", static_cast<std::size_t>(num(r[h_rank]))},
                         {"layer", static_cast<std::size_t>(num(r[h_layer]))},
                         {"head", static_cast<std::size_t>(num(r[h_head]))},
                         {"value", num(r[h_value])}});
      ojson panel;
      panel["condition"] = {{"sr", sr}};
      panel["n"] = count;
      panel["matrix"] = matrix;
      panel["form_sensitive_heads"] = top;
      fig["panels"].push_back(panel);
    }
    const CsvTable stab = read_csv(in / "head_stability.csv");
    const auto a = stab.column("sr_a"), b = stab.column("sr_b"), k = stab.column("k"),
               jac = stab.column("jaccard");
    fig["stability"] = ojson::array();
    for (const auto& r : stab.rows)
      fig["stability"].push_back({{"sr_a", num(r[a])},
                                  {"sr_b", num(r[b])},
                                  {"k", static_cast<std::size_t>(num(r[k]))},
                                  {"jaccard", num(r[jac])}});
    written.push_back(out / "fig4_heatmaps.json");
    write_json(written.back(), fig);
  }

  ojson index;
  index["figures"] = ojson::array();
  for (const auto& p : written) index["figures"].push_back(p.filename().string());
  written.push_back(out / "index.json");
  write_json(written.back(), index);

  spdlog::info("report: {} bundles in {}", written.size(), out.string());
  return written;
}

}  // namespace typolab
