#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "foggy/decoygen.hpp"
#include "foggy/error.hpp"
#include "foggy/metrics.hpp"

namespace foggy {

inline const char* kMetricsCsvHeader =
    "strategy,epsilon,k,decoy_ratio,round,model_gen,model_eval,"
    "recall_mean,discovery_mean,idunif_mean,n_queries";

namespace detail {

inline std::string fmt(double v, const char* spec = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace detail

inline std::string metrics_csv_row(const MetricReport& r) {
  std::string out;
  out += r.key.strategy;
  out += ',';
  out += detail::fmt(r.key.epsilon);
  out += ',';
  out += std::to_string(r.key.k);
  out += ',';
  out += detail::fmt(r.key.decoy_ratio);
  out += ',';
  out += std::to_string(r.key.round);
  out += ',';
  out += r.key.model_gen;
  out += ',';
  out += r.key.model_eval;
  out += ',';
  out += detail::fmt(r.recall_mean);
  out += ',';
  out += detail::fmt(r.discovery_mean);
  out += ',';
  out += detail::fmt(r.idunif_mean);
  out += ',';
  out += std::to_string(r.n_queries);
  return out;
}

/// Rows sorted by cell key so re-emission is byte-stable.
inline std::string metrics_csv(std::vector<MetricReport> cells) {
  std::sort(cells.begin(), cells.end(),
            [](const MetricReport& a, const MetricReport& b) {
              return a.key < b.key;
            });
  std::string out = kMetricsCsvHeader;
  out += '\n';
  for (const auto& r : cells) {
    out += metrics_csv_row(r);
    out += '\n';
  }
  return out;
}

// --- SVG line charts -------------------------------------------------------
// Self-contained path emission; the CSV is the contract, charts are a
// convenience.

struct ChartSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // x ascending
};

inline std::string render_line_chart(const std::string& title,
                                     const std::string& x_label,
                                     const std::string& y_label,
                                     const std::vector<ChartSeries>& series) {
  const int w = 640, h = 420;
  const double ml = 60, mr = 150, mt = 40, mb = 50;
  const double pw = w - ml - mr, ph = h - mt - mb;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  // metrics live in [0,1]; pad other quantities by 5%
  if (ymin >= 0 && ymax <= 1) {
    ymin = 0;
    ymax = 1;
  } else {
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
  }

  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };
  auto f2 = [](double v) { return detail::fmt(v, "%.2f"); };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(w) + "\" height=\"" + std::to_string(h) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + f2(w / 2.0) +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">" + title + "</text>\n";

  // axes
  svg += "<line x1=\"" + f2(ml) + "\" y1=\"" + f2(mt) + "\" x2=\"" + f2(ml) +
         "\" y2=\"" + f2(mt + ph) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + f2(ml) + "\" y1=\"" + f2(mt + ph) + "\" x2=\"" +
         f2(ml + pw) + "\" y2=\"" + f2(mt + ph) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    svg += "<text x=\"" + f2(px(fx)) + "\" y=\"" + f2(mt + ph + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + detail::fmt(fx, "%.3g") + "</text>\n";
    svg += "<text x=\"" + f2(ml - 8) + "\" y=\"" + f2(py(fy) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + detail::fmt(fy, "%.3g") + "</text>\n";
    svg += "<line x1=\"" + f2(ml) + "\" y1=\"" + f2(py(fy)) + "\" x2=\"" +
           f2(ml + pw) + "\" y2=\"" + f2(py(fy)) +
           "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
  }
  svg += "<text x=\"" + f2(ml + pw / 2) + "\" y=\"" + f2(h - 10.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">" + x_label + "</text>\n";
  svg += "<text x=\"16\" y=\"" + f2(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 16 " + f2(mt + ph / 2) +
         ")\">" + y_label + "</text>\n";

  int ci = 0;
  double legend_y = mt + 10;
  for (const auto& s : series) {
    const char* color = kColors[ci % 8];
    ++ci;
    if (!s.points.empty()) {
      std::string path = "M";
      for (const auto& [x, y] : s.points)
        path += " " + f2(px(x)) + " " + f2(py(y));
      svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"1.5\"/>\n";
      for (const auto& [x, y] : s.points)
        svg += "<circle cx=\"" + f2(px(x)) + "\" cy=\"" + f2(py(y)) +
               "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
    }
    svg += "<line x1=\"" + f2(ml + pw + 10) + "\" y1=\"" + f2(legend_y) +
           "\" x2=\"" + f2(ml + pw + 30) + "\" y2=\"" + f2(legend_y) +
           "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + f2(ml + pw + 35) + "\" y=\"" + f2(legend_y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label +
           "</text>\n";
    legend_y += 16;
  }
  svg += "</svg>\n";
  return svg;
}

// --- run record --------------------------------------------------------

struct Top1Row {
  double epsilon = 0.0;
  double ratio = 0.0;
  double tau = 0.0;
  double correct_rate = 0.0;
  double no_match_rate = 0.0;
  int n_queries = 0;
};

/// Everything needed to reproduce and re-emit a run: the resolved config,
/// the per-cell metrics, and any scenario-specific tables.
struct RunRecord {
  std::string version;
  std::string scenario;
  std::vector<std::pair<std::string, std::string>> config;  // resolved keys
  std::vector<MetricReport> cells;
  std::vector<EpsilonProfileRow> profile;  // loss-profile
  std::vector<Top1Row> top1;               // top1-oracle
  long long decoys_generated = 0;
  long long constraint_violations = 0;
  long long wall_ms = 0;
};

inline std::string profile_csv(const std::vector<EpsilonProfileRow>& rows) {
  std::string out =
      "epsilon,mean_initial,mean_final,min,q25,median,q75,max,n_jobs\n";
  for (const auto& r : rows) {
    out += detail::fmt(r.epsilon);
    out += ',';
    out += detail::fmt(r.mean_initial);
    out += ',';
    out += detail::fmt(r.mean_final);
    out += ',';
    out += detail::fmt(r.q0);
    out += ',';
    out += detail::fmt(r.q25);
    out += ',';
    out += detail::fmt(r.q50);
    out += ',';
    out += detail::fmt(r.q75);
    out += ',';
    out += detail::fmt(r.q100);
    out += ',';
    out += std::to_string(r.final_losses.size());
    out += '\n';
  }
  return out;
}

inline std::string top1_csv(const std::vector<Top1Row>& rows) {
  std::string out = "epsilon,decoy_ratio,tau,correct_rate,no_match_rate,n_queries\n";
  for (const auto& r : rows) {
    out += detail::fmt(r.epsilon);
    out += ',';
    out += detail::fmt(r.ratio);
    out += ',';
    out += detail::fmt(r.tau);
    out += ',';
    out += detail::fmt(r.correct_rate);
    out += ',';
    out += detail::fmt(r.no_match_rate);
    out += ',';
    out += std::to_string(r.n_queries);
    out += '\n';
  }
  return out;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << content;
  if (!f) throw IoError("write failure: " + path.string());
}

}  // namespace detail

/// Write metrics.csv, scenario extras, charts, and the key=value run record
/// into out_dir. Pure function of the record, so re-emission is
/// byte-identical (the record snapshot itself carries the wall clock and is
/// excluded from that guarantee).
inline void emit_report(const RunRecord& rec,
                        const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  detail::write_text_file(out_dir / "metrics.csv", metrics_csv(rec.cells));
  if (!rec.profile.empty())
    detail::write_text_file(out_dir / "loss_profile.csv",
                            profile_csv(rec.profile));
  if (!rec.top1.empty())
    detail::write_text_file(out_dir / "top1.csv", top1_csv(rec.top1));

  // charts: one file per metric and sweep axis actually present
  struct MetricSel {
    const char* name;
    double MetricReport::* field;
  };
  static const MetricSel kMetrics[] = {
      {"recall", &MetricReport::recall_mean},
      {"discovery", &MetricReport::discovery_mean},
      {"idunif", &MetricReport::idunif_mean},
  };

  std::set<double> eps_axis, ratio_axis;
  std::set<int> ks;
  for (const auto& c : rec.cells) {
    eps_axis.insert(c.key.epsilon);
    ratio_axis.insert(c.key.decoy_ratio);
    ks.insert(c.key.k);
  }
  auto cells_sorted = rec.cells;
  std::sort(cells_sorted.begin(), cells_sorted.end(),
            [](const MetricReport& a, const MetricReport& b) {
              return a.key < b.key;
            });

  if (eps_axis.size() > 1) {
    for (const auto& sel : kMetrics) {
      std::vector<ChartSeries> series;
      for (int k : ks) {
        ChartSeries s;
        s.label = "k=" + std::to_string(k);
        for (const auto& c : cells_sorted)
          if (c.key.k == k) s.points.emplace_back(c.key.epsilon, c.*(sel.field));
        std::sort(s.points.begin(), s.points.end());
        if (!s.points.empty()) series.push_back(std::move(s));
      }
      detail::write_text_file(
          out_dir / (std::string(sel.name) + "_vs_epsilon.svg"),
          render_line_chart(std::string(sel.name) + " vs epsilon", "epsilon",
                            sel.name, series));
    }
  }
  if (ratio_axis.size() > 1) {
    for (const auto& sel : kMetrics) {
      std::vector<ChartSeries> series;
      for (int k : ks) {
        for (const auto& eval : [&cells_sorted] {
               std::set<std::string> models;
               for (const auto& c : cells_sorted) models.insert(c.key.model_eval);
               return models;
             }()) {
          ChartSeries s;
          s.label = "k=" + std::to_string(k) + " " + eval;
          for (const auto& c : cells_sorted)
            if (c.key.k == k && c.key.model_eval == eval)
              s.points.emplace_back(c.key.decoy_ratio, c.*(sel.field));
          std::sort(s.points.begin(), s.points.end());
          if (!s.points.empty()) series.push_back(std::move(s));
        }
      }
      detail::write_text_file(
          out_dir / (std::string(sel.name) + "_vs_ratio.svg"),
          render_line_chart(std::string(sel.name) + " vs decoy ratio",
                            "decoy ratio", sel.name, series));
    }
  }
  if (!rec.profile.empty()) {
    ChartSeries s;
    s.label = "mean final loss";
    for (const auto& r : rec.profile) s.points.emplace_back(r.epsilon, r.mean_final);
    detail::write_text_file(
        out_dir / "loss_vs_epsilon.svg",
        render_line_chart("final attack loss vs epsilon", "epsilon", "loss",
                          {s}));
  }

  std::string rr;
  rr += "version=" + rec.version + "\n";
  rr += "scenario=" + rec.scenario + "\n";
  for (const auto& [k, v] : rec.config) rr += k + "=" + v + "\n";
  rr += "decoys_generated=" + std::to_string(rec.decoys_generated) + "\n";
  rr += "constraint_violations=" + std::to_string(rec.constraint_violations) +
        "\n";
  rr += "cells=" + std::to_string(rec.cells.size()) + "\n";
  rr += "wall_ms=" + std::to_string(rec.wall_ms) + "\n";
  detail::write_text_file(out_dir / "runrecord.txt", rr);
}

}  // namespace foggy
