// Copyright 2026 The pzne Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pzne/error.hpp"
#include "pzne/harness.hpp"
#include "pzne/mitigation.hpp"

namespace pzne {

struct PlotSeries {
  std::string name;
  std::vector<double> x, y, err;  // err may be empty
};

struct LinePlot {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<PlotSeries> series;
  std::optional<double> reference;  // horizontal dashed line
};

namespace detail {

inline std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// 1-2-5 tick step covering [lo, hi] with about n ticks
inline double nice_step(double lo, double hi, int n) {
  const double raw = (hi - lo) / std::max(1, n);
  if (!(raw > 0.0)) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace detail

inline std::string render_svg(const LinePlot& plot) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  const double w = 720, h = 440, ml = 70, mr = 190, mt = 40, mb = 55;
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || !std::isfinite(s.x[i])) continue;
      const double e = (i < s.err.size() && std::isfinite(s.err[i])) ? s.err[i] : 0.0;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i] - e);
      yhi = std::max(yhi, s.y[i] + e);
    }
  }
  if (plot.reference) {
    ylo = std::min(ylo, *plot.reference);
    yhi = std::max(yhi, *plot.reference);
  }
  if (!std::isfinite(xlo)) {
    xlo = 0;
    xhi = 1;
    ylo = 0;
    yhi = 1;
  }
  if (xhi == xlo) xhi = xlo + 1;
  if (yhi == ylo) {
    ylo -= 0.5;
    yhi += 0.5;
  }
  const double pad = 0.05 * (yhi - ylo);
  ylo -= pad;
  yhi += pad;
  const double pw = w - ml - mr, ph = h - mt - mb;
  auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * pw; };
  auto py = [&](double y) { return mt + (yhi - y) / (yhi - ylo) * ph; };
  auto f = [](double v) { return detail::fmt_short(v); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << detail::xml_escape(plot.title) << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double xs = detail::nice_step(xlo, xhi, 8), ys = detail::nice_step(ylo, yhi, 6);
  for (double t = std::ceil(xlo / xs) * xs; t <= xhi + 1e-9 * xs; t += xs) {
    o << "<line x1=\"" << f(px(t)) << "\" y1=\"" << mt + ph << "\" x2=\"" << f(px(t)) << "\" y2=\"" << mt + ph + 5
      << "\" stroke=\"black\"/><text x=\"" << f(px(t)) << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">"
      << f(std::abs(t) < 1e-12 ? 0.0 : t) << "</text>\n";
  }
  for (double t = std::ceil(ylo / ys) * ys; t <= yhi + 1e-9 * ys; t += ys) {
    o << "<line x1=\"" << ml - 5 << "\" y1=\"" << f(py(t)) << "\" x2=\"" << ml + pw << "\" y2=\"" << f(py(t))
      << "\" stroke=\"#dddddd\"/><text x=\"" << ml - 8 << "\" y=\"" << f(py(t) + 4) << "\" text-anchor=\"end\">"
      << f(std::abs(t) < 1e-12 ? 0.0 : t) << "</text>\n";
  }
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">"
    << detail::xml_escape(plot.xlabel) << "</text>\n";
  o << "<text transform=\"translate(18," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::xml_escape(plot.ylabel) << "</text>\n";
  if (plot.reference) {
    o << "<line x1=\"" << ml << "\" y1=\"" << f(py(*plot.reference)) << "\" x2=\"" << ml + pw << "\" y2=\""
      << f(py(*plot.reference)) << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";
  }
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* col = palette[k % 8];
    std::string path;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      path += (path.empty() ? "M" : " L") + f(px(s.x[i])) + "," + f(py(s.y[i]));
    }
    if (!path.empty()) o << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      if (i < s.err.size() && std::isfinite(s.err[i]) && s.err[i] > 0) {
        o << "<line x1=\"" << f(px(s.x[i])) << "\" y1=\"" << f(py(s.y[i] - s.err[i])) << "\" x2=\"" << f(px(s.x[i]))
          << "\" y2=\"" << f(py(s.y[i] + s.err[i])) << "\" stroke=\"" << col << "\"/>\n";
      }
      o << "<circle cx=\"" << f(px(s.x[i])) << "\" cy=\"" << f(py(s.y[i])) << "\" r=\"2.5\" fill=\"" << col << "\"/>\n";
    }
    const double ly = mt + 10 + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << ml + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 35 << "\" y2=\"" << ly
      << "\" stroke=\"" << col << "\" stroke-width=\"2\"/><text x=\"" << ml + pw + 40 << "\" y=\"" << ly + 4 << "\">"
      << detail::xml_escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---- CSV tables ----

inline const char* kCellsHeader = "channel,layer,fold,rep,seed,config_digest,observable,observable_se,purity,purity_se";
inline const char* kRecordsHeader =
    "channel,layer,rep,seed,config_digest,method,pauli,estimate,spread,fit_params,residual,failed,flags,digest";
inline const char* kFoldsHeader =
    "channel,layer,fold,observable_mean,observable_std,purity_mean,purity_std,exact_observable,exact_purity,config_digest";
inline const char* kSummaryHeader = "channel,layer,method,ideal,mean,std,bias,ok,failed,config_digest";
inline const char* kEnsembleHeader = "layer,method,delta1,delta2,channels_used,config_digest";
inline const char* kBoundsHeader =
    "q_lambda,channels,median_sigma,max_sigma,sigma_bound,fraction_under_sigma_bound,eps,bound_mean,"
    "bound_at_median,empirical_mean,empirical_q90,tolerant_eps,pass";

inline void write_cells_csv(std::ostream& os, const ResultsTable& t) {
  os << kCellsHeader;
  const auto n = num_paulis(t.config.num_qubits);
  for (std::uint64_t i = 0; i < n; ++i) os << ",E_" << PauliString(t.config.num_qubits, i).str();
  os << '\n';
  for (const auto& c : t.cells) {
    os << c.channel << ',' << c.layer << ',' << c.fold << ',' << c.rep << ',' << c.seed << ',' << t.config_digest << ','
       << format_double(c.observable) << ',' << format_double(c.observable_se) << ',' << format_double(c.purity) << ','
       << format_double(c.purity_se);
    for (double e : c.expectations) os << ',' << format_double(e);
    os << '\n';
  }
}

inline void write_records_csv(std::ostream& os, const ResultsTable& t) {
  os << kRecordsHeader << '\n';
  for (const auto& r : t.records) {
    os << r.channel << ',' << r.layer << ',' << r.rep << ',' << r.seed << ',' << t.config_digest << ',';
    write_record_csv(os, r.record);
  }
}

inline void write_folds_csv(std::ostream& os, const ResultsTable& t) {
  os << kFoldsHeader << '\n';
  for (const auto& a : t.folds) {
    os << a.channel << ',' << a.layer << ',' << a.fold << ',' << format_double(a.observable_mean) << ','
       << format_double(a.observable_std) << ',' << format_double(a.purity_mean) << ',' << format_double(a.purity_std)
       << ',' << format_double(a.exact_observable) << ',' << format_double(a.exact_purity) << ',' << t.config_digest
       << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, const ResultsTable& t) {
  os << kSummaryHeader << '\n';
  for (const auto& a : t.methods) {
    os << a.channel << ',' << a.layer << ',' << to_string(a.method) << ',' << format_double(a.ideal) << ','
       << format_double(a.mean) << ',' << format_double(a.stddev) << ',' << format_double(a.bias()) << ',' << a.ok
       << ',' << a.failed << ',' << t.config_digest << '\n';
  }
}

inline void write_ensemble_csv(std::ostream& os, const ResultsTable& t) {
  os << kEnsembleHeader << '\n';
  for (const auto& e : t.ensemble) {
    os << e.layer << ',' << to_string(e.method) << ',' << format_double(e.delta1) << ',' << format_double(e.delta2)
       << ',' << e.channels_used << ',' << t.config_digest << '\n';
  }
}

inline void write_bounds_csv(std::ostream& os, const std::vector<BoundRow>& rows) {
  os << kBoundsHeader << '\n';
  for (const auto& r : rows) {
    os << format_double(r.q_lambda) << ',' << r.channels << ',' << format_double(r.median_sigma) << ','
       << format_double(r.max_sigma) << ',' << format_double(r.sigma_bound) << ','
       << format_double(r.fraction_under_sigma_bound) << ',' << format_double(r.eps) << ','
       << format_double(r.bound_mean) << ',' << format_double(r.bound_at_median) << ','
       << format_double(r.empirical_mean) << ',' << format_double(r.empirical_q90) << ','
       << format_double(r.tolerant_eps) << ',' << (r.pass ? 1 : 0) << '\n';
  }
}

inline nlohmann::json channels_json(const ResultsTable& t) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : t.channels) {
    nlohmann::json j;
    j["channel"] = c.channel;
    j["seed"] = c.seed;
    j["ok"] = c.ok;
    if (!c.ok) j["error"] = c.error;
    if (c.pair) {
      j["forward"] = c.pair->forward;
      j["backward"] = c.pair->backward;
      j["lambda"] = c.pair->lambda;
      j["omega"] = c.pair->omega;
      j["sigma"] = c.sigma;
    }
    arr.push_back(j);
  }
  return arr;
}

// ---- plots from the aggregate tables ----

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw InvalidArgument("CSV column '" + name + "' missing");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("empty CSV");
  t.header = split_csv_line(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto r = split_csv_line(line);
    if (r.size() != t.header.size()) throw InvalidArgument("CSV row has " + std::to_string(r.size()) + " fields, expected " +
                                                           std::to_string(t.header.size()));
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline CsvTable read_csv_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw InvalidArgument("cannot read '" + p.string() + "'");
  return read_csv(f);
}

inline double parse_number(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw InvalidArgument("bad number '" + s + "' in CSV");
  }
}

/// Panels from summary/folds/ensemble CSV tables (channel 0 for the per-channel panels).
inline std::map<std::string, LinePlot> plots_from_tables(const std::string& title, const CsvTable& summary,
                                                         const CsvTable& folds, const CsvTable* ensemble) {
  std::map<std::string, LinePlot> out;
  {
    LinePlot p{title + ": mitigated estimates", "layers", "estimate (mean +- std over repetitions)", {}, std::nullopt};
    const auto cc = summary.column("channel"), cl = summary.column("layer"), cm = summary.column("method"),
               cmean = summary.column("mean"), cs = summary.column("std"), ci = summary.column("ideal");
    std::vector<std::string> order;
    std::map<std::string, PlotSeries> by;
    for (const auto& r : summary.rows) {
      if (r[cc] != "0") continue;
      if (!by.count(r[cm])) {
        order.push_back(r[cm]);
        by[r[cm]].name = r[cm];
      }
      auto& s = by[r[cm]];
      s.x.push_back(parse_number(r[cl]));
      s.y.push_back(parse_number(r[cmean]));
      s.err.push_back(parse_number(r[cs]));
      p.reference = parse_number(r[ci]);
    }
    for (const auto& m : order) p.series.push_back(by[m]);
    out["mitigated"] = std::move(p);
  }
  auto fold_plot = [&](const std::string& col, const std::string& err, const std::string& label, const std::string& t) {
    LinePlot p{title + ": " + t, "layers", label, {}, std::nullopt};
    const auto cc = folds.column("channel"), cl = folds.column("layer"), cf = folds.column("fold"),
               cv = folds.column(col), ce = folds.column(err);
    std::map<int, PlotSeries> by;
    for (const auto& r : folds.rows) {
      if (r[cc] != "0") continue;
      const int f = static_cast<int>(parse_number(r[cf]));
      auto& s = by[f];
      s.name = std::to_string(f) + "-fold (" + std::to_string(2 * f - 1) + " passes)";
      s.x.push_back(parse_number(r[cl]));
      s.y.push_back(parse_number(r[cv]));
      s.err.push_back(parse_number(r[ce]));
    }
    for (auto& [f, s] : by) p.series.push_back(std::move(s));
    return p;
  };
  out["raw"] = fold_plot("observable_mean", "observable_std", "raw expectation", "raw expectation");
  out["purity"] = fold_plot("purity_mean", "purity_std", "purity", "purity of the noisy state");
  if (ensemble && !ensemble->rows.empty()) {
    const auto cl = ensemble->column("layer"), cm = ensemble->column("method"), c1 = ensemble->column("delta1"),
               c2 = ensemble->column("delta2");
    LinePlot p1{title + ": ensemble bias", "layers", "Delta_1 (rms bias over channels)", {}, std::nullopt};
    LinePlot p2{title + ": ensemble spread", "layers", "Delta_2 (rms std over channels)", {}, std::nullopt};
    std::vector<std::string> order;
    std::map<std::string, std::pair<PlotSeries, PlotSeries>> by;
    for (const auto& r : ensemble->rows) {
      if (!by.count(r[cm])) {
        order.push_back(r[cm]);
        by[r[cm]].first.name = r[cm];
        by[r[cm]].second.name = r[cm];
      }
      auto& [a, b] = by[r[cm]];
      a.x.push_back(parse_number(r[cl]));
      a.y.push_back(parse_number(r[c1]));
      b.x.push_back(parse_number(r[cl]));
      b.y.push_back(parse_number(r[c2]));
    }
    for (const auto& m : order) {
      p1.series.push_back(by[m].first);
      p2.series.push_back(by[m].second);
    }
    out["ensemble_delta1"] = std::move(p1);
    out["ensemble_delta2"] = std::move(p2);
  }
  return out;
}

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write '" + p.string() + "'");
  f << content;
  if (!f) throw InvalidArgument("write failed for '" + p.string() + "'");
}

template <class Fn>
std::string to_text(Fn fn) {
  std::ostringstream o;
  fn(o);
  return o.str();
}

}  // namespace detail

/// Renders SVG panels next to the CSV tables in `dir` (prefix `name`).
inline std::vector<std::filesystem::path> render_report(const std::filesystem::path& dir, const std::string& name,
                                                        const std::string& title) {
  const CsvTable summary = read_csv_file(dir / (name + "_summary.csv"));
  const CsvTable folds = read_csv_file(dir / (name + "_folds.csv"));
  std::optional<CsvTable> ens;
  const auto ep = dir / (name + "_ensemble.csv");
  if (std::filesystem::exists(ep)) ens = read_csv_file(ep);
  std::vector<std::filesystem::path> written;
  bool multi = false;
  {
    const auto cc = summary.column("channel");
    for (const auto& r : summary.rows) multi = multi || r[cc] != "0";
  }
  for (const auto& [key, plot] : plots_from_tables(title, summary, folds, ens ? &*ens : nullptr)) {
    if (key.rfind("ensemble", 0) == 0 && !multi) continue;
    const auto p = dir / (name + "_" + key + ".svg");
    detail::write_file(p, render_svg(plot));
    written.push_back(p);
  }
  return written;
}

/// CSV tables, channel JSON, config snapshot and SVG panels. Returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const ResultsTable& t, const std::filesystem::path& dir,
                                                      bool svg = true) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidArgument("cannot create '" + dir.string() + "': " + ec.message());
  const std::string name = t.config.name;
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& suffix, const std::string& content) {
    const auto p = dir / (name + suffix);
    detail::write_file(p, content);
    written.push_back(p);
  };
  put("_cells.csv", detail::to_text([&](std::ostream& o) { write_cells_csv(o, t); }));
  put("_records.csv", detail::to_text([&](std::ostream& o) { write_records_csv(o, t); }));
  put("_folds.csv", detail::to_text([&](std::ostream& o) { write_folds_csv(o, t); }));
  put("_summary.csv", detail::to_text([&](std::ostream& o) { write_summary_csv(o, t); }));
  put("_ensemble.csv", detail::to_text([&](std::ostream& o) { write_ensemble_csv(o, t); }));
  put("_channels.json", channels_json(t).dump(2) + "\n");
  nlohmann::json snap = t.config.to_json();
  snap["digest"] = t.config_digest;
  nlohmann::json log = t.log;
  snap["log"] = log;
  put("_config.json", snap.dump(2) + "\n");
  if (svg) {
    for (auto& p : render_report(dir, name, name)) written.push_back(p);
  }
  return written;
}

}  // namespace pzne
