#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apc/bench.hpp"

namespace apc::bench {

std::vector<GroupStat> group_metric(const std::vector<ArmResult>& arms, const std::string& metric) {
  std::vector<GroupStat> out;
  std::vector<std::vector<double>> values;
  for (const ArmResult& a : arms) {
    if (!a.ok() || !a.has_metric(metric)) continue;
    const std::string g = a.group();
    auto it = std::find_if(out.begin(), out.end(), [&](const GroupStat& s) { return s.group == g; });
    if (it == out.end()) {
      out.push_back({g, a.labels, 0.0, 0.0, 0});
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<std::size_t>(it - out.begin())].push_back(a.metric(metric));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto [mean, ci] = mean_and_ci(values[i]);
    out[i].mean = mean;
    out[i].ci_half_width = ci;
    out[i].count = values[i].size();
  }
  return out;
}

std::vector<BinnedCurve> bin_curves(const std::vector<ArmResult>& arms) {
  std::vector<BinnedCurve> out;
  for (const ArmResult& a : arms) {
    if (!a.ok() || a.curve.size() < kCurveBins) continue;
    const std::string g = a.group();
    auto it = std::find_if(out.begin(), out.end(), [&](const BinnedCurve& c) { return c.group == g; });
    if (it == out.end()) {
      out.push_back({g, {}, {}});
      it = out.end() - 1;
    }
    std::vector<std::pair<double, double>> points;
    for (const CurveRow& r : a.curve) points.emplace_back(r.x, r.mean);
    it->per_seed.push_back(bin_curve(std::move(points)));
  }
  for (BinnedCurve& c : out) {
    for (std::size_t k = 0; k < kCurveBins; ++k) {
      std::vector<double> means, lows, highs;
      for (const auto& seed : c.per_seed) {
        means.push_back(seed[k].mean);
        lows.push_back(seed[k].x_low);
        highs.push_back(seed[k].x_high);
      }
      CurveBin b;
      b.index = k;
      b.x_low = *std::min_element(lows.begin(), lows.end());
      b.x_high = *std::max_element(highs.begin(), highs.end());
      const auto [mean, ci] = mean_and_ci(means);
      b.mean = mean;
      b.ci_half_width = ci;
      b.count = means.size();
      c.averaged.push_back(b);
    }
  }
  return out;
}

namespace {

using Row = std::vector<std::string>;

std::vector<Row> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("report: missing " + path.string());
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool quoted = false, any = false;
  char ch;
  while (in.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("report: empty file " + path.string());
  return rows;
}

std::size_t column(const Row& header, const std::string& name, const std::filesystem::path& file) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("report: " + file.string() + " lacks column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

struct Artifact {
  std::string kind;
  std::string name;
  std::map<std::string, double> reference;
  std::vector<ArmResult> arms;
};

Artifact load_artifact(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("report: not a directory: " + dir.string());
  const auto manifest_path = dir / "manifest.json";
  std::ifstream mf(manifest_path);
  if (!mf) throw std::runtime_error("report: " + dir.string() + " has no manifest.json (not an artifact directory)");
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("report: unreadable manifest.json: ") + e.what());
  }
  Artifact art;
  art.kind = manifest.at("kind").get<std::string>();
  art.name = manifest.at("name").get<std::string>();
  for (const auto& [tier, v] : manifest.at("expert_test_mean").items()) art.reference[tier] = std::stod(v.get<std::string>());
  const auto label_cols = manifest.at("label_columns").get<std::vector<std::string>>();
  const auto metric_cols = manifest.at("metric_columns").get<std::vector<std::string>>();
  const auto& listed = manifest.at("arms");
  if (listed.empty()) throw std::runtime_error("report: artifact lists no arms");

  const auto results_path = dir / "results.csv";
  const auto results = read_csv(results_path);
  const Row& h = results.front();
  const std::size_t c_arm = column(h, "arm", results_path), c_seed = column(h, "seed", results_path),
                    c_idx = column(h, "seed_index", results_path), c_mode = column(h, "eval_mode", results_path),
                    c_status = column(h, "status", results_path);
  if (results.size() - 1 != listed.size()) {
    throw std::runtime_error("report: results.csv has " + std::to_string(results.size() - 1) +
                             " arms but the manifest lists " + std::to_string(listed.size()) + " (incomplete artifact)");
  }
  for (std::size_t r = 1; r < results.size(); ++r) {
    const Row& row = results[r];
    if (row.size() != h.size()) throw std::runtime_error("report: malformed row " + std::to_string(r) + " in results.csv");
    ArmResult a;
    a.id = row[c_arm];
    if (a.id != listed[r - 1].at("id").get<std::string>()) throw std::runtime_error("report: arm order differs from manifest");
    a.seed = std::stoull(row[c_seed]);
    a.seed_index = std::stoul(row[c_idx]);
    a.eval_mode = row[c_mode];
    if (row[c_status] != "ok") a.error = listed[r - 1].at("error").get<std::string>() + " ";
    for (const auto& k : label_cols) {
      const std::string& v = row[column(h, k, results_path)];
      if (!v.empty()) a.labels.push_back({k, v});
    }
    for (const auto& k : metric_cols) {
      const std::string& v = row[column(h, k, results_path)];
      if (!v.empty()) a.metrics.push_back({k, std::stod(v)});
    }
    art.arms.push_back(std::move(a));
  }

  const auto curves_path = dir / "curves.csv";
  const auto curves = read_csv(curves_path);
  const Row& ch = curves.front();
  const std::size_t k_arm = column(ch, "arm_tag", curves_path), k_kind = column(ch, "x_kind", curves_path),
                    k_x = column(ch, "x", curves_path), k_mean = column(ch, "eval_mean", curves_path),
                    k_hi = column(ch, "eval_ci_high", curves_path);
  std::map<std::string, ArmResult*> by_id;
  for (ArmResult& a : art.arms) by_id[a.id] = &a;
  for (std::size_t r = 1; r < curves.size(); ++r) {
    const Row& row = curves[r];
    const auto it = by_id.find(row.at(k_arm));
    if (it == by_id.end()) throw std::runtime_error("report: curves.csv names unknown arm " + row.at(k_arm));
    const double mean = std::stod(row.at(k_mean));
    it->second->curve.push_back({std::stod(row.at(k_x)), mean, std::stod(row.at(k_hi)) - mean});
    it->second->curve_x = row.at(k_kind);
  }
  if (!std::filesystem::exists(dir / "returns.csv")) throw std::runtime_error("report: missing returns.csv");
  return art;
}

// ---- SVG ----

struct Series {
  std::string name;
  std::vector<double> x, y, ci;
};

struct Plot {
  std::string title, xlabel, ylabel;
  bool log_x = false;
  bool band = false;  // CI as a shaded band instead of error bars
  std::vector<std::string> categories;  // categorical x ticks (x = index)
  std::vector<Series> series;
  std::optional<double> reference;
  std::string reference_label = "expert";
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '<') out += "&lt;";
    else if (ch == '>') out += "&gt;";
    else if (ch == '&') out += "&amp;";
    else out += ch;
  }
  return out;
}

std::string render_svg(const Plot& p) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const double W = 720, H = 440, L = 70, R = 190, T = 40, B = 55;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  auto tx = [&](double x) { return p.log_x ? std::log10(x) : x; };
  for (const Series& s : p.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
      ymin = std::min(ymin, s.y[i] - s.ci[i]);
      ymax = std::max(ymax, s.y[i] + s.ci[i]);
    }
  }
  if (p.reference) {
    ymin = std::min(ymin, *p.reference);
    ymax = std::max(ymax, *p.reference);
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
  if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  auto px = [&](double x) { return L + (tx(x) - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(p.title)
    << "</text>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double y = ymin + (ymax - ymin) * k / 5.0;
    s << "<line x1=\"" << L - 4 << "\" y1=\"" << py(y) << "\" x2=\"" << L << "\" y2=\"" << py(y)
      << "\" stroke=\"black\"/><text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << fmt(y)
      << "</text>\n";
  }
  std::vector<std::pair<double, std::string>> xticks;
  if (!p.categories.empty()) {
    for (std::size_t i = 0; i < p.categories.size(); ++i) xticks.push_back({static_cast<double>(i), p.categories[i]});
  } else if (p.log_x) {
    for (int e = static_cast<int>(std::floor(xmin)); e <= static_cast<int>(std::ceil(xmax)); ++e) {
      if (e >= xmin - 1e-9 && e <= xmax + 1e-9) xticks.push_back({std::pow(10.0, e), fmt(std::pow(10.0, e))});
    }
  } else {
    for (int k = 0; k <= 5; ++k) {
      const double x = xmin + (xmax - xmin) * k / 5.0;
      xticks.push_back({x, fmt(x)});
    }
  }
  for (const auto& [x, label] : xticks) {
    s << "<line x1=\"" << px(x) << "\" y1=\"" << H - B << "\" x2=\"" << px(x) << "\" y2=\"" << H - B + 4
      << "\" stroke=\"black\"/><text x=\"" << px(x) << "\" y=\"" << H - B + 17 << "\" text-anchor=\"middle\">"
      << xml_escape(label) << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xml_escape(p.xlabel)
    << "</text>\n";
  s << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << xml_escape(p.ylabel) << "</text>\n";
  if (p.reference) {
    s << "<line x1=\"" << L << "\" y1=\"" << py(*p.reference) << "\" x2=\"" << W - R << "\" y2=\"" << py(*p.reference)
      << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  }
  for (std::size_t si = 0; si < p.series.size(); ++si) {
    const Series& ser = p.series[si];
    const char* color = palette[si % 10];
    if (p.band && !ser.x.empty()) {
      std::string poly;
      for (std::size_t i = 0; i < ser.x.size(); ++i) poly += fmt(px(ser.x[i])) + "," + fmt(py(ser.y[i] + ser.ci[i])) + " ";
      for (std::size_t i = ser.x.size(); i-- > 0;) poly += fmt(px(ser.x[i])) + "," + fmt(py(ser.y[i] - ser.ci[i])) + " ";
      s << "<polygon points=\"" << poly << "\" fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
    }
    std::string line;
    for (std::size_t i = 0; i < ser.x.size(); ++i) line += fmt(px(ser.x[i])) + "," + fmt(py(ser.y[i])) + " ";
    s << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      s << "<circle cx=\"" << px(ser.x[i]) << "\" cy=\"" << py(ser.y[i]) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      if (!p.band) {
        s << "<line x1=\"" << px(ser.x[i]) << "\" y1=\"" << py(ser.y[i] - ser.ci[i]) << "\" x2=\"" << px(ser.x[i])
          << "\" y2=\"" << py(ser.y[i] + ser.ci[i]) << "\" stroke=\"" << color << "\"/>\n";
      }
    }
    const double ly = T + 16 * static_cast<double>(si);
    s << "<rect x=\"" << W - R + 12 << "\" y=\"" << ly << "\" width=\"12\" height=\"10\" fill=\"" << color
      << "\"/><text x=\"" << W - R + 30 << "\" y=\"" << ly + 9 << "\">" << xml_escape(ser.name) << "</text>\n";
  }
  if (p.reference) {
    const double ly = T + 16 * static_cast<double>(p.series.size());
    s << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly + 5 << "\" x2=\"" << W - R + 24 << "\" y2=\"" << ly + 5
      << "\" stroke=\"black\" stroke-dasharray=\"3,2\"/><text x=\"" << W - R + 30 << "\" y=\"" << ly + 9 << "\">"
      << xml_escape(p.reference_label) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

// ---- tables and plots ----

struct Output {
  std::vector<std::pair<std::string, std::string>> files;  // relative name, content
  void add(std::string name, std::string content) { files.push_back({std::move(name), std::move(content)}); }
};

std::string labels_except(const Labels& labels, const std::vector<std::string>& skip) {
  std::string out;
  for (const auto& [k, v] : labels) {
    if (std::find(skip.begin(), skip.end(), k) != skip.end()) continue;
    out += (out.empty() ? "" : ", ") + k + "=" + v;
  }
  return out;
}

std::string get(const Labels& labels, const std::string& key) {
  for (const auto& [k, v] : labels) {
    if (k == key) return v;
  }
  return "";
}

std::string file_slug(const std::string& s) {
  std::string out;
  for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' ? ch : '_';
  return out.empty() ? "all" : out;
}

/// Scalar metric against one label, one panel per combination of `panels`
/// labels and one series per remaining label combination.
void scalar_plots(const std::vector<ArmResult>& arms, const std::string& metric, const std::string& xkey,
                  const std::vector<std::string>& panels, bool log_x, bool categorical, std::optional<double> reference,
                  const std::string& ylabel, const std::string& prefix, Output& out) {
  const auto stats = group_metric(arms, metric);
  if (stats.empty()) return;
  std::vector<std::string> panel_names, categories;
  for (const GroupStat& g : stats) {
    std::string panel;
    for (const auto& k : panels) panel += (panel.empty() ? "" : ", ") + k + "=" + get(g.labels, k);
    if (std::find(panel_names.begin(), panel_names.end(), panel) == panel_names.end()) panel_names.push_back(panel);
    const std::string x = get(g.labels, xkey);
    if (std::find(categories.begin(), categories.end(), x) == categories.end()) categories.push_back(x);
  }
  std::vector<std::string> skip = panels;
  skip.push_back(xkey);
  for (const std::string& panel : panel_names) {
    Plot plot;
    plot.title = metric + (panel.empty() ? "" : " (" + panel + ")");
    plot.xlabel = xkey;
    plot.ylabel = ylabel;
    plot.log_x = log_x;
    plot.reference = reference;
    if (categorical) plot.categories = categories;
    for (const GroupStat& g : stats) {
      std::string gp;
      for (const auto& k : panels) gp += (gp.empty() ? "" : ", ") + k + "=" + get(g.labels, k);
      if (gp != panel) continue;
      const std::string name = labels_except(g.labels, skip);
      auto it = std::find_if(plot.series.begin(), plot.series.end(), [&](const Series& s) { return s.name == name; });
      if (it == plot.series.end()) {
        plot.series.push_back({name, {}, {}, {}});
        it = plot.series.end() - 1;
      }
      const std::string xs = get(g.labels, xkey);
      const double x = categorical ? static_cast<double>(std::find(categories.begin(), categories.end(), xs) -
                                                         categories.begin())
                                   : std::stod(xs);
      it->x.push_back(x);
      it->y.push_back(g.mean);
      it->ci.push_back(g.ci_half_width);
    }
    for (Series& s : plot.series) {
      std::vector<std::size_t> order(s.x.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.x[a] < s.x[b]; });
      Series sorted{s.name, {}, {}, {}};
      for (auto i : order) {
        sorted.x.push_back(s.x[i]);
        sorted.y.push_back(s.y[i]);
        sorted.ci.push_back(s.ci[i]);
      }
      s = sorted;
    }
    out.add(prefix + (panel.empty() ? "" : "_" + file_slug(panel)) + ".svg", render_svg(plot));
  }
}

void curve_plots(const std::vector<ArmResult>& arms, const std::vector<std::string>& panels,
                 const std::map<std::string, double>& reference, const std::string& prefix, Output& out) {
  const auto binned = bin_curves(arms);
  std::string table = "group,bin,x_low,x_high,mean,ci_half_width,seeds\n";
  std::string per_seed = "group,seed,bin,x_low,x_high,mean,ci_half_width,count\n";
  for (const BinnedCurve& c : binned) {
    for (const CurveBin& b : c.averaged) {
      table += c.group + "," + std::to_string(b.index) + "," + format_number(b.x_low) + "," + format_number(b.x_high) +
               "," + format_number(b.mean) + "," + format_number(b.ci_half_width) + "," + std::to_string(b.count) + "\n";
    }
    for (std::size_t s = 0; s < c.per_seed.size(); ++s) {
      for (const CurveBin& b : c.per_seed[s]) {
        per_seed += c.group + "," + std::to_string(s) + "," + std::to_string(b.index) + "," + format_number(b.x_low) +
                    "," + format_number(b.x_high) + "," + format_number(b.mean) + "," +
                    format_number(b.ci_half_width) + "," + std::to_string(b.count) + "\n";
      }
    }
  }
  out.add("curves_binned.csv", table);
  out.add("curves_binned_per_seed.csv", per_seed);

  std::map<std::string, Labels> group_labels;
  for (const ArmResult& a : arms) group_labels[a.group()] = a.labels;
  std::vector<std::string> panel_names;
  for (const BinnedCurve& c : binned) {
    std::string panel;
    for (const auto& k : panels) panel += (panel.empty() ? "" : ", ") + k + "=" + get(group_labels[c.group], k);
    if (std::find(panel_names.begin(), panel_names.end(), panel) == panel_names.end()) panel_names.push_back(panel);
  }
  std::string x_kind = "env_step";
  for (const ArmResult& a : arms) {
    if (!a.curve.empty()) x_kind = a.curve_x;
  }
  for (const std::string& panel : panel_names) {
    Plot plot;
    plot.title = "learning curves" + (panel.empty() ? "" : " (" + panel + ")");
    plot.xlabel = x_kind + " (bin centre)";
    plot.ylabel = "mean return";
    plot.band = true;
    const std::string tier = get(group_labels[binned.front().group], "tier");
    for (const BinnedCurve& c : binned) {
      std::string gp;
      for (const auto& k : panels) gp += (gp.empty() ? "" : ", ") + k + "=" + get(group_labels[c.group], k);
      if (gp != panel) continue;
      Series s{labels_except(group_labels[c.group], panels), {}, {}, {}};
      for (const CurveBin& b : c.averaged) {
        s.x.push_back(0.5 * (b.x_low + b.x_high));
        s.y.push_back(b.mean);
        s.ci.push_back(b.ci_half_width);
      }
      plot.series.push_back(std::move(s));
      const std::string t = get(group_labels[c.group], "tier");
      if (reference.count(t)) plot.reference = reference.at(t);
    }
    if (!plot.reference && reference.size() == 1) plot.reference = reference.begin()->second;
    (void)tier;
    out.add(prefix + (panel.empty() ? "" : "_" + file_slug(panel)) + ".svg", render_svg(plot));
  }
}

std::string summary_csv(const std::vector<ArmResult>& arms) {
  std::vector<std::string> label_keys, metric_keys;
  for (const ArmResult& a : arms) {
    for (const auto& kv : a.labels)
      if (std::find(label_keys.begin(), label_keys.end(), kv.first) == label_keys.end()) label_keys.push_back(kv.first);
    for (const auto& kv : a.metrics)
      if (std::find(metric_keys.begin(), metric_keys.end(), kv.first) == metric_keys.end()) metric_keys.push_back(kv.first);
  }
  std::string s;
  for (const auto& k : label_keys) s += k + ",";
  s += "metric,mean,ci_half_width,seeds\n";
  for (const auto& m : metric_keys) {
    for (const GroupStat& g : group_metric(arms, m)) {
      for (const auto& k : label_keys) s += get(g.labels, k) + ",";
      s += m + "," + format_number(g.mean) + "," + format_number(g.ci_half_width) + "," + std::to_string(g.count) + "\n";
    }
  }
  return s;
}

/// Noise-grid arms carry one metric per student noise level; expand them into
/// one pseudo-arm per level so the generic scalar plot applies.
std::vector<ArmResult> expand_noise(const std::vector<ArmResult>& arms) {
  const std::string prefix = "normalized_noise_";
  std::vector<ArmResult> out;
  for (const ArmResult& a : arms) {
    for (const auto& [k, v] : a.metrics) {
      if (k.rfind(prefix, 0) != 0) continue;
      ArmResult e = a;
      e.labels.push_back({"student_noise", k.substr(prefix.size())});
      e.metrics = {{"normalized", v}};
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace

void emit_report(const std::filesystem::path& dir) {
  const Artifact art = load_artifact(dir);
  std::size_t ok = 0;
  for (const ArmResult& a : art.arms) ok += a.ok();
  if (ok == 0) throw std::runtime_error("report: no arm in " + dir.string() + " succeeded");

  Output out;
  out.add("summary.csv", summary_csv(art.arms));
  const std::string y = "expert-normalized score";
  const std::optional<double> one = 1.0;
  const ExperimentKind kind = parse_kind(art.kind);
  switch (kind) {
    case ExperimentKind::OfflineSweep:
      scalar_plots(art.arms, "normalized", "n", {"sigma_e"}, true, false, one, y, "data_efficiency", out);
      break;
    case ExperimentKind::NoiseGrid:
      scalar_plots(expand_noise(art.arms), "normalized", "student_noise", {"sigma_e", "n"}, false, false, one, y,
                   "noise_sensitivity", out);
      break;
    case ExperimentKind::SigmaSAblation:
      scalar_plots(art.arms, "best_validation", "sigma_s", {"n"}, true, false, std::nullopt, "validation mean return",
                   "sigma_s_ablation", out);
      scalar_plots(art.arms, "normalized", "sigma_s", {"n"}, true, false, one, y, "sigma_s_ablation_test", out);
      break;
    case ExperimentKind::Compression:
      scalar_plots(art.arms, "normalized", "torso", {"n"}, false, true, one, y, "compression", out);
      break;
    case ExperimentKind::Privileged:
      scalar_plots(art.arms, "normalized", "n", {"variant"}, true, false, one, y, "privileged", out);
      break;
    case ExperimentKind::Dagger:
      curve_plots(art.arms, {"beta"}, art.reference, "dagger_curves", out);
      scalar_plots(art.arms, "steps_to_threshold", "method", {"beta"}, false, true, std::nullopt, "env steps",
                   "dagger_steps_to_threshold", out);
      break;
    case ExperimentKind::Kickstart:
      curve_plots(art.arms, {"tier"}, art.reference, "kickstart_curves", out);
      scalar_plots(art.arms, "final_normalized", "lambda", {"tier"}, false, true, one, y, "kickstart_lambda", out);
      break;
  }

  const auto report_dir = dir / "report";
  std::filesystem::create_directories(report_dir);
  for (const auto& [name, content] : out.files) {
    std::ofstream f(report_dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("report: cannot write " + (report_dir / name).string());
    f << content;
  }
}

}  // namespace apc::bench
