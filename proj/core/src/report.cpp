#include "hrlf/report.hpp"

#include "hrlf/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hrlf::report {

namespace {

using nlohmann::ordered_json;

constexpr std::array<const char*, 8> kGridColumns{"l", "a", "v", "la", "lv", "av", "Avg", "lav"};
constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::array<double, 8> grid_row(const eval::ConditionReport& r) {
  return {r.values[0], r.values[1], r.values[2], r.values[3], r.values[4], r.values[5], r.average, r.values[6]};
}

std::vector<ordered_json> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read report " + path.string());
  std::vector<ordered_json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      records.push_back(ordered_json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("malformed report " + path.string() + ": " + e.what());
    }
  }
  if (records.empty()) throw ConfigError("empty report " + path.string());
  return records;
}

std::string xml_escape(const std::string& s) {
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

struct Frame {
  double width = 640;
  double height = 400;
  double left = 60;
  double right = 150;
  double top = 30;
  double bottom = 50;
  double lo = 0.0;
  double hi = 1.0;

  [[nodiscard]] double plot_w() const { return width - left - right; }
  [[nodiscard]] double plot_h() const { return height - top - bottom; }
  [[nodiscard]] double y(double v) const { return top + plot_h() * (1.0 - (v - lo) / (hi - lo)); }
};

// Value range padded to friendly bounds; metrics in [0, 1] stay there.
void fit_range(Frame& f, const std::vector<double>& values) {
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  if (lo >= 0.0 && hi <= 1.0) {
    f.lo = 0.0;
    f.hi = 1.0;
    return;
  }
  if (hi - lo < 1e-9) hi = lo + 1.0;
  f.lo = std::min(0.0, lo);
  f.hi = hi + 0.05 * (hi - f.lo);
}

void axes(std::ostringstream& os, const Frame& f, const std::string& y_label) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = f.lo + (f.hi - f.lo) * i / 5.0;
    const double y = f.y(v);
    os << "<line x1=\"" << f.left << "\" y1=\"" << y << "\" x2=\"" << f.left + f.plot_w() << "\" y2=\"" << y
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << f.left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fixed(v, 2)
       << "</text>\n";
  }
  os << "<line x1=\"" << f.left << "\" y1=\"" << f.top << "\" x2=\"" << f.left << "\" y2=\"" << f.top + f.plot_h()
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << f.left << "\" y1=\"" << f.top + f.plot_h() << "\" x2=\"" << f.left + f.plot_w()
     << "\" y2=\"" << f.top + f.plot_h() << "\" stroke=\"black\"/>\n";
  os << "<text x=\"14\" y=\"" << f.top + f.plot_h() / 2 << "\" transform=\"rotate(-90 14 " << f.top + f.plot_h() / 2
     << ")\" text-anchor=\"middle\">" << xml_escape(y_label) << "</text>\n";
}

void legend(std::ostringstream& os, const Frame& f, const std::vector<std::string>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double x = f.left + f.plot_w() + 15;
    const double y = f.top + 10 + 20.0 * static_cast<double>(i);
    os << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"12\" fill=\""
       << kPalette[i % kPalette.size()] << "\"/>\n";
    os << "<text x=\"" << x + 18 << "\" y=\"" << y + 2 << "\">" << xml_escape(labels[i]) << "</text>\n";
  }
}

}  // namespace

std::string grid_table(const eval::ConditionReport& report, const std::string& label) {
  const std::size_t name_w = std::max<std::size_t>(8, label.size());
  std::ostringstream os;
  os << std::string(name_w, ' ');
  for (const char* c : kGridColumns) os << pad(c, 9);
  os << "\n" << label << std::string(name_w - label.size(), ' ');
  for (double v : grid_row(report)) os << pad(fixed(v), 9);
  os << "\n";
  return os.str();
}

std::string sweep_table(const eval::SweepReport& report, const std::string& label) {
  std::ostringstream os;
  os << "# " << label << " " << eval::metric_name(report.metric) << " conditions=";
  for (std::size_t i = 0; i < report.conditions.size(); ++i) {
    os << (i ? "," : "") << msm::condition_name(report.conditions[i]);
  }
  os << "\n" << pad("p", 5) << pad("value", 10) << "\n";
  for (std::size_t i = 0; i < eval::kSweepPoints; ++i) {
    os << pad(fixed(report.ratios[i], 1), 5) << pad(fixed(report.values[i]), 10) << "\n";
  }
  return os.str();
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const std::string& suffix) {
  auto out = stem;
  out += suffix;
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_grid(const eval::ConditionReport& report, const std::string& label, const std::filesystem::path& stem) {
  write_text(with_suffix(stem, ".txt"), grid_table(report, label));
  std::ostringstream os;
  const auto row = grid_row(report);
  for (std::size_t i = 0; i < kGridColumns.size(); ++i) {
    ordered_json j;
    j["kind"] = "grid";
    j["label"] = label;
    j["metric"] = eval::metric_name(report.metric);
    j["column"] = kGridColumns[i];
    j["value"] = row[i];
    os << j.dump() << "\n";
  }
  write_text(with_suffix(stem, ".jsonl"), os.str());
}

void write_sweep(const eval::SweepReport& report, const std::string& label, const std::filesystem::path& stem) {
  write_text(with_suffix(stem, ".txt"), sweep_table(report, label));
  std::vector<std::string> conditions;
  for (auto c : report.conditions) conditions.emplace_back(msm::condition_name(c));
  std::ostringstream os;
  for (std::size_t i = 0; i < eval::kSweepPoints; ++i) {
    ordered_json j;
    j["kind"] = "sweep";
    j["label"] = label;
    j["metric"] = eval::metric_name(report.metric);
    j["conditions"] = conditions;
    j["seed"] = report.seed;
    j["p"] = report.ratios[i];
    j["value"] = report.values[i];
    os << j.dump() << "\n";
  }
  write_text(with_suffix(stem, ".jsonl"), os.str());
}

GridSeries read_grid(const std::filesystem::path& jsonl) {
  const auto records = read_records(jsonl);
  if (records.size() != kGridColumns.size()) throw ConfigError("grid report must have 8 records: " + jsonl.string());
  GridSeries series;
  try {
    series.label = records.front().at("label").get<std::string>();
    series.report.metric = eval::parse_metric(records.front().at("metric").get<std::string>());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      if (r.at("kind") != "grid" || r.at("column") != kGridColumns[i]) {
        throw ConfigError("unexpected record in grid report " + jsonl.string());
      }
      const double v = r.at("value").get<double>();
      if (i < 6) series.report.values[i] = v;
      else if (i == 6) series.report.average = v;
      else series.report.values[6] = v;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed grid report " + jsonl.string() + ": " + e.what());
  }
  return series;
}

SweepSeries read_sweep(const std::filesystem::path& jsonl) {
  const auto records = read_records(jsonl);
  if (records.size() != eval::kSweepPoints) throw ConfigError("sweep report must have 11 records: " + jsonl.string());
  SweepSeries series;
  try {
    const auto& first = records.front();
    series.label = first.at("label").get<std::string>();
    series.report.metric = eval::parse_metric(first.at("metric").get<std::string>());
    series.report.seed = first.at("seed").get<std::uint64_t>();
    for (const auto& c : first.at("conditions")) series.report.conditions.push_back(msm::parse_condition(c.get<std::string>()));
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      if (r.at("kind") != "sweep" || std::abs(r.at("p").get<double>() - series.report.ratios[i]) > 1e-9) {
        throw ConfigError("unexpected record in sweep report " + jsonl.string());
      }
      series.report.values[i] = r.at("value").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed sweep report " + jsonl.string() + ": " + e.what());
  }
  return series;
}

std::string sweep_svg(const std::vector<SweepSeries>& series) {
  if (series.empty()) throw ConfigError("nothing to plot");
  Frame f;
  std::vector<double> all;
  for (const auto& s : series) all.insert(all.end(), s.report.values.begin(), s.report.values.end());
  fit_range(f, all);
  std::ostringstream os;
  axes(os, f, std::string(eval::metric_name(series.front().report.metric)));
  const auto x = [&](double p) { return f.left + f.plot_w() * p; };
  for (std::size_t i = 0; i < eval::kSweepPoints; i += 2) {
    const double p = static_cast<double>(i) / 10.0;
    os << "<text x=\"" << x(p) << "\" y=\"" << f.top + f.plot_h() + 18 << "\" text-anchor=\"middle\">"
       << fixed(p, 1) << "</text>\n";
  }
  os << "<text x=\"" << f.left + f.plot_w() / 2 << "\" y=\"" << f.height - 10
     << "\" text-anchor=\"middle\">missing ratio p</text>\n";
  std::vector<std::string> labels;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % kPalette.size()];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < eval::kSweepPoints; ++i) {
      os << (i ? " " : "") << x(s.report.ratios[i]) << "," << f.y(s.report.values[i]);
    }
    os << "\"/>\n";
    for (std::size_t i = 0; i < eval::kSweepPoints; ++i) {
      os << "<circle cx=\"" << x(s.report.ratios[i]) << "\" cy=\"" << f.y(s.report.values[i])
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    labels.push_back(s.label);
  }
  legend(os, f, labels);
  os << "</svg>\n";
  return os.str();
}

std::string grid_svg(const std::vector<GridSeries>& series) {
  if (series.empty()) throw ConfigError("nothing to plot");
  Frame f;
  std::vector<double> all;
  for (const auto& s : series) {
    const auto row = grid_row(s.report);
    all.insert(all.end(), row.begin(), row.end());
  }
  fit_range(f, all);
  std::ostringstream os;
  axes(os, f, std::string(eval::metric_name(series.front().report.metric)));
  const double group_w = f.plot_w() / static_cast<double>(kGridColumns.size());
  const double bar_w = group_w * 0.8 / static_cast<double>(series.size());
  const double base = f.y(std::max(0.0, f.lo));
  for (std::size_t c = 0; c < kGridColumns.size(); ++c) {
    const double gx = f.left + group_w * static_cast<double>(c);
    os << "<text x=\"" << gx + group_w / 2 << "\" y=\"" << f.top + f.plot_h() + 18 << "\" text-anchor=\"middle\">"
       << kGridColumns[c] << "</text>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
      const double v = grid_row(series[si].report)[c];
      const double y = f.y(v);
      os << "<rect x=\"" << gx + group_w * 0.1 + bar_w * static_cast<double>(si) << "\" y=\"" << std::min(y, base)
         << "\" width=\"" << bar_w << "\" height=\"" << std::abs(base - y) << "\" fill=\""
         << kPalette[si % kPalette.size()] << "\"/>\n";
    }
  }
  std::vector<std::string> labels;
  for (const auto& s : series) labels.push_back(s.label);
  legend(os, f, labels);
  os << "</svg>\n";
  return os.str();
}

}  // namespace hrlf::report
