#pragma once

// Report files: aligned text tables, one JSON record per cell, and SVG
// charts for comparing runs.

#include "hrlf/eval.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace hrlf::report {

/// Header "l a v la lv av Avg lav" and one row of values.
std::string grid_table(const eval::ConditionReport& report, const std::string& label);
/// One row per ratio.
std::string sweep_table(const eval::SweepReport& report, const std::string& label);

/// `<stem>.txt` and `<stem>.jsonl`.
void write_grid(const eval::ConditionReport& report, const std::string& label, const std::filesystem::path& stem);
void write_sweep(const eval::SweepReport& report, const std::string& label, const std::filesystem::path& stem);

struct GridSeries {
  std::string label;
  eval::ConditionReport report;
};

struct SweepSeries {
  std::string label;
  eval::SweepReport report;
};

/// Parses a file written by write_grid / write_sweep. Throws IoError or
/// ConfigError on a missing or malformed file.
GridSeries read_grid(const std::filesystem::path& jsonl);
SweepSeries read_sweep(const std::filesystem::path& jsonl);

/// One polyline per series across the 11 ratios.
std::string sweep_svg(const std::vector<SweepSeries>& series);
/// Grouped bars, one group per column of the grid table.
std::string grid_svg(const std::vector<GridSeries>& series);

void write_text(const std::filesystem::path& path, const std::string& text);

/// `stem` with `suffix` appended verbatim (dots in the stem are kept).
std::filesystem::path with_suffix(const std::filesystem::path& stem, const std::string& suffix);

}  // namespace hrlf::report
