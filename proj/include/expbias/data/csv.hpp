#pragma once

#include "expbias/data/panel.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace expbias::data {

/// Column roles and ingestion options for panel CSV files.
///
/// Files have a header row; the first two columns are `entity_id` and
/// `time_index`, every further column is a numeric feature. Empty cells are
/// missing values.
struct CsvSchema {
  std::string target;
  /// Rows whose time_index is in this list are discarded on load.
  std::vector<std::int64_t> drop_times;
  /// When set, every gap between consecutive observations of an entity must
  /// equal `time_step`.
  bool enforce_uniform_spacing = false;
  std::int64_t time_step = 1;
};

PanelDataset read_panel_csv(std::istream &in, const CsvSchema &schema, const std::string &source = "<stream>");
PanelDataset load_panel_csv(const std::filesystem::path &path, const CsvSchema &schema);

void write_panel_csv(std::ostream &out, const PanelDataset &ds);
void save_panel_csv(const std::filesystem::path &path, const PanelDataset &ds);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_field(const std::string &s);

std::vector<std::string> split_csv_line(const std::string &line);

} // namespace expbias::data
