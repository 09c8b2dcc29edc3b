#pragma once

#include "expbias/data/panel.hpp"
#include "expbias/models/forecaster.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace expbias::eval {

enum class Units { Original, Transformed };

const char *to_string(Units units);
Units parse_units(const std::string &text);

/// Per-step accuracy of one model over a set of entities.
struct HorizonReport {
  std::string label;
  Units units = Units::Original;
  std::vector<std::string> entity_ids;
  /// abs_errors[i][h]: entity i at step h+1; NaN where truth is absent.
  std::vector<std::vector<double>> abs_errors;
  std::vector<double> mae; // NaN for a step no entity reaches
  std::vector<std::size_t> n_entities;
  double overall = 0.0; // mean of the curve weighted by n_entities

  std::size_t horizon() const { return mae.size(); }
  /// Mean of the curve over steps [first, last] (1-based, inclusive).
  double mean_over(std::size_t first, std::size_t last) const;
};

/// Scores forecasts against the target column of `truth`. Step h of a
/// forecast is matched to the truth row at origin + h * time_step.
HorizonReport horizon_mae(const std::string &label, const std::vector<models::ForecastResult> &forecasts,
                          const data::PanelDataset &truth, Units units = Units::Original);

struct Comparison {
  std::vector<std::string> labels;
  std::vector<double> overall;
  /// overall / overall of the first report.
  std::vector<double> ratio;
  /// Index of the report with the strictly lowest MAE at each step, if unique.
  std::vector<std::optional<std::size_t>> step_winner;
};

Comparison compare_reports(const std::vector<HorizonReport> &reports);

/// Fixed-width text table for terminals.
std::string format_table(const Comparison &cmp);

nlohmann::json summary_json(const std::vector<HorizonReport> &reports);

/// Writes mae_curve_<label>.csv, per_entity_<label>.csv and summary.json.
void emit_outputs(const std::vector<HorizonReport> &reports, const std::filesystem::path &out_dir);

/// Label made safe for use inside a file name.
std::string file_label(const std::string &label);

} // namespace expbias::eval
