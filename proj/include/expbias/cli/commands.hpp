#pragma once

#include "expbias/cli/config.hpp"
#include "expbias/error.hpp"
#include "expbias/models/forecaster.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace expbias::cli {

/// 1 usage, 2 data, 3 numeric/training.
int exit_code_for(ErrorKind kind);

/// Executes a parsed command, writing human-readable progress to `out`.
/// Module errors propagate as exceptions.
void run_command(const RunConfig &cfg, std::ostream &out);

/// Parse + run with error reporting; returns the process exit status.
int run_main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// Loads a panel CSV and applies forward-fill and imputation per `cfg`.
data::PanelDataset load_dataset(const RunConfig &cfg, const std::filesystem::path &path);

/// Rows of entity_id,horizon_step,prediction.
void write_forecast_csv(const std::filesystem::path &path, const std::vector<models::ForecastResult> &forecasts);

/// Reads a forecast CSV. Origins are left at 0 for the caller to fill in.
std::vector<models::ForecastResult> read_forecast_csv(const std::filesystem::path &path);

} // namespace expbias::cli
