#pragma once

#include "expbias/bias/bias_spec.hpp"
#include "expbias/data/csv.hpp"
#include "expbias/data/synth.hpp"
#include "expbias/models/config.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace expbias::cli {

enum class Command { Synth, KSelect, Train, Forecast, Evaluate, Bench };

const char *to_string(Command cmd);

/// Everything a subcommand needs, with defaults already applied.
struct RunConfig {
  Command command = Command::Train;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  std::filesystem::path config_file;

  // Input data and its schema.
  std::filesystem::path data;
  std::filesystem::path val_data;
  std::string target;
  std::vector<std::int64_t> drop_times;
  std::vector<std::string> forward_fill;
  std::string impute = "hot-deck"; // hot-deck | none
  bool uniform_spacing = false;
  std::int64_t time_step = 1;
  double val_fraction = 0.2;

  // Model.
  std::string model = "model1"; // model1 | model2 | univariate | persistence
  std::filesystem::path model_file;
  std::string bias = "none";
  std::string schedule = "step:20";
  std::size_t k = 3;
  std::vector<std::size_t> k_candidates{2, 3, 4};
  int hidden = 64;
  int layers = 2;
  double lr = 0.0; // 0 selects the architecture default
  int epochs = 500;
  double clip_norm = 5.0;
  bool standard_output_gate = false;
  bool difference = false;
  bool no_standardize = false;
  std::string warmup = "full-history";
  double replication_alpha = -1.0; // negative disables target replication
  std::vector<double> feature_alphas;
  double outer_alpha = 0.5;
  std::size_t horizon = 24;

  // Evaluation.
  std::vector<std::filesystem::path> forecasts;
  std::vector<std::string> labels;
  std::filesystem::path truth;
  std::filesystem::path history;
  std::string units = "original";

  // Synthetic data and benchmark.
  data::SynthSpec synth;
  /// synth: rows per entity written to history.csv (0 writes no split).
  std::size_t history_len = 0;
  /// bench: rows of each held-out entity revealed before forecasting.
  std::size_t bench_history = 6;
  bool extended = false;

  data::CsvSchema schema() const;
  models::Model1Config model1_config() const;
  models::Model2Config model2_config() const;
  bias::BiasFitOptions bias_options() const;
};

/// Thrown for --help; carries the rendered help text.
class HelpRequested : public std::runtime_error {
public:
  explicit HelpRequested(const std::string &text) : std::runtime_error(text) {}
};

/// Parses `args` (without the program name). Keys from --config fill any
/// option not given on the command line. Usage problems raise
/// InvalidConfiguration.
RunConfig parse_config(const std::vector<std::string> &args);

/// Reads a flat JSON object or `key = value` lines into option tokens.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path &path);

nlohmann::json resolved_config_json(const RunConfig &cfg);

} // namespace expbias::cli
