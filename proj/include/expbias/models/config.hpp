#pragma once

#include "expbias/bias/bias_spec.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace expbias::models {

enum class Architecture { Model1, Model2, Univariate };

const char *to_string(Architecture arch);
Architecture parse_architecture(const std::string &text);

/// How the recurrent state is primed before the free-running rollout.
enum class WarmUp {
  FullHistory, // feed every observed row
  LastPoint,   // feed only the most recent row
};

const char *to_string(WarmUp warmup);
WarmUp parse_warmup(const std::string &text);

/// Settings shared by both architectures.
struct CommonConfig {
  int hidden = 64;
  int layers = 2;
  double lr = 3e-4;
  int epochs = 500;
  double clip_norm = 5.0;
  bool standard_output_gate = false;
  /// Difference every feature before standardizing.
  bool difference = false;
  /// When false the transform is the identity (useful for tests).
  bool standardize = true;
  WarmUp warmup = WarmUp::FullHistory;
  bias::BiasFitOptions bias;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Single-output network: inputs are the predictor features plus the previous
/// target; rollout substitutes the bias vector for future predictors.
struct Model1Config : CommonConfig {
  /// Weight of the replicated-target term; nullopt trains on per-step targets.
  std::optional<double> target_replication_alpha;
  /// Restrict inputs to the target column alone (univariate baseline).
  bool univariate = false;

  Model1Config() { lr = 3e-4; }
  void validate() const;
};

/// Multi-output network predicting every feature; the bias vector is
/// concatenated onto the inputs unless the bias mode is Hold.
struct Model2Config : CommonConfig {
  /// Per-feature loss weights; empty means uniform.
  Vector feature_alphas;
  /// Weight of the feature loss against the target loss.
  double outer_alpha = 0.5;

  Model2Config() { lr = 1e-4; }
  void validate() const;
};

nlohmann::json config_to_json(const Model1Config &cfg);
nlohmann::json config_to_json(const Model2Config &cfg);

} // namespace expbias::models
