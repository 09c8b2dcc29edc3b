#include "expbias/models/config.hpp"

#include "expbias/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace expbias::models {

const char *to_string(Architecture arch) {
  switch (arch) {
  case Architecture::Model1:
    return "model1";
  case Architecture::Model2:
    return "model2";
  case Architecture::Univariate:
    return "univariate";
  }
  return "model1";
}

Architecture parse_architecture(const std::string &text) {
  if (text == "model1") {
    return Architecture::Model1;
  }
  if (text == "model2") {
    return Architecture::Model2;
  }
  if (text == "univariate") {
    return Architecture::Univariate;
  }
  raise(ErrorKind::InvalidConfiguration, "unknown architecture '" + text + "'");
}

const char *to_string(WarmUp warmup) { return warmup == WarmUp::FullHistory ? "full-history" : "last-point"; }

WarmUp parse_warmup(const std::string &text) {
  if (text == "full-history") {
    return WarmUp::FullHistory;
  }
  if (text == "last-point") {
    return WarmUp::LastPoint;
  }
  raise(ErrorKind::InvalidConfiguration, "unknown warm-up mode '" + text + "' (full-history or last-point)");
}

void CommonConfig::validate() const {
  require(hidden >= 1 && layers >= 1, ErrorKind::InvalidConfiguration, "hidden size and layer count must be >= 1");
  require(lr > 0.0 && std::isfinite(lr), ErrorKind::InvalidConfiguration, "learning rate must be positive");
  require(epochs >= 0, ErrorKind::InvalidConfiguration, "epochs must be >= 0");
  require(std::isfinite(clip_norm), ErrorKind::InvalidConfiguration, "clip norm must be finite");
}

void Model1Config::validate() const {
  CommonConfig::validate();
  if (target_replication_alpha) {
    require(*target_replication_alpha >= 0.0 && *target_replication_alpha <= 1.0, ErrorKind::InvalidConfiguration,
            "target replication alpha must lie in [0,1]");
  }
}

void Model2Config::validate() const {
  CommonConfig::validate();
  require(outer_alpha >= 0.0 && outer_alpha <= 1.0, ErrorKind::InvalidConfiguration,
          "outer alpha must lie in [0,1]");
  if (feature_alphas.size() > 0) {
    require((feature_alphas.array() >= 0.0).all() && (feature_alphas.array() <= 1.0).all(),
            ErrorKind::InvalidConfiguration, "feature alphas must lie in [0,1]");
    require(std::abs(feature_alphas.sum() - 1.0) <= 1e-9, ErrorKind::InvalidConfiguration,
            "feature alphas must sum to 1");
  }
}

namespace {

nlohmann::json common_json(const CommonConfig &cfg) {
  return {{"hidden", cfg.hidden},
          {"layers", cfg.layers},
          {"lr", cfg.lr},
          {"epochs", cfg.epochs},
          {"clip_norm", cfg.clip_norm},
          {"standard_output_gate", cfg.standard_output_gate},
          {"difference", cfg.difference},
          {"standardize", cfg.standardize},
          {"warmup", to_string(cfg.warmup)},
          {"bias", bias::to_string(cfg.bias.mode)},
          {"schedule", cfg.bias.schedule.describe()},
          {"k", cfg.bias.k},
          {"k_candidates", cfg.bias.k_candidates},
          {"seed", cfg.seed}};
}

} // namespace

nlohmann::json config_to_json(const Model1Config &cfg) {
  nlohmann::json j = common_json(cfg);
  j["univariate"] = cfg.univariate;
  j["target_replication_alpha"] =
      cfg.target_replication_alpha ? nlohmann::json(*cfg.target_replication_alpha) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json config_to_json(const Model2Config &cfg) {
  nlohmann::json j = common_json(cfg);
  j["outer_alpha"] = cfg.outer_alpha;
  j["feature_alphas"] = std::vector<double>(cfg.feature_alphas.data(),
                                            cfg.feature_alphas.data() + cfg.feature_alphas.size());
  return j;
}

} // namespace expbias::models
