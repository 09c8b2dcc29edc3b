#pragma once

#include "expbias/bias/bias_spec.hpp"
#include "expbias/data/panel.hpp"
#include "expbias/data/transform.hpp"
#include "expbias/models/config.hpp"
#include "expbias/nncore/network.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace expbias::models {

/// How Model 2 turns its feature predictions into the target forecast.
enum class TargetFn {
  Select, // the target column's own output
};

struct TrainingLog {
  std::vector<double> train_loss; // mean per-sequence loss, one per epoch
  std::vector<double> val_mae;    // teacher-forced target MAE (transformed units)
  int best_epoch = 0;             // 1-based; 0 when no epoch ran
  std::vector<std::string> warnings;
};

struct TrainedForecaster {
  nn::StackedNetwork network;
  Architecture architecture = Architecture::Model1;
  /// Names of every column in the source schema.
  std::vector<std::string> source_features;
  /// Source columns the model consumes, in input order.
  std::vector<std::size_t> columns;
  /// Position of the target inside `columns`.
  std::size_t target_index = 0;
  data::FeatureTransform transform;
  bias::BiasSpec bias;
  /// Positions inside `columns` that the bias vector covers.
  std::vector<std::size_t> bias_columns;
  bool concat_bias = false;
  TargetFn target_fn = TargetFn::Select;
  WarmUp warmup = WarmUp::FullHistory;
  nlohmann::json config;
  TrainingLog log;

  std::size_t source_target() const { return columns[target_index]; }
};

struct ForecastResult {
  std::string entity_id;
  /// time_index of the last observed row; step h forecasts origin + h * time_step.
  std::int64_t origin_time = 0;
  std::vector<double> values; // original units, one per horizon step

  std::size_t horizon() const { return values.size(); }
};

TrainedForecaster train_model1(const data::PanelDataset &train, const data::PanelDataset &val,
                               const Model1Config &cfg);
TrainedForecaster train_model2(const data::PanelDataset &train, const data::PanelDataset &val,
                               const Model2Config &cfg);

/// Refits the bias of a single-output forecaster on `train`. Teacher-forced
/// training never sees the bias, so the result equals training afresh with
/// `opts`.
TrainedForecaster with_bias(TrainedForecaster model, const data::PanelDataset &train,
                            const bias::BiasFitOptions &opts);

ForecastResult forecast_model1(const TrainedForecaster &model, const data::Entity &history, std::size_t horizon);
ForecastResult forecast_model2(const TrainedForecaster &model, const data::Entity &history, std::size_t horizon);
ForecastResult forecast_persistence(const data::Entity &history, std::size_t target_index, std::size_t horizon);

/// Dispatches on the architecture (Univariate uses the Model 1 rollout).
ForecastResult forecast(const TrainedForecaster &model, const data::Entity &history, std::size_t horizon);

/// Mean one-step-ahead absolute target error under teacher forcing, in
/// transformed units. Entities too short to form a pair are skipped.
double teacher_forced_mae(const TrainedForecaster &model, const data::PanelDataset &ds);

nlohmann::json model_to_json(const TrainedForecaster &model);
TrainedForecaster model_from_json(const nlohmann::json &doc);
void save_model(const std::filesystem::path &path, const TrainedForecaster &model);
TrainedForecaster load_model(const std::filesystem::path &path);

} // namespace expbias::models
