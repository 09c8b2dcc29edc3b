#pragma once

#include "expbias/bias/kmeans.hpp"
#include "expbias/bias/population.hpp"
#include "expbias/bias/schedule.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace expbias::bias {

enum class BiasMode {
  Hold,                // unbiased: keep the last observation
  PopulationAverage,   // beta(t) x0 + (1 - beta(t)) mu
  ClusterHard,         // nearest k-means center
  ClusterInterpolated, // beta(t) x0 + (1 - beta(t)) nearest center
};

const char *to_string(BiasMode mode);
/// Accepts none|hold|pop-average|cluster-hard|cluster-interp.
BiasMode parse_bias_mode(const std::string &text);

/// An expectation-bias estimator together with the statistics it was fitted
/// with.
struct BiasSpec {
  BiasMode mode = BiasMode::Hold;
  BetaSchedule schedule = BetaSchedule::step_at(20);
  std::optional<PopulationStats> population;
  std::optional<KMeansModel> clusters;

  bool fitted() const;
  bool is_hold() const { return mode == BiasMode::Hold; }
};

struct BiasFitOptions {
  BiasMode mode = BiasMode::Hold;
  BetaSchedule schedule = BetaSchedule::step_at(20);
  /// Cluster count; 0 selects K by silhouette over `k_candidates`.
  std::size_t k = 3;
  std::vector<std::size_t> k_candidates{2, 3, 4};
  std::uint64_t seed = 0;
  int max_iter = 300;
};

/// Fits the statistics required by `opts.mode` on training samples (rows).
BiasSpec fit_bias(const Matrix &samples, const BiasFitOptions &opts);

/// Bias vector for rollout step t >= 1, anchored at the last observation x0.
Vector make_bias_inputs(const BiasSpec &spec, const Vector &x0, std::int64_t t);

nlohmann::json bias_to_json(const BiasSpec &spec);
BiasSpec bias_from_json(const nlohmann::json &doc);

} // namespace expbias::bias
