#pragma once

#include "expbias/data/panel.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace expbias::data {

/// Parameters of the synthetic panel generator. Each entity is attached to
/// one of `n_prototypes` prototype feature vectors and drifts toward it:
///
///   x_{t+1} = x_t + reversion_rate * (prototype - x_t) + N(0, noise_sigma^2)
///   y_t     = target_weights . x_t + N(0, noise_sigma^2)
///
/// Prototypes are drawn N(0, prototype_scale^2) per coordinate and starting
/// points are prototype + N(0, init_spread^2).
struct SynthSpec {
  std::size_t n_entities = 200;
  std::size_t n_features = 4;
  std::size_t seq_len = 30;
  std::size_t n_prototypes = 3;
  double reversion_rate = 0.15;
  double noise_sigma = 0.1;
  /// Empty selects the default weights (+1, -1/2, +1/3, -1/4, ...).
  std::vector<double> target_weights;
  double prototype_scale = 3.0;
  double init_spread = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<double> resolved_weights() const;
};

struct SynthResult {
  /// Columns f0..f{n-1} then the target `y`.
  PanelDataset dataset;
  std::vector<std::size_t> prototype_of; // per entity, in dataset order
  Matrix prototypes;                     // n_prototypes x n_features
};

SynthResult gen_synthetic(const SynthSpec &spec);

/// Writes `entity_id,prototype` rows.
void save_truth_sidecar(const std::filesystem::path &path, const SynthResult &result);

} // namespace expbias::data
