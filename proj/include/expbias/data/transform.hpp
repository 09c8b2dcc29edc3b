#pragma once

#include "expbias/data/panel.hpp"

#include <nlohmann/json_fwd.hpp>

#include <span>
#include <string>
#include <vector>

namespace expbias::data {

/// Per-feature differencing flags plus standardization statistics, fitted on
/// a training split.
struct FeatureTransform {
  std::vector<bool> differenced;
  Vector mean;
  Vector stddev;
  /// content_hash of the raw training split the transform was fitted on.
  std::string fitted_on;

  std::size_t n_features() const { return static_cast<std::size_t>(mean.size()); }
  bool any_differenced() const;

  /// Identity transform (no differencing, mean 0, std 1).
  static FeatureTransform identity(std::size_t n_features);
};

/// x_t - x_{t-1} on flagged features. Every entity loses its first row;
/// entities shorter than 2 rows are dropped with a warning on stderr.
PanelDataset difference_apply(const PanelDataset &ds, const std::vector<bool> &flags);
PanelDataset difference_apply(const PanelDataset &ds);

/// Cumulative sum of `deltas` starting from `last_level`.
std::vector<double> difference_invert(double last_level, std::span<const double> deltas);

struct Standardization {
  Vector mean;
  Vector stddev;
};

/// Population mean and standard deviation of every feature over all rows.
/// A zero-variance feature is an InvalidData error naming the feature.
Standardization standardize_fit(const PanelDataset &train);
PanelDataset standardize_apply(const Standardization &s, const PanelDataset &ds);
PanelDataset standardize_invert(const Standardization &s, const PanelDataset &ds);

/// Fits the full pipeline (difference where flagged, then standardize) on a
/// training split.
FeatureTransform fit_transform(const PanelDataset &train, const std::vector<bool> &difference_flags);

/// Applies / inverts the full pipeline. Inversion of differenced features
/// needs each entity's level just before its first delta row, given as
/// `anchors` (one row per entity, in order).
PanelDataset transform_apply(const FeatureTransform &ft, const PanelDataset &ds);
PanelDataset transform_invert(const FeatureTransform &ft, const PanelDataset &transformed,
                              const std::vector<Vector> &anchors);

/// Row-level standardization helpers (no differencing).
Vector scale_row(const FeatureTransform &ft, const Vector &raw);
Vector unscale_row(const FeatureTransform &ft, const Vector &scaled);
double unscale_value(const FeatureTransform &ft, std::size_t feature, double scaled);

nlohmann::json transform_to_json(const FeatureTransform &ft);
FeatureTransform transform_from_json(const nlohmann::json &doc);

} // namespace expbias::data
