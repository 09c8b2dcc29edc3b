#pragma once

#include "expbias/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace expbias::data {

/// One entity's observations. Row t of `values` is the feature vector at
/// `times[t]`; a NaN cell means the value is missing.
struct Entity {
  std::string id;
  std::vector<std::int64_t> times;
  Matrix values;

  std::size_t length() const { return times.size(); }
  Vector row(std::size_t t) const { return values.row(static_cast<Eigen::Index>(t)).transpose(); }
  bool missing(std::size_t t, std::size_t feature) const {
    return std::isnan(values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(feature)));
  }
};

/// Multiple entities sharing one feature schema; one feature is the target.
struct PanelDataset {
  std::vector<Entity> entities;
  std::vector<std::string> feature_names;
  std::size_t target_index = 0;
  /// Spacing between consecutive observations, in time_index units.
  std::int64_t time_step = 1;

  std::size_t n_features() const { return feature_names.size(); }
  std::size_t total_rows() const;
  bool empty() const { return entities.empty(); }
  bool has_missing() const;

  /// Indices of every feature except the target, in column order.
  std::vector<std::size_t> predictor_indices() const;
  std::optional<std::size_t> feature_index(const std::string &name) const;
  const Entity *find(const std::string &id) const;

  /// Throws when the invariants (uniform width, increasing times, valid
  /// target) are violated.
  void validate() const;

  /// Same schema, no entities.
  PanelDataset empty_like() const;
};

/// First `n` observations of every entity (entities shorter than `n` are kept
/// whole).
PanelDataset head(const PanelDataset &ds, std::size_t n);

/// Observations [from, from + count) of every entity; entities without any
/// rows in that window are dropped.
PanelDataset window(const PanelDataset &ds, std::size_t from, std::size_t count);

PanelDataset select_entities(const PanelDataset &ds, const std::vector<std::string> &ids);

/// Restricts every entity to the given columns; the target follows along when
/// included, otherwise the dataset's target_index is set to 0.
PanelDataset select_columns(const PanelDataset &ds, const std::vector<std::size_t> &columns);

/// Stable FNV-1a digest of ids, times and values. Used as the fitted-on marker
/// for transforms.
std::string content_hash(const PanelDataset &ds);

} // namespace expbias::data
