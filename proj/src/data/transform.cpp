#include "expbias/data/transform.hpp"

#include "expbias/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <iostream>

namespace expbias::data {

bool FeatureTransform::any_differenced() const {
  for (bool d : differenced) {
    if (d) {
      return true;
    }
  }
  return false;
}

FeatureTransform FeatureTransform::identity(std::size_t n_features) {
  FeatureTransform ft;
  ft.differenced.assign(n_features, false);
  ft.mean = Vector::Zero(static_cast<Eigen::Index>(n_features));
  ft.stddev = Vector::Ones(static_cast<Eigen::Index>(n_features));
  ft.fitted_on = "identity";
  return ft;
}

PanelDataset difference_apply(const PanelDataset &ds, const std::vector<bool> &flags) {
  require(flags.size() == ds.n_features(), ErrorKind::Shape, "differencing flags must cover every feature");
  PanelDataset out = ds.empty_like();
  for (const auto &e : ds.entities) {
    if (e.length() < 2) {
      std::cerr << "warning: entity '" << e.id << "' has fewer than 2 rows; dropped by differencing\n";
      continue;
    }
    const Eigen::Index n = static_cast<Eigen::Index>(e.length()) - 1;
    Entity d;
    d.id = e.id;
    d.times.assign(e.times.begin() + 1, e.times.end());
    d.values = e.values.bottomRows(n);
    for (std::size_t j = 0; j < flags.size(); ++j) {
      if (flags[j]) {
        const auto col = static_cast<Eigen::Index>(j);
        d.values.col(col) = e.values.col(col).tail(n) - e.values.col(col).head(n);
      }
    }
    out.entities.push_back(std::move(d));
  }
  return out;
}

PanelDataset difference_apply(const PanelDataset &ds) {
  return difference_apply(ds, std::vector<bool>(ds.n_features(), true));
}

std::vector<double> difference_invert(double last_level, std::span<const double> deltas) {
  std::vector<double> levels;
  levels.reserve(deltas.size());
  double level = last_level;
  for (double d : deltas) {
    level += d;
    levels.push_back(level);
  }
  return levels;
}

Standardization standardize_fit(const PanelDataset &train) {
  require(train.total_rows() > 0, ErrorKind::InvalidInput, "cannot fit standardization on an empty dataset");
  require(!train.has_missing(), ErrorKind::InvalidData, "standardization requires imputed data (missing cells found)");
  const auto f = static_cast<Eigen::Index>(train.n_features());
  Vector sum = Vector::Zero(f);
  double n = 0.0;
  for (const auto &e : train.entities) {
    sum += e.values.colwise().sum().transpose();
    n += static_cast<double>(e.length());
  }
  Standardization s;
  s.mean = sum / n;
  Vector sq = Vector::Zero(f);
  for (const auto &e : train.entities) {
    sq += (e.values.rowwise() - s.mean.transpose()).array().square().matrix().colwise().sum().transpose();
  }
  s.stddev = (sq / n).array().sqrt().matrix();
  for (Eigen::Index j = 0; j < f; ++j) {
    // Relative threshold so that constant columns with rounding noise in the
    // mean are still caught.
    const double scale = std::max(1.0, std::abs(s.mean[j]));
    require(s.stddev[j] > 1e-12 * scale, ErrorKind::InvalidData,
            "feature '" + train.feature_names[static_cast<std::size_t>(j)] + "' has zero variance");
  }
  return s;
}

PanelDataset standardize_apply(const Standardization &s, const PanelDataset &ds) {
  require(s.mean.size() == static_cast<Eigen::Index>(ds.n_features()), ErrorKind::Shape,
          "standardization width does not match dataset");
  PanelDataset out = ds;
  for (auto &e : out.entities) {
    e.values = ((e.values.rowwise() - s.mean.transpose()).array().rowwise() / s.stddev.transpose().array()).matrix();
  }
  return out;
}

PanelDataset standardize_invert(const Standardization &s, const PanelDataset &ds) {
  require(s.mean.size() == static_cast<Eigen::Index>(ds.n_features()), ErrorKind::Shape,
          "standardization width does not match dataset");
  PanelDataset out = ds;
  for (auto &e : out.entities) {
    e.values = ((e.values.array().rowwise() * s.stddev.transpose().array()).matrix().rowwise() + s.mean.transpose());
  }
  return out;
}

FeatureTransform fit_transform(const PanelDataset &train, const std::vector<bool> &difference_flags) {
  FeatureTransform ft;
  ft.differenced = difference_flags;
  const PanelDataset base = ft.any_differenced() ? difference_apply(train, difference_flags) : train;
  const Standardization s = standardize_fit(base);
  ft.mean = s.mean;
  ft.stddev = s.stddev;
  ft.fitted_on = content_hash(train);
  return ft;
}

PanelDataset transform_apply(const FeatureTransform &ft, const PanelDataset &ds) {
  require(ft.n_features() == ds.n_features(), ErrorKind::Shape, "transform width does not match dataset");
  const PanelDataset base = ft.any_differenced() ? difference_apply(ds, ft.differenced) : ds;
  return standardize_apply({ft.mean, ft.stddev}, base);
}

PanelDataset transform_invert(const FeatureTransform &ft, const PanelDataset &transformed,
                              const std::vector<Vector> &anchors) {
  PanelDataset out = standardize_invert({ft.mean, ft.stddev}, transformed);
  if (!ft.any_differenced()) {
    return out;
  }
  require(anchors.size() == out.entities.size(), ErrorKind::Shape, "need one anchor row per entity");
  for (std::size_t k = 0; k < out.entities.size(); ++k) {
    auto &e = out.entities[k];
    for (std::size_t j = 0; j < ft.differenced.size(); ++j) {
      if (!ft.differenced[j]) {
        continue;
      }
      const auto col = static_cast<Eigen::Index>(j);
      double level = anchors[k][col];
      for (Eigen::Index t = 0; t < e.values.rows(); ++t) {
        level += e.values(t, col);
        e.values(t, col) = level;
      }
    }
  }
  return out;
}

Vector scale_row(const FeatureTransform &ft, const Vector &raw) {
  return ((raw - ft.mean).array() / ft.stddev.array()).matrix();
}

Vector unscale_row(const FeatureTransform &ft, const Vector &scaled) {
  return (scaled.array() * ft.stddev.array()).matrix() + ft.mean;
}

double unscale_value(const FeatureTransform &ft, std::size_t feature, double scaled) {
  const auto j = static_cast<Eigen::Index>(feature);
  return scaled * ft.stddev[j] + ft.mean[j];
}

nlohmann::json transform_to_json(const FeatureTransform &ft) {
  return {{"differenced", ft.differenced},
          {"mean", std::vector<double>(ft.mean.data(), ft.mean.data() + ft.mean.size())},
          {"stddev", std::vector<double>(ft.stddev.data(), ft.stddev.data() + ft.stddev.size())},
          {"fitted_on", ft.fitted_on}};
}

FeatureTransform transform_from_json(const nlohmann::json &doc) {
  try {
    FeatureTransform ft;
    ft.differenced = doc.at("differenced").get<std::vector<bool>>();
    const auto mean = doc.at("mean").get<std::vector<double>>();
    const auto sd = doc.at("stddev").get<std::vector<double>>();
    require(mean.size() == sd.size() && mean.size() == ft.differenced.size(), ErrorKind::Format,
            "transform document has inconsistent widths");
    ft.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    ft.stddev = Eigen::Map<const Vector>(sd.data(), static_cast<Eigen::Index>(sd.size()));
    ft.fitted_on = doc.at("fitted_on").get<std::string>();
    return ft;
  } catch (const nlohmann::json::exception &e) {
    raise(ErrorKind::Format, std::string("malformed transform document: ") + e.what());
  }
}

} // namespace expbias::data
