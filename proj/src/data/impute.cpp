#include "expbias/data/impute.hpp"

#include "expbias/error.hpp"

#include <limits>
#include <random>

namespace expbias::data {

PanelDataset forward_fill(const PanelDataset &ds, const std::vector<std::string> &columns) {
  PanelDataset out = ds;
  for (const auto &name : columns) {
    const auto idx = ds.feature_index(name);
    require(idx.has_value(), ErrorKind::InvalidConfiguration, "forward-fill column '" + name + "' does not exist");
    const auto col = static_cast<Eigen::Index>(*idx);
    for (auto &e : out.entities) {
      double last = std::numeric_limits<double>::quiet_NaN();
      for (Eigen::Index t = 0; t < e.values.rows(); ++t) {
        if (std::isnan(e.values(t, col))) {
          e.values(t, col) = last;
        } else {
          last = e.values(t, col);
        }
      }
    }
  }
  return out;
}

namespace {

struct RowRef {
  std::size_t entity;
  Eigen::Index row;
};

} // namespace

PanelDataset hot_deck_impute(const PanelDataset &ds, std::uint64_t seed) {
  const std::size_t n_features = ds.n_features();
  std::vector<RowRef> all_rows;
  std::vector<RowRef> complete;
  std::vector<std::size_t> observed_count(n_features, 0);
  for (std::size_t k = 0; k < ds.entities.size(); ++k) {
    const auto &v = ds.entities[k].values;
    for (Eigen::Index t = 0; t < v.rows(); ++t) {
      all_rows.push_back({k, t});
      bool full = true;
      for (std::size_t j = 0; j < n_features; ++j) {
        if (std::isnan(v(t, static_cast<Eigen::Index>(j)))) {
          full = false;
        } else {
          ++observed_count[j];
        }
      }
      if (full) {
        complete.push_back({k, t});
      }
    }
  }
  for (std::size_t j = 0; j < n_features; ++j) {
    require(observed_count[j] > 0 || all_rows.empty(), ErrorKind::InvalidData,
            "feature '" + ds.feature_names[j] + "' is missing everywhere; nothing to impute from");
  }

  std::mt19937_64 rng(seed);
  PanelDataset out = ds;
  std::vector<RowRef> ties;
  for (const RowRef &r : all_rows) {
    const auto &src = ds.entities[r.entity].values;
    for (std::size_t j = 0; j < n_features; ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      if (!std::isnan(src(r.row, col))) {
        continue;
      }
      const std::vector<RowRef> &pool = complete.empty() ? all_rows : complete;
      double best = std::numeric_limits<double>::infinity();
      ties.clear();
      for (const RowRef &d : pool) {
        const auto &donor = ds.entities[d.entity].values;
        if (std::isnan(donor(d.row, col)) || (d.entity == r.entity && d.row == r.row)) {
          continue;
        }
        double dist = 0.0;
        for (Eigen::Index m = 0; m < src.cols(); ++m) {
          const double a = src(r.row, m);
          const double b = donor(d.row, m);
          if (!std::isnan(a) && !std::isnan(b)) {
            dist += (a - b) * (a - b);
          }
        }
        if (dist < best) {
          best = dist;
          ties.clear();
          ties.push_back(d);
        } else if (dist == best) {
          ties.push_back(d);
        }
      }
      require(!ties.empty(), ErrorKind::InvalidData, "no donor found for feature '" + ds.feature_names[j] + "'");
      std::size_t pick = 0;
      if (ties.size() > 1) {
        std::uniform_int_distribution<std::size_t> dist(0, ties.size() - 1);
        pick = dist(rng);
      }
      out.entities[r.entity].values(r.row, col) = ds.entities[ties[pick].entity].values(ties[pick].row, col);
    }
  }
  return out;
}

} // namespace expbias::data
