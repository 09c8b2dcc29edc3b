#pragma once

#include "expbias/data/panel.hpp"

#include <vector>

namespace expbias::bias {

struct PopulationStats {
  Vector mu;
  std::size_t n_samples = 0;
};

/// Every row of every entity restricted to `columns`, stacked as N x |columns|.
Matrix collect_samples(const data::PanelDataset &ds, const std::vector<std::size_t> &columns);
Matrix collect_samples(const data::PanelDataset &ds);

PopulationStats compute_population_means(const data::PanelDataset &ds, const std::vector<std::size_t> &columns);
PopulationStats compute_population_means(const data::PanelDataset &ds);

/// beta * x + (1 - beta) * mu.
Vector population_average_bias(const Vector &x, const PopulationStats &stats, double beta);

} // namespace expbias::bias
