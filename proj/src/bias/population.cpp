#include "expbias/bias/population.hpp"

#include "expbias/error.hpp"

#include <numeric>

namespace expbias::bias {

Matrix collect_samples(const data::PanelDataset &ds, const std::vector<std::size_t> &columns) {
  Matrix out(static_cast<Eigen::Index>(ds.total_rows()), static_cast<Eigen::Index>(columns.size()));
  Eigen::Index r = 0;
  for (const auto &e : ds.entities) {
    for (Eigen::Index t = 0; t < e.values.rows(); ++t, ++r) {
      for (std::size_t k = 0; k < columns.size(); ++k) {
        out(r, static_cast<Eigen::Index>(k)) = e.values(t, static_cast<Eigen::Index>(columns[k]));
      }
    }
  }
  return out;
}

Matrix collect_samples(const data::PanelDataset &ds) {
  std::vector<std::size_t> all(ds.n_features());
  std::iota(all.begin(), all.end(), 0);
  return collect_samples(ds, all);
}

PopulationStats compute_population_means(const data::PanelDataset &ds, const std::vector<std::size_t> &columns) {
  require(ds.total_rows() > 0, ErrorKind::InvalidInput, "population means need at least one sample");
  const Matrix samples = collect_samples(ds, columns);
  require(samples.allFinite(), ErrorKind::InvalidData, "population means need imputed data");
  PopulationStats stats;
  stats.mu = samples.colwise().mean().transpose();
  stats.n_samples = static_cast<std::size_t>(samples.rows());
  return stats;
}

PopulationStats compute_population_means(const data::PanelDataset &ds) {
  std::vector<std::size_t> all(ds.n_features());
  std::iota(all.begin(), all.end(), 0);
  return compute_population_means(ds, all);
}

Vector population_average_bias(const Vector &x, const PopulationStats &stats, double beta) {
  require(x.size() == stats.mu.size(), ErrorKind::Shape, "bias input width does not match population means");
  require(beta >= 0.0 && beta <= 1.0, ErrorKind::InvalidInput, "beta must lie in [0,1]");
  return beta * x + (1.0 - beta) * stats.mu;
}

} // namespace expbias::bias
