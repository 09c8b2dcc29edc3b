#include "expbias/data/split.hpp"

#include "expbias/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace expbias::data {

std::pair<PanelDataset, PanelDataset> train_val_split(const PanelDataset &ds, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, ErrorKind::InvalidConfiguration, "split fraction must lie in (0,1)");
  const std::size_t n = ds.entities.size();
  const auto n_first = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  require(n_first >= 1 && n_first < n, ErrorKind::InvalidConfiguration,
          "split of " + std::to_string(n) + " entities at fraction " + std::to_string(fraction) +
              " leaves one side empty");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with explicit draws keeps the permutation independent of the
  // standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<bool> first(n, false);
  for (std::size_t k = 0; k < n_first; ++k) {
    first[order[k]] = true;
  }
  PanelDataset a = ds.empty_like();
  PanelDataset b = ds.empty_like();
  for (std::size_t k = 0; k < n; ++k) {
    (first[k] ? a : b).entities.push_back(ds.entities[k]);
  }
  return {std::move(a), std::move(b)};
}

std::vector<SupervisedSequence> to_supervised(const PanelDataset &ds) {
  std::vector<SupervisedSequence> out;
  for (const auto &e : ds.entities) {
    if (e.length() < 2) {
      continue;
    }
    SupervisedSequence s;
    s.id = e.id;
    for (std::size_t t = 0; t + 1 < e.length(); ++t) {
      s.inputs.push_back(e.row(t));
      s.targets.push_back(e.row(t + 1));
    }
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace expbias::data
