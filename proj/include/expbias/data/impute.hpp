#pragma once

#include "expbias/data/panel.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace expbias::data {

/// Carries the last observed value forward within each entity for the named
/// columns (values that are recorded once and stay valid). Leading gaps stay
/// missing.
PanelDataset forward_fill(const PanelDataset &ds, const std::vector<std::string> &columns);

/// Nearest-neighbour hot deck. Every missing cell takes the same feature's
/// value from the closest fully observed row, with distance measured on the
/// recipient's observed features. Exact distance ties are broken by a seeded
/// draw. When no row is fully observed, any row observing the feature is a
/// candidate donor.
PanelDataset hot_deck_impute(const PanelDataset &ds, std::uint64_t seed);

} // namespace expbias::data
