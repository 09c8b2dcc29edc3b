#pragma once

#include "expbias/data/panel.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace expbias::data {

/// Entity-level split: round(fraction * n) shuffled entities go to the first
/// dataset, the rest to the second. Each side keeps the original entity
/// order.
std::pair<PanelDataset, PanelDataset> train_val_split(const PanelDataset &ds, double fraction, std::uint64_t seed);

/// Next-step pairs for one entity: input k is row k, target k is row k + 1.
struct SupervisedSequence {
  std::string id;
  std::vector<Vector> inputs;
  std::vector<Vector> targets;
};

/// One sequence of length T - 1 per entity of length T. Entities shorter than
/// 2 rows are skipped.
std::vector<SupervisedSequence> to_supervised(const PanelDataset &ds);

} // namespace expbias::data
