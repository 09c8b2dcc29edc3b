#pragma once

#include "expbias/data/synth.hpp"
#include "expbias/eval/report.hpp"
#include "expbias/models/config.hpp"

#include <cstdint>
#include <vector>

namespace expbias::cli {

/// End-to-end biased-vs-unbiased experiment on synthetic panels. Held-out
/// entities reveal their first `history_len` rows; the remaining rows are the
/// truth for a `seq_len - history_len` step forecast.
struct BenchOptions {
  data::SynthSpec synth;
  std::size_t history_len = 6;
  /// Share of entities used for training (the rest are forecast).
  double model_fraction = 0.75;
  /// Share of the model entities used for fitting; the rest validate.
  double train_fraction = 0.8;
  models::Model1Config model;
  /// Cluster count for the cluster-biased variants (0 selects by silhouette).
  std::size_t k = 3;
  /// Adds the univariate, Model 2 and cluster-interpolated variants.
  bool extended = false;
  std::uint64_t seed = 42;

  BenchOptions();
  std::size_t horizon() const { return synth.seq_len - history_len; }
  void validate() const;
};

struct BenchResult {
  std::vector<eval::HorizonReport> reports; // persistence first
  eval::Comparison comparison;
};

BenchResult run_bench(const BenchOptions &opts);

/// Deterministic child seed for a named stream of the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

} // namespace expbias::cli
