#pragma once

#include "expbias/nncore/network.hpp"

#include <cstdint>

namespace expbias::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global L2-norm clip applied before the update; <= 0 disables clipping.
  double clip_norm = 5.0;
};

struct AdamState {
  StackedNetwork m;
  StackedNetwork v;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_network(const StackedNetwork &net, const AdamConfig &cfg = {});
};

double global_norm(const StackedNetwork &grads);

/// Rescales `grads` in place so its global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(StackedNetwork &grads, double max_norm);

/// One bias-corrected Adam update of `net`. Throws ErrorKind::Training naming
/// the first parameter tensor that holds a non-finite gradient.
void adam_step(StackedNetwork &net, StackedNetwork grads, AdamState &state, double lr, double clip_norm = 5.0);

} // namespace expbias::nn
