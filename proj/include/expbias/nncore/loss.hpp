#pragma once

#include "expbias/nncore/lstm.hpp"

#include <span>
#include <vector>

namespace expbias::nn {

struct LossResult {
  double value = 0.0;
  Vector grad; // d value / d pred
};

/// Mean absolute error. The subgradient at an exact tie is 0.
LossResult mae_loss(const Vector &pred, const Vector &truth);

/// sum_i alphas[i] * |pred[i] - truth[i]|. Alphas must lie in [0,1] and sum
/// to 1 within 1e-9.
LossResult weighted_feature_loss(const Vector &pred, const Vector &truth, const Vector &alphas);

struct ReplicationLoss {
  double value = 0.0;
  std::vector<double> step_grads; // d value / d step_preds[t]
};

/// alpha * mean_{t<T} |y_t - y_T| + (1 - alpha) * |y_T - y_T_truth|, where
/// every step is scored against the final truth. For T = 1 the averaged term
/// is 0.
ReplicationLoss target_replication_loss(std::span<const double> step_preds, double final_truth, double alpha);

} // namespace expbias::nn
