#include "expbias/nncore/loss.hpp"

#include "expbias/error.hpp"

#include <cmath>
#include <string>

namespace expbias::nn {

namespace {

double sign_or_zero(double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); }

} // namespace

LossResult mae_loss(const Vector &pred, const Vector &truth) {
  require(pred.size() == truth.size(), ErrorKind::Shape,
          "mae_loss: prediction length " + std::to_string(pred.size()) + " vs truth length " +
              std::to_string(truth.size()));
  require(pred.size() >= 1, ErrorKind::Shape, "mae_loss: empty vectors");
  const double n = static_cast<double>(pred.size());
  LossResult out;
  out.grad.resize(pred.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sum += std::abs(d);
    out.grad[i] = sign_or_zero(d) / n;
  }
  out.value = sum / n;
  return out;
}

LossResult weighted_feature_loss(const Vector &pred, const Vector &truth, const Vector &alphas) {
  require(pred.size() == truth.size() && pred.size() == alphas.size(), ErrorKind::Shape,
          "weighted_feature_loss: prediction, truth and alphas must have equal length");
  require((alphas.array() >= 0.0).all() && (alphas.array() <= 1.0).all(), ErrorKind::InvalidConfiguration,
          "feature alphas must lie in [0,1]");
  require(std::abs(alphas.sum() - 1.0) <= 1e-9, ErrorKind::InvalidConfiguration, "feature alphas must sum to 1");
  LossResult out;
  out.grad.resize(pred.size());
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    out.value += alphas[i] * std::abs(d);
    out.grad[i] = alphas[i] * sign_or_zero(d);
  }
  return out;
}

ReplicationLoss target_replication_loss(std::span<const double> step_preds, double final_truth, double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::InvalidConfiguration, "replication alpha must lie in [0,1]");
  require(!step_preds.empty(), ErrorKind::InvalidInput, "target replication needs at least one prediction");
  const std::size_t T = step_preds.size();
  ReplicationLoss out;
  out.step_grads.assign(T, 0.0);
  if (T > 1) {
    const double w = alpha / static_cast<double>(T - 1);
    double sum = 0.0;
    for (std::size_t t = 0; t + 1 < T; ++t) {
      const double d = step_preds[t] - final_truth;
      sum += std::abs(d);
      out.step_grads[t] = w * sign_or_zero(d);
    }
    out.value += alpha * (sum / static_cast<double>(T - 1));
  }
  const double d_last = step_preds[T - 1] - final_truth;
  out.value += (1.0 - alpha) * std::abs(d_last);
  out.step_grads[T - 1] = (1.0 - alpha) * sign_or_zero(d_last);
  return out;
}

} // namespace expbias::nn
