#include "expbias/nncore/adam.hpp"

#include "expbias/error.hpp"

#include <cmath>
#include <vector>

namespace expbias::nn {

AdamState AdamState::for_network(const StackedNetwork &net, const AdamConfig &cfg) {
  require(cfg.beta1 > 0.0 && cfg.beta1 < 1.0, ErrorKind::InvalidConfiguration, "beta1 must lie in (0,1)");
  require(cfg.beta2 > 0.0 && cfg.beta2 < 1.0, ErrorKind::InvalidConfiguration, "beta2 must lie in (0,1)");
  require(cfg.epsilon > 0.0, ErrorKind::InvalidConfiguration, "epsilon must be positive");
  AdamState s;
  s.m = net.zeros_like();
  s.v = net.zeros_like();
  s.beta1 = cfg.beta1;
  s.beta2 = cfg.beta2;
  s.epsilon = cfg.epsilon;
  return s;
}

double global_norm(const StackedNetwork &grads) {
  double sq = 0.0;
  StackedNetwork::visit(grads, [&](const std::string &, const auto &t) { sq += t.squaredNorm(); });
  return std::sqrt(sq);
}

double clip_global_norm(StackedNetwork &grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    StackedNetwork::visit(grads, [&](const std::string &, auto &t) { t *= scale; });
  }
  return norm;
}

void adam_step(StackedNetwork &net, StackedNetwork grads, AdamState &state, double lr, double clip_norm) {
  require(lr > 0.0, ErrorKind::InvalidConfiguration, "learning rate must be positive");
  StackedNetwork::visit(grads, [](const std::string &name, const auto &t) {
    require(t.allFinite(), ErrorKind::Training, "non-finite gradient in " + name);
  });
  clip_global_norm(grads, clip_norm);

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double corr1 = 1.0 - std::pow(state.beta1, t);
  const double corr2 = 1.0 - std::pow(state.beta2, t);

  // Walk the four structures in lockstep; visit order is identical for all.
  std::vector<double *> g_ptrs, m_ptrs, v_ptrs, p_ptrs;
  std::vector<Eigen::Index> sizes;
  StackedNetwork::visit(grads, [&](const std::string &, auto &x) {
    g_ptrs.push_back(x.data());
    sizes.push_back(x.size());
  });
  StackedNetwork::visit(state.m, [&](const std::string &, auto &x) { m_ptrs.push_back(x.data()); });
  StackedNetwork::visit(state.v, [&](const std::string &, auto &x) { v_ptrs.push_back(x.data()); });
  StackedNetwork::visit(net, [&](const std::string &, auto &x) { p_ptrs.push_back(x.data()); });

  for (std::size_t k = 0; k < sizes.size(); ++k) {
    for (Eigen::Index i = 0; i < sizes[k]; ++i) {
      const double g = g_ptrs[k][i];
      double &m = m_ptrs[k][i];
      double &v = v_ptrs[k][i];
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g * g;
      const double m_hat = m / corr1;
      const double v_hat = v / corr2;
      p_ptrs[k][i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

} // namespace expbias::nn
