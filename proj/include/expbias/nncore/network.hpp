#pragma once

#include "expbias/nncore/lstm.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace expbias::nn {

struct LayerDims {
  Eigen::Index input = 0;
  Eigen::Index hidden = 0;
};

/// Stacked LSTM layers followed by a linear projection of the top hidden
/// state. The same type also holds gradients and Adam moments.
struct StackedNetwork {
  std::vector<LstmLayerParams> layers;
  Matrix w_out; // outputs x top hidden
  Vector b_out;
  CellOptions cell;

  Eigen::Index input_size() const { return layers.front().input_size(); }
  Eigen::Index output_size() const { return w_out.rows(); }
  std::vector<LayerDims> layer_dims() const;

  void check_shapes() const;
  bool all_finite() const;
  std::size_t parameter_count() const;

  /// Same shapes and cell options, every tensor zero.
  StackedNetwork zeros_like() const;

  /// Visits every tensor as (qualified name, tensor) in a fixed order:
  /// layer0.w_xi ... layer0.b_c, layer1..., projection.w, projection.b.
  template <typename Self, typename F> static void visit(Self &self, F &&fn) {
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      const std::string prefix = "layer" + std::to_string(l) + ".";
      LstmLayerParams::visit(self.layers[l], [&](const char *name, auto &t) { fn(prefix + name, t); });
    }
    fn(std::string("projection.w"), self.w_out);
    fn(std::string("projection.b"), self.b_out);
  }
};

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases except the
/// forget gate bias which starts at 1. Deterministic in `seed`.
StackedNetwork init_params(const std::vector<LayerDims> &layer_dims, Eigen::Index output_dim, std::uint64_t seed,
                           CellOptions cell = {});

/// All-zero network of the given shape.
StackedNetwork zero_network(const std::vector<LayerDims> &layer_dims, Eigen::Index output_dim,
                            CellOptions cell = {});

/// Convenience: `layers` layers of `hidden` units on `input` features.
std::vector<LayerDims> uniform_stack(Eigen::Index input, Eigen::Index hidden, int layers);

struct NetworkCache {
  std::vector<std::vector<GateCache>> layers; // [layer][timestep]
  std::size_t length() const { return layers.empty() ? 0 : layers.front().size(); }
};

struct ForwardResult {
  std::vector<Vector> outputs;
  NetworkCache cache;
};

/// Runs a sequence from zero initial state.
ForwardResult network_forward(const StackedNetwork &net, std::span<const Vector> sequence);

/// BPTT through every layer and timestep. Returns gradients shaped like `net`.
StackedNetwork network_backward(const StackedNetwork &net, const NetworkCache &cache,
                                std::span<const Vector> output_grads);

/// Stateful single-step runner used during forecasting rollouts.
class NetworkRunner {
public:
  explicit NetworkRunner(const StackedNetwork &net);

  Vector step(const Vector &x);
  void reset();

private:
  const StackedNetwork *net_;
  std::vector<LstmLayerState> states_;
};

nlohmann::json network_to_json(const StackedNetwork &net);
StackedNetwork network_from_json(const nlohmann::json &doc);

} // namespace expbias::nn
