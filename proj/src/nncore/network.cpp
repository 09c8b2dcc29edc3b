#include "expbias/nncore/network.hpp"

#include "expbias/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>

namespace expbias::nn {

namespace {

void fill_uniform(Matrix &m, double scale, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      m(r, c) = dist(rng);
    }
  }
}

void check_dims(const std::vector<LayerDims> &layer_dims, Eigen::Index output_dim) {
  require(!layer_dims.empty(), ErrorKind::InvalidConfiguration, "network needs at least one layer");
  require(output_dim >= 1, ErrorKind::InvalidConfiguration, "output dimension must be >= 1");
  for (std::size_t l = 0; l < layer_dims.size(); ++l) {
    require(layer_dims[l].input >= 1 && layer_dims[l].hidden >= 1, ErrorKind::InvalidConfiguration,
            "layer " + std::to_string(l) + " has a non-positive dimension");
    if (l > 0) {
      require(layer_dims[l].input == layer_dims[l - 1].hidden, ErrorKind::InvalidConfiguration,
              "layer " + std::to_string(l) + " input size must equal layer " + std::to_string(l - 1) +
                  " hidden size");
    }
  }
}

} // namespace

std::vector<LayerDims> StackedNetwork::layer_dims() const {
  std::vector<LayerDims> dims;
  dims.reserve(layers.size());
  for (const auto &layer : layers) {
    dims.push_back({layer.input_size(), layer.hidden_size()});
  }
  return dims;
}

void StackedNetwork::check_shapes() const {
  require(!layers.empty(), ErrorKind::Shape, "network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].check_shapes();
    if (l > 0) {
      require(layers[l].input_size() == layers[l - 1].hidden_size(), ErrorKind::Shape,
              "layer " + std::to_string(l) + " input does not match previous hidden size");
    }
  }
  require(w_out.cols() == layers.back().hidden_size(), ErrorKind::Shape,
          "projection input does not match top hidden size");
  require(b_out.size() == w_out.rows(), ErrorKind::Shape, "projection bias length mismatch");
}

bool StackedNetwork::all_finite() const {
  bool ok = true;
  visit(*this, [&](const std::string &, const auto &t) { ok = ok && t.allFinite(); });
  return ok;
}

std::size_t StackedNetwork::parameter_count() const {
  std::size_t n = 0;
  visit(*this, [&](const std::string &, const auto &t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

StackedNetwork StackedNetwork::zeros_like() const {
  StackedNetwork z = *this;
  visit(z, [](const std::string &, auto &t) { t.setZero(); });
  return z;
}

StackedNetwork zero_network(const std::vector<LayerDims> &layer_dims, Eigen::Index output_dim, CellOptions cell) {
  check_dims(layer_dims, output_dim);
  StackedNetwork net;
  net.cell = cell;
  for (const auto &d : layer_dims) {
    net.layers.push_back(LstmLayerParams::zeros(d.input, d.hidden));
  }
  net.w_out = Matrix::Zero(output_dim, layer_dims.back().hidden);
  net.b_out = Vector::Zero(output_dim);
  return net;
}

StackedNetwork init_params(const std::vector<LayerDims> &layer_dims, Eigen::Index output_dim, std::uint64_t seed,
                           CellOptions cell) {
  StackedNetwork net = zero_network(layer_dims, output_dim, cell);
  std::mt19937_64 rng(seed);
  for (auto &layer : net.layers) {
    const double sx = 1.0 / std::sqrt(static_cast<double>(layer.input_size()));
    const double sh = 1.0 / std::sqrt(static_cast<double>(layer.hidden_size()));
    for (Matrix *w : {&layer.w_xi, &layer.w_xf, &layer.w_xo, &layer.w_xc}) {
      fill_uniform(*w, sx, rng);
    }
    for (Matrix *w : {&layer.w_hi, &layer.w_hf, &layer.w_ho, &layer.w_hc}) {
      fill_uniform(*w, sh, rng);
    }
    layer.b_f.setOnes();
  }
  fill_uniform(net.w_out, 1.0 / std::sqrt(static_cast<double>(net.w_out.cols())), rng);
  return net;
}

std::vector<LayerDims> uniform_stack(Eigen::Index input, Eigen::Index hidden, int layers) {
  std::vector<LayerDims> dims;
  for (int l = 0; l < layers; ++l) {
    dims.push_back({l == 0 ? input : hidden, hidden});
  }
  return dims;
}

ForwardResult network_forward(const StackedNetwork &net, std::span<const Vector> sequence) {
  require(!sequence.empty(), ErrorKind::InvalidInput, "network_forward needs a non-empty sequence");
  net.check_shapes();

  ForwardResult result;
  result.cache.layers.resize(net.layers.size());
  std::vector<LstmLayerState> states;
  for (const auto &layer : net.layers) {
    states.push_back(LstmLayerState::zeros(layer.hidden_size()));
  }
  for (auto &per_layer : result.cache.layers) {
    per_layer.reserve(sequence.size());
  }
  result.outputs.reserve(sequence.size());

  for (const Vector &x : sequence) {
    const Vector *input = &x;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto [next, cache] = lstm_cell_forward(net.layers[l], *input, states[l], net.cell);
      states[l] = std::move(next);
      result.cache.layers[l].push_back(std::move(cache));
      input = &result.cache.layers[l].back().h;
    }
    result.outputs.push_back(net.w_out * *input + net.b_out);
  }
  return result;
}

StackedNetwork network_backward(const StackedNetwork &net, const NetworkCache &cache,
                                std::span<const Vector> output_grads) {
  require(cache.layers.size() == net.layers.size(), ErrorKind::Shape, "cache layer count does not match network");
  const std::size_t steps = cache.length();
  require(output_grads.size() == steps, ErrorKind::Shape,
          "got " + std::to_string(output_grads.size()) + " output gradients for " + std::to_string(steps) +
              " cached steps");

  StackedNetwork grads = net.zeros_like();
  const std::size_t n_layers = net.layers.size();

  // Gradient w.r.t. each layer's h stream, filled top-down per layer.
  std::vector<Vector> dh_stream(steps);
  const auto &top = cache.layers.back();
  for (std::size_t t = 0; t < steps; ++t) {
    require(output_grads[t].size() == net.output_size(), ErrorKind::Shape, "output gradient length mismatch");
    grads.w_out.noalias() += output_grads[t] * top[t].h.transpose();
    grads.b_out += output_grads[t];
    dh_stream[t] = net.w_out.transpose() * output_grads[t];
  }

  Vector grad_x, grad_h_prev, grad_c_prev;
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto &layer = net.layers[l];
    const auto &steps_cache = cache.layers[l];
    Vector dh_next = Vector::Zero(layer.hidden_size());
    Vector dc_next = Vector::Zero(layer.hidden_size());
    std::vector<Vector> dx_stream(steps);
    for (std::size_t t = steps; t-- > 0;) {
      const Vector dh = dh_stream[t] + dh_next;
      lstm_cell_backward_accumulate(steps_cache[t], layer, dh, dc_next, net.cell, grads.layers[l], grad_x,
                                    grad_h_prev, grad_c_prev);
      dh_next = grad_h_prev;
      dc_next = grad_c_prev;
      dx_stream[t] = grad_x;
    }
    dh_stream = std::move(dx_stream);
  }
  return grads;
}

NetworkRunner::NetworkRunner(const StackedNetwork &net) : net_(&net) {
  net.check_shapes();
  reset();
}

void NetworkRunner::reset() {
  states_.clear();
  for (const auto &layer : net_->layers) {
    states_.push_back(LstmLayerState::zeros(layer.hidden_size()));
  }
}

Vector NetworkRunner::step(const Vector &x) {
  Vector input = x;
  for (std::size_t l = 0; l < net_->layers.size(); ++l) {
    auto [next, cache] = lstm_cell_forward(net_->layers[l], input, states_[l], net_->cell);
    states_[l] = std::move(next);
    input = states_[l].h;
  }
  return net_->w_out * input + net_->b_out;
}

namespace {

nlohmann::json tensor_to_json(const Matrix &m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      flat.push_back(m(r, c));
    }
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

nlohmann::json tensor_to_json(const Vector &v) {
  return {{"rows", v.size()}, {"cols", 1}, {"data", std::vector<double>(v.data(), v.data() + v.size())}};
}

template <typename T> void tensor_from_json(const nlohmann::json &j, T &out, const std::string &name) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  require(rows == out.rows() && cols == out.cols() && static_cast<Eigen::Index>(data.size()) == rows * cols,
          ErrorKind::Format, "tensor " + name + " has inconsistent shape in model document");
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      out(r, c) = data[static_cast<std::size_t>(r * cols + c)];
    }
  }
}

} // namespace

nlohmann::json network_to_json(const StackedNetwork &net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto &d : net.layer_dims()) {
    layers.push_back({{"input", d.input}, {"hidden", d.hidden}});
  }
  nlohmann::json tensors = nlohmann::json::object();
  StackedNetwork::visit(net, [&](const std::string &name, const auto &t) { tensors[name] = tensor_to_json(t); });
  return {{"layers", layers},
          {"outputs", net.output_size()},
          {"standard_output_gate", net.cell.standard_output_gate},
          {"layout", "row-major"},
          {"tensors", tensors}};
}

StackedNetwork network_from_json(const nlohmann::json &doc) {
  try {
    std::vector<LayerDims> dims;
    for (const auto &l : doc.at("layers")) {
      dims.push_back({l.at("input").get<Eigen::Index>(), l.at("hidden").get<Eigen::Index>()});
    }
    CellOptions cell;
    cell.standard_output_gate = doc.at("standard_output_gate").get<bool>();
    StackedNetwork net = zero_network(dims, doc.at("outputs").get<Eigen::Index>(), cell);
    const auto &tensors = doc.at("tensors");
    StackedNetwork::visit(net, [&](const std::string &name, auto &t) { tensor_from_json(tensors.at(name), t, name); });
    return net;
  } catch (const nlohmann::json::exception &e) {
    raise(ErrorKind::Format, std::string("malformed network document: ") + e.what());
  }
}

} // namespace expbias::nn
