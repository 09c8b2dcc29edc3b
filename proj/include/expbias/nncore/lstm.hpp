#pragma once

#include "expbias/linalg.hpp"

namespace expbias::nn {

using expbias::Matrix;
using expbias::Vector;

/// Weights of one LSTM layer. Input weights are hidden x input, recurrent
/// weights hidden x hidden, biases have length hidden.
struct LstmLayerParams {
  Matrix w_xi, w_xf, w_xo, w_xc;
  Matrix w_hi, w_hf, w_ho, w_hc;
  Vector b_i, b_f, b_o, b_c;

  static LstmLayerParams zeros(Eigen::Index input, Eigen::Index hidden);

  Eigen::Index input_size() const { return w_xi.cols(); }
  Eigen::Index hidden_size() const { return w_xi.rows(); }

  /// Throws a shape error when the twelve tensors disagree on dimensions.
  void check_shapes() const;
  bool all_finite() const;

  /// Visits (name, tensor) for every tensor in a fixed order.
  template <typename Self, typename F> static void visit(Self &self, F &&fn) {
    fn("w_xi", self.w_xi);
    fn("w_xf", self.w_xf);
    fn("w_xo", self.w_xo);
    fn("w_xc", self.w_xc);
    fn("w_hi", self.w_hi);
    fn("w_hf", self.w_hf);
    fn("w_ho", self.w_ho);
    fn("w_hc", self.w_hc);
    fn("b_i", self.b_i);
    fn("b_f", self.b_f);
    fn("b_o", self.b_o);
    fn("b_c", self.b_c);
  }
};

struct LstmLayerState {
  Vector h;
  Vector c;

  static LstmLayerState zeros(Eigen::Index hidden);
};

/// Activations of one forward step kept for the backward pass.
struct GateCache {
  Vector x;
  Vector h_prev, c_prev;
  Vector i, f, o, c_tilde;
  Vector c, h;
};

struct CellOptions {
  /// false: h = tanh(o * c), literal form. true: conventional h = o * tanh(c).
  bool standard_output_gate = false;
};

struct CellGradients {
  LstmLayerParams params;
  Vector x;
  Vector h_prev;
  Vector c_prev;
};

std::pair<LstmLayerState, GateCache> lstm_cell_forward(const LstmLayerParams &params, const Vector &x,
                                                       const LstmLayerState &state,
                                                       const CellOptions &options = {});

/// Reverse-mode derivative of one cell step. grad_h and grad_c are the
/// upstream gradients flowing into h_t and c_t.
CellGradients lstm_cell_backward(const GateCache &cache, const LstmLayerParams &params, const Vector &grad_h,
                                 const Vector &grad_c, const CellOptions &options = {});

/// Same as lstm_cell_backward but accumulates parameter gradients into
/// `param_grads` instead of allocating a fresh set.
void lstm_cell_backward_accumulate(const GateCache &cache, const LstmLayerParams &params, const Vector &grad_h,
                                   const Vector &grad_c, const CellOptions &options, LstmLayerParams &param_grads,
                                   Vector &grad_x, Vector &grad_h_prev, Vector &grad_c_prev);

} // namespace expbias::nn
