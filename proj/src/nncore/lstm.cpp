#include "expbias/nncore/lstm.hpp"

#include "expbias/error.hpp"

#include <string>

namespace expbias::nn {

namespace {

Vector sigmoid(const Vector &z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

Vector tanh_of(const Vector &z) { return z.array().tanh().matrix(); }

std::string dims(const Matrix &m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

} // namespace

LstmLayerParams LstmLayerParams::zeros(Eigen::Index input, Eigen::Index hidden) {
  LstmLayerParams p;
  for (Matrix *w : {&p.w_xi, &p.w_xf, &p.w_xo, &p.w_xc}) {
    *w = Matrix::Zero(hidden, input);
  }
  for (Matrix *w : {&p.w_hi, &p.w_hf, &p.w_ho, &p.w_hc}) {
    *w = Matrix::Zero(hidden, hidden);
  }
  for (Vector *b : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) {
    *b = Vector::Zero(hidden);
  }
  return p;
}

void LstmLayerParams::check_shapes() const {
  const Eigen::Index h = hidden_size();
  const Eigen::Index d = input_size();
  for (const Matrix *w : {&w_xi, &w_xf, &w_xo, &w_xc}) {
    require(w->rows() == h && w->cols() == d, ErrorKind::Shape,
            "input weight is " + dims(*w) + ", expected " + std::to_string(h) + "x" + std::to_string(d));
  }
  for (const Matrix *w : {&w_hi, &w_hf, &w_ho, &w_hc}) {
    require(w->rows() == h && w->cols() == h, ErrorKind::Shape,
            "recurrent weight is " + dims(*w) + ", expected " + std::to_string(h) + "x" + std::to_string(h));
  }
  for (const Vector *b : {&b_i, &b_f, &b_o, &b_c}) {
    require(b->size() == h, ErrorKind::Shape,
            "bias has length " + std::to_string(b->size()) + ", expected " + std::to_string(h));
  }
}

bool LstmLayerParams::all_finite() const {
  bool ok = true;
  visit(*this, [&](const char *, const auto &t) { ok = ok && t.allFinite(); });
  return ok;
}

LstmLayerState LstmLayerState::zeros(Eigen::Index hidden) {
  return LstmLayerState{Vector::Zero(hidden), Vector::Zero(hidden)};
}

std::pair<LstmLayerState, GateCache> lstm_cell_forward(const LstmLayerParams &params, const Vector &x,
                                                       const LstmLayerState &state, const CellOptions &options) {
  const Eigen::Index hidden = params.hidden_size();
  require(x.size() == params.input_size(), ErrorKind::Shape,
          "cell input has length " + std::to_string(x.size()) + ", expected " +
              std::to_string(params.input_size()));
  require(state.h.size() == hidden && state.c.size() == hidden, ErrorKind::Shape,
          "cell state length does not match hidden size " + std::to_string(hidden));

  GateCache cache;
  cache.x = x;
  cache.h_prev = state.h;
  cache.c_prev = state.c;
  cache.i = sigmoid(params.w_xi * x + params.w_hi * state.h + params.b_i);
  cache.f = sigmoid(params.w_xf * x + params.w_hf * state.h + params.b_f);
  cache.o = sigmoid(params.w_xo * x + params.w_ho * state.h + params.b_o);
  cache.c_tilde = tanh_of(params.w_xc * x + params.w_hc * state.h + params.b_c);
  cache.c = cache.f.cwiseProduct(state.c) + cache.i.cwiseProduct(cache.c_tilde);
  if (options.standard_output_gate) {
    cache.h = cache.o.cwiseProduct(tanh_of(cache.c));
  } else {
    cache.h = tanh_of(cache.o.cwiseProduct(cache.c));
  }
  LstmLayerState next{cache.h, cache.c};
  return {std::move(next), std::move(cache)};
}

void lstm_cell_backward_accumulate(const GateCache &cache, const LstmLayerParams &params, const Vector &grad_h,
                                   const Vector &grad_c, const CellOptions &options, LstmLayerParams &param_grads,
                                   Vector &grad_x, Vector &grad_h_prev, Vector &grad_c_prev) {
  const Eigen::Index hidden = params.hidden_size();
  require(cache.x.size() == params.input_size() && cache.h.size() == hidden, ErrorKind::Shape,
          "gate cache does not match layer dimensions");
  require(grad_h.size() == hidden && grad_c.size() == hidden, ErrorKind::Shape,
          "upstream gradient length does not match hidden size");

  Vector d_o(hidden);
  Vector d_c(hidden);
  if (options.standard_output_gate) {
    const Vector tc = tanh_of(cache.c);
    d_o = grad_h.cwiseProduct(tc);
    d_c = grad_c + grad_h.cwiseProduct(cache.o).cwiseProduct((1.0 - tc.array().square()).matrix());
  } else {
    const Vector d_a = grad_h.cwiseProduct((1.0 - cache.h.array().square()).matrix());
    d_o = d_a.cwiseProduct(cache.c);
    d_c = grad_c + d_a.cwiseProduct(cache.o);
  }

  const Vector d_f = d_c.cwiseProduct(cache.c_prev);
  const Vector d_i = d_c.cwiseProduct(cache.c_tilde);
  const Vector d_g = d_c.cwiseProduct(cache.i);

  const Vector dz_i = d_i.array() * cache.i.array() * (1.0 - cache.i.array());
  const Vector dz_f = d_f.array() * cache.f.array() * (1.0 - cache.f.array());
  const Vector dz_o = d_o.array() * cache.o.array() * (1.0 - cache.o.array());
  const Vector dz_c = d_g.array() * (1.0 - cache.c_tilde.array().square());

  param_grads.w_xi.noalias() += dz_i * cache.x.transpose();
  param_grads.w_xf.noalias() += dz_f * cache.x.transpose();
  param_grads.w_xo.noalias() += dz_o * cache.x.transpose();
  param_grads.w_xc.noalias() += dz_c * cache.x.transpose();
  param_grads.w_hi.noalias() += dz_i * cache.h_prev.transpose();
  param_grads.w_hf.noalias() += dz_f * cache.h_prev.transpose();
  param_grads.w_ho.noalias() += dz_o * cache.h_prev.transpose();
  param_grads.w_hc.noalias() += dz_c * cache.h_prev.transpose();
  param_grads.b_i += dz_i;
  param_grads.b_f += dz_f;
  param_grads.b_o += dz_o;
  param_grads.b_c += dz_c;

  grad_x.noalias() = params.w_xi.transpose() * dz_i;
  grad_x.noalias() += params.w_xf.transpose() * dz_f;
  grad_x.noalias() += params.w_xo.transpose() * dz_o;
  grad_x.noalias() += params.w_xc.transpose() * dz_c;
  grad_h_prev.noalias() = params.w_hi.transpose() * dz_i;
  grad_h_prev.noalias() += params.w_hf.transpose() * dz_f;
  grad_h_prev.noalias() += params.w_ho.transpose() * dz_o;
  grad_h_prev.noalias() += params.w_hc.transpose() * dz_c;
  grad_c_prev = d_c.cwiseProduct(cache.f);
}

CellGradients lstm_cell_backward(const GateCache &cache, const LstmLayerParams &params, const Vector &grad_h,
                                 const Vector &grad_c, const CellOptions &options) {
  params.check_shapes();
  CellGradients out;
  out.params = LstmLayerParams::zeros(params.input_size(), params.hidden_size());
  lstm_cell_backward_accumulate(cache, params, grad_h, grad_c, options, out.params, out.x, out.h_prev,
                                out.c_prev);
  return out;
}

} // namespace expbias::nn
