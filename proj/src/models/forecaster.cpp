#include "expbias/models/forecaster.hpp"

#include "expbias/bias/population.hpp"
#include "expbias/error.hpp"
#include "expbias/nncore/adam.hpp"
#include "expbias/nncore/loss.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

namespace expbias::models {

namespace {

struct Example {
  std::vector<Vector> inputs;
  std::vector<Vector> targets;
};

void check_schema(const data::PanelDataset &train, const data::PanelDataset &val) {
  train.validate();
  val.validate();
  require(train.feature_names == val.feature_names && train.target_index == val.target_index,
          ErrorKind::InvalidInput, "training and validation datasets have different schemas");
  require(!train.has_missing() && !val.has_missing(), ErrorKind::InvalidData,
          "training data contains missing cells; impute before training");
}

Vector gather(const Vector &row, const std::vector<std::size_t> &idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = row[static_cast<Eigen::Index>(idx[k])];
  }
  return out;
}

Vector concat(const Vector &a, const Vector &b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

Vector scalar(double v) {
  Vector out(1);
  out[0] = v;
  return out;
}

Eigen::Index target_output(const TrainedForecaster &m) {
  return m.architecture == Architecture::Model2 ? static_cast<Eigen::Index>(m.target_index) : 0;
}

// Network input for an observed (transformed) row.
Vector observed_input(const TrainedForecaster &m, const Vector &row, const Vector &bias) {
  if (m.architecture == Architecture::Model2) {
    return m.concat_bias ? concat(row, bias) : row;
  }
  return concat(gather(row, m.bias_columns), scalar(row[static_cast<Eigen::Index>(m.target_index)]));
}

// Training / warm-up bias for window position p (0-based), anchored at the
// window's first row.
Vector window_bias(const TrainedForecaster &m, const Matrix &rows, Eigen::Index first, Eigen::Index p) {
  if (!m.concat_bias) {
    return Vector();
  }
  const Vector anchor = gather(rows.row(first).transpose(), m.bias_columns);
  return bias::make_bias_inputs(m.bias, anchor, static_cast<std::int64_t>(p + 1));
}

std::vector<Example> build_examples(const TrainedForecaster &m, const data::PanelDataset &transformed) {
  std::vector<Example> out;
  for (const auto &e : transformed.entities) {
    if (e.length() < 2) {
      continue;
    }
    Example ex;
    const auto T = static_cast<Eigen::Index>(e.length());
    for (Eigen::Index t = 0; t + 1 < T; ++t) {
      const Vector row = e.values.row(t).transpose();
      ex.inputs.push_back(observed_input(m, row, window_bias(m, e.values, 0, t)));
      const Vector next = e.values.row(t + 1).transpose();
      if (m.architecture == Architecture::Model2) {
        ex.targets.push_back(next);
      } else {
        ex.targets.push_back(scalar(next[static_cast<Eigen::Index>(m.target_index)]));
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

data::PanelDataset transformed_view(const TrainedForecaster &m, const data::PanelDataset &ds) {
  require(ds.feature_names == m.source_features, ErrorKind::InvalidInput,
          "dataset columns do not match the columns the model was trained on");
  require(!ds.has_missing(), ErrorKind::InvalidData, "dataset contains missing cells; impute first");
  return data::transform_apply(m.transform, data::select_columns(ds, m.columns));
}

double pooled_target_mae(const TrainedForecaster &m, const nn::StackedNetwork &net,
                         const std::vector<Example> &examples) {
  const Eigen::Index out_idx = target_output(m);
  const Eigen::Index truth_idx = m.architecture == Architecture::Model2 ? static_cast<Eigen::Index>(m.target_index) : 0;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto &ex : examples) {
    const auto fwd = nn::network_forward(net, ex.inputs);
    for (std::size_t t = 0; t < ex.targets.size(); ++t) {
      sum += std::abs(fwd.outputs[t][out_idx] - ex.targets[t][truth_idx]);
      ++n;
    }
  }
  return n == 0 ? std::nan("") : sum / static_cast<double>(n);
}

// Shared setup: column selection, transform fit, entity filtering, bias fit.
struct Prepared {
  TrainedForecaster model;
  data::PanelDataset train;
  data::PanelDataset val;
};

Prepared prepare(const data::PanelDataset &train_raw, const data::PanelDataset &val_raw, Architecture arch,
                 const CommonConfig &cfg) {
  check_schema(train_raw, val_raw);
  Prepared p;
  TrainedForecaster &m = p.model;
  m.architecture = arch;
  m.source_features = train_raw.feature_names;
  m.warmup = cfg.warmup;
  if (arch == Architecture::Univariate) {
    m.columns = {train_raw.target_index};
  } else {
    m.columns.resize(train_raw.n_features());
    std::iota(m.columns.begin(), m.columns.end(), 0);
  }
  const data::PanelDataset sel_train = data::select_columns(train_raw, m.columns);
  const data::PanelDataset sel_val = data::select_columns(val_raw, m.columns);
  m.target_index = sel_train.target_index;

  std::vector<bool> diff(sel_train.n_features(), cfg.difference);
  if (cfg.standardize) {
    m.transform = data::fit_transform(sel_train, diff);
  } else {
    m.transform = data::FeatureTransform::identity(sel_train.n_features());
    m.transform.differenced = diff;
    m.transform.fitted_on = data::content_hash(sel_train);
  }

  auto keep_long = [&](const data::PanelDataset &ds, bool warn) {
    data::PanelDataset out = ds.empty_like();
    for (const auto &e : ds.entities) {
      if (e.length() >= 2) {
        out.entities.push_back(e);
      } else if (warn) {
        const std::string msg = "entity '" + e.id + "' has fewer than 2 usable observations; skipped";
        std::cerr << "warning: " << msg << '\n';
        m.log.warnings.push_back(msg);
      }
    }
    return out;
  };
  p.train = keep_long(data::transform_apply(m.transform, sel_train), true);
  p.val = keep_long(data::transform_apply(m.transform, sel_val), false);
  require(!p.train.entities.empty(), ErrorKind::InvalidInput, "no training entity has at least 2 observations");

  if (arch == Architecture::Model2) {
    m.bias_columns.resize(p.train.n_features());
    std::iota(m.bias_columns.begin(), m.bias_columns.end(), 0);
  } else {
    m.bias_columns = p.train.predictor_indices();
  }

  bias::BiasFitOptions bias_opts = cfg.bias;
  if (m.bias_columns.empty()) {
    bias_opts.mode = bias::BiasMode::Hold;
  }
  m.bias = bias::fit_bias(bias::collect_samples(p.train, m.bias_columns), bias_opts);
  m.concat_bias = arch == Architecture::Model2 && !m.bias.is_hold();
  return p;
}

data::PanelDataset drop_short(data::PanelDataset ds) {
  std::erase_if(ds.entities, [](const data::Entity &e) { return e.length() < 2; });
  return ds;
}

template <typename LossFn>
void fit_network(TrainedForecaster &m, const std::vector<Example> &train, const std::vector<Example> &val,
                 const CommonConfig &cfg, Eigen::Index input_dim, Eigen::Index output_dim, LossFn &&loss_fn) {
  nn::CellOptions cell;
  cell.standard_output_gate = cfg.standard_output_gate;
  m.network = nn::init_params(nn::uniform_stack(input_dim, cfg.hidden, cfg.layers), output_dim, cfg.seed, cell);
  nn::AdamState adam = nn::AdamState::for_network(m.network);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  nn::StackedNetwork best = m.network;
  double best_val = std::numeric_limits<double>::infinity();
  m.log.best_epoch = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const Example &ex = train[idx];
      auto fwd = nn::network_forward(m.network, ex.inputs);
      std::vector<Vector> grads;
      epoch_loss += loss_fn(fwd.outputs, ex.targets, grads);
      nn::adam_step(m.network, nn::network_backward(m.network, fwd.cache, grads), adam, cfg.lr, cfg.clip_norm);
    }
    m.log.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));
    if (!val.empty()) {
      const double v = pooled_target_mae(m, m.network, val);
      m.log.val_mae.push_back(v);
      if (v < best_val) {
        best_val = v;
        best = m.network;
        m.log.best_epoch = epoch;
      }
    }
  }
  if (!val.empty() && m.log.best_epoch > 0) {
    m.network = std::move(best);
  } else {
    m.log.best_epoch = cfg.epochs;
  }
  require(m.network.all_finite(), ErrorKind::Training, "training produced non-finite parameters");
}

struct Rollout {
  std::vector<double> target; // transformed units
};

Rollout rollout(const TrainedForecaster &m, const Matrix &rows, std::size_t horizon) {
  require(rows.rows() >= 1, ErrorKind::InvalidInput, "history is too short to forecast from");
  const Eigen::Index last = rows.rows() - 1;
  const Eigen::Index first = m.warmup == WarmUp::FullHistory ? 0 : last;

  nn::NetworkRunner runner(m.network);
  Vector out;
  for (Eigen::Index t = first; t <= last; ++t) {
    out = runner.step(observed_input(m, rows.row(t).transpose(), window_bias(m, rows, first, t - first)));
  }
  const Eigen::Index out_idx = target_output(m);
  const Vector anchor = gather(rows.row(last).transpose(), m.bias_columns);

  Rollout r;
  r.target.push_back(out[out_idx]);
  for (std::size_t h = 2; h <= horizon; ++h) {
    const auto step = static_cast<std::int64_t>(h - 1);
    if (m.architecture == Architecture::Model2) {
      const Vector input = m.concat_bias ? concat(out, bias::make_bias_inputs(m.bias, anchor, step)) : out;
      out = runner.step(input);
    } else {
      out = runner.step(concat(bias::make_bias_inputs(m.bias, anchor, step), scalar(r.target.back())));
    }
    r.target.push_back(out[out_idx]);
  }
  return r;
}

ForecastResult forecast_impl(const TrainedForecaster &m, const data::Entity &history, std::size_t horizon) {
  require(horizon >= 1, ErrorKind::InvalidInput, "horizon must be >= 1");
  require(history.length() >= 1, ErrorKind::InvalidInput, "history of entity '" + history.id + "' is empty");
  data::PanelDataset ds;
  ds.feature_names = m.source_features;
  ds.target_index = m.source_target();
  ds.entities.push_back(history);
  const data::PanelDataset t = transformed_view(m, ds);
  require(!t.entities.empty() && t.entities.front().length() >= 1, ErrorKind::InvalidInput,
          "history of entity '" + history.id + "' is too short for the model's transforms");

  const Rollout r = rollout(m, t.entities.front().values, horizon);
  ForecastResult res;
  res.entity_id = history.id;
  res.origin_time = history.times.back();
  res.values.reserve(horizon);
  for (double v : r.target) {
    res.values.push_back(data::unscale_value(m.transform, m.target_index, v));
  }
  if (m.transform.differenced[m.target_index]) {
    const double level = history.values(static_cast<Eigen::Index>(history.length() - 1),
                                        static_cast<Eigen::Index>(m.source_target()));
    res.values = data::difference_invert(level, res.values);
  }
  return res;
}

} // namespace

TrainedForecaster train_model1(const data::PanelDataset &train, const data::PanelDataset &val,
                               const Model1Config &cfg) {
  cfg.validate();
  Prepared p = prepare(train, val, cfg.univariate ? Architecture::Univariate : Architecture::Model1, cfg);
  TrainedForecaster &m = p.model;
  m.config = config_to_json(cfg);
  const auto train_ex = build_examples(m, p.train);
  const auto val_ex = build_examples(m, p.val);
  const auto input_dim = static_cast<Eigen::Index>(m.bias_columns.size() + 1);

  auto loss = [&](const std::vector<Vector> &outputs, const std::vector<Vector> &targets,
                  std::vector<Vector> &grads) {
    const std::size_t T = outputs.size();
    grads.assign(T, Vector::Zero(1));
    if (cfg.target_replication_alpha) {
      std::vector<double> preds(T);
      for (std::size_t t = 0; t < T; ++t) {
        preds[t] = outputs[t][0];
      }
      const auto r = nn::target_replication_loss(preds, targets.back()[0], *cfg.target_replication_alpha);
      for (std::size_t t = 0; t < T; ++t) {
        grads[t][0] = r.step_grads[t];
      }
      return r.value;
    }
    double total = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto l = nn::mae_loss(outputs[t], targets[t]);
      total += l.value;
      grads[t] = l.grad / static_cast<double>(T);
    }
    return total / static_cast<double>(T);
  };
  fit_network(m, train_ex, val_ex, cfg, input_dim, 1, loss);
  return std::move(p.model);
}

TrainedForecaster train_model2(const data::PanelDataset &train, const data::PanelDataset &val,
                               const Model2Config &cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(train.n_features());
  require(cfg.feature_alphas.size() == 0 || cfg.feature_alphas.size() == n, ErrorKind::InvalidConfiguration,
          "feature alphas need one weight per feature (" + std::to_string(n) + ")");
  const Vector alphas = cfg.feature_alphas.size() == 0 ? Vector::Constant(n, 1.0 / static_cast<double>(n))
                                                       : cfg.feature_alphas;
  Prepared p = prepare(train, val, Architecture::Model2, cfg);
  TrainedForecaster &m = p.model;
  m.config = config_to_json(cfg);
  m.config["feature_alphas"] = std::vector<double>(alphas.data(), alphas.data() + alphas.size());
  const auto train_ex = build_examples(m, p.train);
  const auto val_ex = build_examples(m, p.val);
  const Eigen::Index input_dim = m.concat_bias ? 2 * n : n;
  const auto target = static_cast<Eigen::Index>(m.target_index);

  auto loss = [&](const std::vector<Vector> &outputs, const std::vector<Vector> &targets,
                  std::vector<Vector> &grads) {
    const std::size_t T = outputs.size();
    grads.resize(T);
    double total = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto feat = nn::weighted_feature_loss(outputs[t], targets[t], alphas);
      const auto tgt = nn::mae_loss(scalar(outputs[t][target]), scalar(targets[t][target]));
      total += cfg.outer_alpha * feat.value + (1.0 - cfg.outer_alpha) * tgt.value;
      Vector g = cfg.outer_alpha * feat.grad;
      g[target] += (1.0 - cfg.outer_alpha) * tgt.grad[0];
      grads[t] = g / static_cast<double>(T);
    }
    return total / static_cast<double>(T);
  };
  fit_network(m, train_ex, val_ex, cfg, input_dim, n, loss);
  return std::move(p.model);
}

TrainedForecaster with_bias(TrainedForecaster model, const data::PanelDataset &train,
                            const bias::BiasFitOptions &opts) {
  require(model.architecture != Architecture::Model2, ErrorKind::InvalidInput,
          "a Model 2 network is trained with its bias inputs and cannot swap bias");
  bias::BiasFitOptions o = opts;
  if (model.bias_columns.empty()) {
    o.mode = bias::BiasMode::Hold;
  }
  const data::PanelDataset t = drop_short(transformed_view(model, train));
  require(!t.entities.empty(), ErrorKind::InvalidInput, "no training entity has at least 2 observations");
  model.bias = bias::fit_bias(bias::collect_samples(t, model.bias_columns), o);
  model.config["bias"] = bias::to_string(o.mode);
  model.config["schedule"] = o.schedule.describe();
  model.config["k"] = o.k;
  model.config["k_candidates"] = o.k_candidates;
  return model;
}

ForecastResult forecast_model1(const TrainedForecaster &model, const data::Entity &history, std::size_t horizon) {
  require(model.architecture != Architecture::Model2, ErrorKind::InvalidInput,
          "forecast_model1 called with a Model 2 forecaster");
  return forecast_impl(model, history, horizon);
}

ForecastResult forecast_model2(const TrainedForecaster &model, const data::Entity &history, std::size_t horizon) {
  require(model.architecture == Architecture::Model2, ErrorKind::InvalidInput,
          "forecast_model2 called with a single-output forecaster");
  return forecast_impl(model, history, horizon);
}

ForecastResult forecast(const TrainedForecaster &model, const data::Entity &history, std::size_t horizon) {
  return forecast_impl(model, history, horizon);
}

ForecastResult forecast_persistence(const data::Entity &history, std::size_t target_index, std::size_t horizon) {
  require(history.length() >= 1, ErrorKind::InvalidInput, "history of entity '" + history.id + "' is empty");
  require(horizon >= 1, ErrorKind::InvalidInput, "horizon must be >= 1");
  require(target_index < static_cast<std::size_t>(history.values.cols()), ErrorKind::InvalidInput,
          "target index out of range");
  const auto col = static_cast<Eigen::Index>(target_index);
  // Last observed (non-missing) target value.
  for (Eigen::Index t = history.values.rows(); t-- > 0;) {
    if (!std::isnan(history.values(t, col))) {
      ForecastResult res;
      res.entity_id = history.id;
      res.origin_time = history.times.back();
      res.values.assign(horizon, history.values(t, col));
      return res;
    }
  }
  raise(ErrorKind::InvalidInput, "entity '" + history.id + "' has no observed target value");
}

double teacher_forced_mae(const TrainedForecaster &model, const data::PanelDataset &ds) {
  return pooled_target_mae(model, model.network, build_examples(model, transformed_view(model, ds)));
}

nlohmann::json model_to_json(const TrainedForecaster &m) {
  return {{"format", "expbias-model"},
          {"version", 1},
          {"architecture", to_string(m.architecture)},
          {"source_features", m.source_features},
          {"columns", m.columns},
          {"target_index", m.target_index},
          {"bias_columns", m.bias_columns},
          {"concat_bias", m.concat_bias},
          {"target_fn", "select"},
          {"warmup", to_string(m.warmup)},
          {"config", m.config},
          {"transform", data::transform_to_json(m.transform)},
          {"bias", bias::bias_to_json(m.bias)},
          {"network", nn::network_to_json(m.network)},
          {"training",
           {{"train_loss", m.log.train_loss}, {"val_mae", m.log.val_mae}, {"best_epoch", m.log.best_epoch}}}};
}

TrainedForecaster model_from_json(const nlohmann::json &doc) {
  try {
    require(doc.at("format").get<std::string>() == "expbias-model" && doc.at("version").get<int>() == 1,
            ErrorKind::Format, "not an expbias model document (version 1)");
    TrainedForecaster m;
    m.architecture = parse_architecture(doc.at("architecture").get<std::string>());
    m.source_features = doc.at("source_features").get<std::vector<std::string>>();
    m.columns = doc.at("columns").get<std::vector<std::size_t>>();
    m.target_index = doc.at("target_index").get<std::size_t>();
    m.bias_columns = doc.at("bias_columns").get<std::vector<std::size_t>>();
    m.concat_bias = doc.at("concat_bias").get<bool>();
    require(doc.at("target_fn").get<std::string>() == "select", ErrorKind::Format, "unknown target_fn");
    m.warmup = parse_warmup(doc.at("warmup").get<std::string>());
    m.config = doc.at("config");
    m.transform = data::transform_from_json(doc.at("transform"));
    m.bias = bias::bias_from_json(doc.at("bias"));
    m.network = nn::network_from_json(doc.at("network"));
    const auto &tr = doc.at("training");
    m.log.train_loss = tr.at("train_loss").get<std::vector<double>>();
    m.log.val_mae = tr.at("val_mae").get<std::vector<double>>();
    m.log.best_epoch = tr.at("best_epoch").get<int>();

    require(m.target_index < m.columns.size(), ErrorKind::Format, "target index out of range");
    for (auto c : m.columns) {
      require(c < m.source_features.size(), ErrorKind::Format, "column index out of range");
    }
    require(m.transform.n_features() == m.columns.size(), ErrorKind::Format,
            "transform width does not match model columns");
    const auto expected_input =
        m.architecture == Architecture::Model2
            ? static_cast<Eigen::Index>(m.columns.size() * (m.concat_bias ? 2 : 1))
            : static_cast<Eigen::Index>(m.bias_columns.size() + 1);
    require(m.network.input_size() == expected_input, ErrorKind::Format,
            "network input width does not match model layout");
    return m;
  } catch (const nlohmann::json::exception &e) {
    raise(ErrorKind::Format, std::string("malformed model document: ") + e.what());
  }
}

void save_model(const std::filesystem::path &path, const TrainedForecaster &model) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << model_to_json(model).dump(1) << '\n';
  require(out.good(), ErrorKind::Io, "failed writing '" + path.string() + "'");
}

TrainedForecaster load_model(const std::filesystem::path &path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception &e) {
    raise(ErrorKind::Format, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

} // namespace expbias::models
