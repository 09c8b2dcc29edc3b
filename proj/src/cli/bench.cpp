#include "expbias/cli/bench.hpp"

#include "expbias/data/split.hpp"
#include "expbias/error.hpp"
#include "expbias/models/forecaster.hpp"

namespace expbias::cli {

BenchOptions::BenchOptions() = default;

void BenchOptions::validate() const {
  synth.validate();
  require(history_len >= 1 && history_len < synth.seq_len, ErrorKind::InvalidConfiguration,
          "bench history length must lie in [1, seq_len)");
  require(model_fraction > 0.0 && model_fraction < 1.0 && train_fraction > 0.0 && train_fraction < 1.0,
          ErrorKind::InvalidConfiguration, "bench split fractions must lie in (0,1)");
  model.validate();
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::vector<models::ForecastResult> forecast_all(const data::PanelDataset &history, std::size_t horizon,
                                                 const models::TrainedForecaster *model) {
  std::vector<models::ForecastResult> out;
  out.reserve(history.entities.size());
  for (const auto &e : history.entities) {
    out.push_back(model ? models::forecast(*model, e, horizon)
                        : models::forecast_persistence(e, history.target_index, horizon));
  }
  return out;
}

bias::BiasFitOptions bias_options(bias::BiasMode mode, const BenchOptions &opts, bias::BetaSchedule schedule) {
  bias::BiasFitOptions b = opts.model.bias;
  b.mode = mode;
  b.k = opts.k;
  b.schedule = schedule;
  b.seed = derive_seed(opts.seed, 3);
  return b;
}

} // namespace

BenchResult run_bench(const BenchOptions &opts) {
  opts.validate();
  data::SynthSpec spec = opts.synth;
  spec.seed = derive_seed(opts.seed, 0);
  const data::PanelDataset panel = data::gen_synthetic(spec).dataset;

  auto [model_set, test] = data::train_val_split(panel, opts.model_fraction, derive_seed(opts.seed, 1));
  auto [train, val] = data::train_val_split(model_set, opts.train_fraction, derive_seed(opts.seed, 2));
  const data::PanelDataset history = data::head(test, opts.history_len);
  const std::size_t horizon = opts.horizon();

  models::Model1Config cfg = opts.model;
  cfg.seed = derive_seed(opts.seed, 4);
  cfg.bias.mode = bias::BiasMode::Hold;
  const models::TrainedForecaster unbiased = models::train_model1(train, val, cfg);

  BenchResult res;
  auto add = [&](const std::string &label, const models::TrainedForecaster *m) {
    res.reports.push_back(eval::horizon_mae(label, forecast_all(history, horizon, m), test));
  };
  add("persistence", nullptr);
  add("model1-unbiased", &unbiased);
  {
    const auto m = models::with_bias(unbiased, train,
                                     bias_options(bias::BiasMode::PopulationAverage, opts, opts.model.bias.schedule));
    add("model1-pop-average", &m);
  }
  {
    const auto m =
        models::with_bias(unbiased, train, bias_options(bias::BiasMode::ClusterHard, opts, opts.model.bias.schedule));
    add("model1-cluster-hard", &m);
  }
  if (opts.extended) {
    const auto interp = models::with_bias(
        unbiased, train, bias_options(bias::BiasMode::ClusterInterpolated, opts, bias::BetaSchedule::reciprocal()));
    add("model1-cluster-interp", &interp);

    models::Model1Config ucfg = cfg;
    ucfg.univariate = true;
    const auto uni = models::train_model1(train, val, ucfg);
    add("univariate", &uni);

    models::Model2Config m2;
    static_cast<models::CommonConfig &>(m2) = cfg;
    m2.lr = models::Model2Config().lr;
    m2.seed = derive_seed(opts.seed, 5);
    const auto m2_unbiased = models::train_model2(train, val, m2);
    add("model2-unbiased", &m2_unbiased);
    m2.bias = bias_options(bias::BiasMode::ClusterHard, opts, opts.model.bias.schedule);
    const auto m2_cluster = models::train_model2(train, val, m2);
    add("model2-cluster-hard", &m2_cluster);
  }
  res.comparison = eval::compare_reports(res.reports);
  return res;
}

} // namespace expbias::cli
