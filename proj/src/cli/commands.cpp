#include "expbias/cli/commands.hpp"

#include "expbias/bias/kmeans.hpp"
#include "expbias/bias/population.hpp"
#include "expbias/cli/bench.hpp"
#include "expbias/data/csv.hpp"
#include "expbias/data/impute.hpp"
#include "expbias/data/split.hpp"
#include "expbias/data/transform.hpp"
#include "expbias/eval/report.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>

namespace expbias::cli {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::InvalidConfiguration:
    return 1;
  case ErrorKind::Format:
  case ErrorKind::InvalidData:
  case ErrorKind::InvalidInput:
  case ErrorKind::DegenerateData:
  case ErrorKind::Io:
    return 2;
  case ErrorKind::Training:
  case ErrorKind::Shape:
  case ErrorKind::InvalidState:
    return 3;
  }
  return 3;
}

namespace {

void write_text(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << text;
  require(out.good(), ErrorKind::Io, "failed writing '" + path.string() + "'");
}

void prepare_out(const RunConfig &cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  require(!ec && std::filesystem::is_directory(cfg.out), ErrorKind::Io,
          "cannot create output directory '" + cfg.out.string() + "'");
  write_text(cfg.out / "resolved_config.json", resolved_config_json(cfg).dump(2) + '\n');
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void run_synth(const RunConfig &cfg, std::ostream &out) {
  prepare_out(cfg);
  data::SynthSpec spec = cfg.synth;
  spec.seed = cfg.seed;
  const data::SynthResult res = data::gen_synthetic(spec);
  data::save_panel_csv(cfg.out / "panel.csv", res.dataset);
  data::save_truth_sidecar(cfg.out / "truth.csv", res);
  if (cfg.history_len > 0) {
    data::save_panel_csv(cfg.out / "history.csv", data::head(res.dataset, cfg.history_len));
    data::save_panel_csv(cfg.out / "future.csv",
                         data::window(res.dataset, cfg.history_len, spec.seq_len - cfg.history_len));
  }
  out << "wrote " << res.dataset.entities.size() << " entities x " << spec.seq_len << " rows to "
      << (cfg.out / "panel.csv").string() << '\n';
}

void run_kselect(const RunConfig &cfg, std::ostream &out) {
  const data::PanelDataset ds = load_dataset(cfg, cfg.data);
  require(!ds.has_missing(), ErrorKind::InvalidData, "dataset still has missing cells (use --impute hot-deck)");
  std::vector<bool> diff(ds.n_features(), cfg.difference);
  data::FeatureTransform ft = data::FeatureTransform::identity(ds.n_features());
  if (cfg.no_standardize) {
    ft.differenced = diff;
  } else {
    ft = data::fit_transform(ds, diff);
  }
  const data::PanelDataset t = data::transform_apply(ft, ds);
  std::vector<std::size_t> columns = t.predictor_indices();
  if (cfg.model == "model2") {
    columns.resize(t.n_features());
    std::iota(columns.begin(), columns.end(), 0);
  }
  require(!columns.empty(), ErrorKind::InvalidInput, "no predictor columns to cluster");
  const bias::KSelection sel =
      bias::silhouette_select_k(bias::collect_samples(t, columns), cfg.k_candidates, cfg.seed);

  nlohmann::json scores = nlohmann::json::array();
  for (const auto &[k, s] : sel.scores) {
    out << "k=" << k << " silhouette=" << fixed(s, 6) << '\n';
    scores.push_back({{"k", k}, {"silhouette", s}});
  }
  out << "chosen k=" << sel.best_k << '\n';
  if (!cfg.out.empty()) {
    prepare_out(cfg);
    write_text(cfg.out / "kselect.json",
               nlohmann::json{{"best_k", sel.best_k}, {"scores", scores}}.dump(2) + '\n');
  }
}

void run_train(const RunConfig &cfg, std::ostream &out) {
  prepare_out(cfg);
  const data::PanelDataset ds = load_dataset(cfg, cfg.data);
  data::PanelDataset train = ds;
  data::PanelDataset val = ds.empty_like();
  if (!cfg.val_data.empty()) {
    val = load_dataset(cfg, cfg.val_data);
  } else if (cfg.val_fraction > 0.0) {
    std::tie(train, val) = data::train_val_split(ds, 1.0 - cfg.val_fraction, derive_seed(cfg.seed, 1));
  }
  const models::TrainedForecaster model = cfg.model == "model2"
                                              ? models::train_model2(train, val, cfg.model2_config())
                                              : models::train_model1(train, val, cfg.model1_config());
  models::save_model(cfg.out / "model.json", model);

  std::string log = "epoch,train_loss,val_mae\n";
  for (std::size_t e = 0; e < model.log.train_loss.size(); ++e) {
    log += std::to_string(e + 1) + ',' + data::format_double(model.log.train_loss[e]) + ',' +
           (e < model.log.val_mae.size() ? data::format_double(model.log.val_mae[e]) : std::string()) + '\n';
  }
  write_text(cfg.out / "training_log.csv", log);
  out << "trained " << models::to_string(model.architecture) << " on " << train.entities.size() << " entities ("
      << val.entities.size() << " validation), best epoch " << model.log.best_epoch << '\n';
}

void run_forecast(const RunConfig &cfg, std::ostream &out) {
  prepare_out(cfg);
  std::vector<models::ForecastResult> results;
  if (cfg.model == "persistence") {
    const data::PanelDataset ds = load_dataset(cfg, cfg.data);
    for (const auto &e : ds.entities) {
      results.push_back(models::forecast_persistence(e, ds.target_index, cfg.horizon));
    }
  } else {
    const models::TrainedForecaster model = models::load_model(cfg.model_file);
    RunConfig c = cfg;
    if (c.target.empty()) {
      c.target = model.source_features[model.source_target()];
    }
    const data::PanelDataset ds = load_dataset(c, cfg.data);
    require(ds.target_index == model.source_target(), ErrorKind::InvalidInput,
            "--target differs from the target the model was trained on");
    for (const auto &e : ds.entities) {
      results.push_back(models::forecast(model, e, cfg.horizon));
    }
  }
  write_forecast_csv(cfg.out / "forecasts.csv", results);
  out << "wrote " << results.size() << " forecasts of " << cfg.horizon << " steps to "
      << (cfg.out / "forecasts.csv").string() << '\n';
}

void run_evaluate(const RunConfig &cfg, std::ostream &out) {
  prepare_out(cfg);
  const data::CsvSchema schema = cfg.schema();
  data::PanelDataset truth = data::load_panel_csv(cfg.truth, schema);
  std::optional<data::PanelDataset> history;
  if (!cfg.history.empty()) {
    history = data::load_panel_csv(cfg.history, schema);
  }

  const bool transformed = cfg.units == "transformed";
  double shift = 0.0;
  double scale = 1.0;
  if (transformed) {
    const models::TrainedForecaster model = models::load_model(cfg.model_file);
    require(!model.transform.differenced[model.target_index], ErrorKind::InvalidConfiguration,
            "transformed units are undefined for a differenced target");
    require(model.source_features[model.source_target()] == cfg.target, ErrorKind::InvalidConfiguration,
            "--target differs from the model's target");
    shift = model.transform.mean[static_cast<Eigen::Index>(model.target_index)];
    scale = model.transform.stddev[static_cast<Eigen::Index>(model.target_index)];
    for (auto &e : truth.entities) {
      auto col = e.values.col(static_cast<Eigen::Index>(truth.target_index));
      col = (col.array() - shift) / scale;
    }
  }

  std::vector<eval::HorizonReport> reports;
  for (std::size_t i = 0; i < cfg.forecasts.size(); ++i) {
    auto forecasts = read_forecast_csv(cfg.forecasts[i]);
    for (auto &f : forecasts) {
      if (history) {
        const data::Entity *h = history->find(f.entity_id);
        require(h != nullptr && h->length() > 0, ErrorKind::InvalidInput,
                "entity '" + f.entity_id + "' is absent from --history");
        f.origin_time = h->times.back();
      } else {
        const data::Entity *t = truth.find(f.entity_id);
        require(t != nullptr && t->length() > 0, ErrorKind::InvalidInput,
                "forecast entity '" + f.entity_id + "' is absent from truth");
        f.origin_time = t->times.front() - truth.time_step;
      }
      if (transformed) {
        for (double &v : f.values) {
          v = (v - shift) / scale;
        }
      }
    }
    const std::string label = cfg.labels.empty() ? cfg.forecasts[i].stem().string() : cfg.labels[i];
    reports.push_back(eval::horizon_mae(label, forecasts, truth,
                                        transformed ? eval::Units::Transformed : eval::Units::Original));
  }
  eval::emit_outputs(reports, cfg.out);
  out << eval::format_table(eval::compare_reports(reports));
}

void run_bench_command(const RunConfig &cfg, std::ostream &out) {
  prepare_out(cfg);
  BenchOptions opts;
  opts.synth = cfg.synth;
  opts.history_len = cfg.bench_history;
  opts.model = cfg.model1_config();
  opts.k = cfg.k;
  opts.extended = cfg.extended;
  opts.seed = cfg.seed;
  const BenchResult res = run_bench(opts);
  eval::emit_outputs(res.reports, cfg.out);
  const std::string table = eval::format_table(res.comparison);
  write_text(cfg.out / "comparison.txt", table);
  out << table;
}

} // namespace

data::PanelDataset load_dataset(const RunConfig &cfg, const std::filesystem::path &path) {
  data::PanelDataset ds = data::load_panel_csv(path, cfg.schema());
  if (!cfg.forward_fill.empty()) {
    ds = data::forward_fill(ds, cfg.forward_fill);
  }
  if (cfg.impute == "hot-deck" && ds.has_missing()) {
    ds = data::hot_deck_impute(ds, derive_seed(cfg.seed, 100));
  }
  return ds;
}

void write_forecast_csv(const std::filesystem::path &path, const std::vector<models::ForecastResult> &forecasts) {
  std::string text = "entity_id,horizon_step,prediction\n";
  for (const auto &f : forecasts) {
    for (std::size_t h = 0; h < f.values.size(); ++h) {
      text += data::csv_field(f.entity_id) + ',' + std::to_string(h + 1) + ',' + data::format_double(f.values[h]) +
              '\n';
    }
  }
  write_text(path, text);
}

std::vector<models::ForecastResult> read_forecast_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Format, path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  const auto header = data::split_csv_line(line);
  require(header == std::vector<std::string>{"entity_id", "horizon_step", "prediction"}, ErrorKind::Format,
          path.string() + ": expected header entity_id,horizon_step,prediction");

  std::vector<models::ForecastResult> out;
  std::map<std::string, std::size_t> index;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const auto cells = data::split_csv_line(line);
    const std::string where = path.string() + " row " + std::to_string(row);
    require(cells.size() == 3, ErrorKind::Format, where + ": expected 3 fields");
    std::size_t step = 0;
    double value = 0.0;
    try {
      std::size_t used = 0;
      step = static_cast<std::size_t>(std::stoul(cells[1], &used));
      require(used == cells[1].size(), ErrorKind::Format, where + ": bad horizon_step");
      value = std::stod(cells[2], &used);
      require(used == cells[2].size(), ErrorKind::Format, where + ": bad prediction");
    } catch (const std::logic_error &) {
      raise(ErrorKind::Format, where + ": non-numeric horizon_step or prediction");
    }
    auto [it, inserted] = index.emplace(cells[0], out.size());
    if (inserted) {
      out.push_back(models::ForecastResult{cells[0], 0, {}});
    }
    auto &f = out[it->second];
    require(step == f.values.size() + 1, ErrorKind::Format,
            where + ": horizon steps of '" + cells[0] + "' must run 1, 2, ... in order");
    f.values.push_back(value);
  }
  require(!out.empty(), ErrorKind::Format, path.string() + ": no forecasts");
  return out;
}

void run_command(const RunConfig &cfg, std::ostream &out) {
  switch (cfg.command) {
  case Command::Synth:
    return run_synth(cfg, out);
  case Command::KSelect:
    return run_kselect(cfg, out);
  case Command::Train:
    return run_train(cfg, out);
  case Command::Forecast:
    return run_forecast(cfg, out);
  case Command::Evaluate:
    return run_evaluate(cfg, out);
  case Command::Bench:
    return run_bench_command(cfg, out);
  }
}

int run_main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  try {
    run_command(parse_config(args), out);
    return 0;
  } catch (const HelpRequested &h) {
    out << h.what();
    return 0;
  } catch (const Error &e) {
    err << "expbias: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error &e) {
    err << "expbias: io: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    err << "expbias: " << e.what() << '\n';
    return 3;
  }
}

} // namespace expbias::cli
