#include "expbias/cli/config.hpp"

#include "expbias/error.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace expbias::cli {

const char *to_string(Command cmd) {
  switch (cmd) {
  case Command::Synth:
    return "synth";
  case Command::KSelect:
    return "kselect";
  case Command::Train:
    return "train";
  case Command::Forecast:
    return "forecast";
  case Command::Evaluate:
    return "evaluate";
  case Command::Bench:
    return "bench";
  }
  return "train";
}

data::CsvSchema RunConfig::schema() const {
  data::CsvSchema s;
  s.target = target;
  s.drop_times = drop_times;
  s.enforce_uniform_spacing = uniform_spacing;
  s.time_step = time_step;
  return s;
}

bias::BiasFitOptions RunConfig::bias_options() const {
  bias::BiasFitOptions b;
  b.mode = bias::parse_bias_mode(bias);
  b.schedule = bias::BetaSchedule::parse(schedule);
  b.k = k;
  b.k_candidates = k_candidates;
  b.seed = seed;
  return b;
}

namespace {

void fill_common(models::CommonConfig &c, const RunConfig &cfg) {
  c.hidden = cfg.hidden;
  c.layers = cfg.layers;
  if (cfg.lr > 0.0) {
    c.lr = cfg.lr;
  }
  c.epochs = cfg.epochs;
  c.clip_norm = cfg.clip_norm;
  c.standard_output_gate = cfg.standard_output_gate;
  c.difference = cfg.difference;
  c.standardize = !cfg.no_standardize;
  c.warmup = models::parse_warmup(cfg.warmup);
  c.bias = cfg.bias_options();
  c.seed = cfg.seed;
}

} // namespace

models::Model1Config RunConfig::model1_config() const {
  models::Model1Config c;
  fill_common(c, *this);
  c.univariate = model == "univariate";
  if (replication_alpha >= 0.0) {
    c.target_replication_alpha = replication_alpha;
  }
  c.validate();
  return c;
}

models::Model2Config RunConfig::model2_config() const {
  models::Model2Config c;
  fill_common(c, *this);
  c.outer_alpha = outer_alpha;
  c.feature_alphas = Eigen::Map<const Vector>(feature_alphas.data(), static_cast<Eigen::Index>(feature_alphas.size()));
  c.validate();
  return c;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::InvalidConfiguration, "cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::vector<std::pair<std::string, std::string>> out;

  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
      raise(ErrorKind::InvalidConfiguration, "config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    for (const auto &[key, value] : doc.items()) {
      std::string v;
      if (value.is_string()) {
        v = value.get<std::string>();
      } else if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) {
          require(!value[i].is_structured(), ErrorKind::InvalidConfiguration,
                  "config key '" + key + "' must be a flat list");
          v += (i ? "," : "") + (value[i].is_string() ? value[i].get<std::string>() : value[i].dump());
        }
      } else {
        require(!value.is_object() && !value.is_null(), ErrorKind::InvalidConfiguration,
                "config key '" + key + "' must be a scalar or a flat list");
        v = value.dump();
      }
      out.emplace_back(key, v);
    }
    return out;
  }

  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(lines, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::InvalidConfiguration,
            path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

namespace {

void add_seed(CLI::App *sub, RunConfig &cfg) {
  sub->add_option("--seed", cfg.seed, "Random seed (mandatory)")->required();
  sub->add_option("--config", cfg.config_file, "Config file: flat JSON object or key = value lines");
}

void add_schema(CLI::App *sub, RunConfig &cfg) {
  sub->add_option("--target", cfg.target, "Name of the target column");
  sub->add_option("--drop-times", cfg.drop_times, "time_index values to discard on load")->delimiter(',');
  sub->add_option("--time-step", cfg.time_step, "Spacing between consecutive time indices")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--uniform-spacing", cfg.uniform_spacing, "Reject entities with irregular time gaps");
}

void add_data(CLI::App *sub, RunConfig &cfg, bool required) {
  auto *opt = sub->add_option("--data", cfg.data, "Panel CSV (entity_id,time_index,features...)");
  if (required) {
    opt->required();
  }
  add_schema(sub, cfg);
  sub->add_option("--forward-fill", cfg.forward_fill, "Columns to forward-fill within each entity")->delimiter(',');
  sub->add_option("--impute", cfg.impute, "Imputation for remaining gaps")
      ->check(CLI::IsMember({"hot-deck", "none"}));
}

void add_training(CLI::App *sub, RunConfig &cfg) {
  sub->add_option("--hidden", cfg.hidden, "LSTM memory cells per layer")->check(CLI::PositiveNumber);
  sub->add_option("--layers", cfg.layers, "Stacked LSTM layers")->check(CLI::PositiveNumber);
  sub->add_option("--lr", cfg.lr, "Adam learning rate (default 0.0003 for Model 1, 0.0001 for Model 2)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--epochs", cfg.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
  sub->add_option("--clip-norm", cfg.clip_norm, "Global gradient-norm clip (<= 0 disables)");
  sub->add_flag("--standard-output-gate", cfg.standard_output_gate, "Use h = o * tanh(c)");
  sub->add_option("--warmup", cfg.warmup, "Recurrent warm-up before rollout")
      ->check(CLI::IsMember({"full-history", "last-point"}));
  sub->add_option("--schedule", cfg.schedule, "Beta schedule: step:<t0>, reciprocal or constant:<v>");
  sub->add_option("--k", cfg.k, "Cluster count for cluster biases (0 selects by silhouette)");
}

void add_transform(CLI::App *sub, RunConfig &cfg) {
  sub->add_flag("--difference", cfg.difference, "Difference every feature before standardizing");
  sub->add_flag("--no-standardize", cfg.no_standardize, "Skip standardization");
  sub->add_option("--k-candidates", cfg.k_candidates, "Candidate K values for silhouette selection")
      ->delimiter(',');
}

void add_synth(CLI::App *sub, RunConfig &cfg) {
  auto &s = cfg.synth;
  sub->add_option("--n-entities", s.n_entities, "Synthetic entities");
  sub->add_option("--n-features", s.n_features, "Synthetic predictor features");
  sub->add_option("--seq-len", s.seq_len, "Rows per synthetic entity");
  sub->add_option("--n-prototypes", s.n_prototypes, "Prototype groups");
  sub->add_option("--reversion-rate", s.reversion_rate, "Pull toward the prototype per step");
  sub->add_option("--noise-sigma", s.noise_sigma, "Gaussian noise standard deviation");
  sub->add_option("--target-weights", s.target_weights, "Target weights per feature")->delimiter(',');
  sub->add_option("--prototype-scale", s.prototype_scale, "Standard deviation of prototype coordinates");
  sub->add_option("--init-spread", s.init_spread, "Standard deviation of starting offsets");
}

std::string option_key(const std::string &token) {
  const auto eq = token.find('=');
  return token.substr(0, eq);
}

} // namespace

RunConfig parse_config(const std::vector<std::string> &args) {
  RunConfig cfg;
  CLI::App app{"Long-horizon panel forecasting with expectation-biased LSTMs", "expbias"};
  app.require_subcommand(1);
  app.allow_windows_style_options(false);

  auto *synth = app.add_subcommand("synth", "Write a synthetic panel and its prototype sidecar");
  add_seed(synth, cfg);
  synth->add_option("--out", cfg.out, "Output directory")->required();
  add_synth(synth, cfg);
  synth->add_option("--history-len", cfg.history_len, "Also split each entity into history.csv and future.csv");

  auto *kselect = app.add_subcommand("kselect", "Score candidate cluster counts by mean silhouette");
  add_seed(kselect, cfg);
  add_data(kselect, cfg, true);
  add_transform(kselect, cfg);
  kselect->add_option("--model", cfg.model, "Which columns the bias covers")
      ->check(CLI::IsMember({"model1", "model2"}));
  kselect->add_option("--out", cfg.out, "Optional output directory for kselect.json");

  auto *train = app.add_subcommand("train", "Train a forecaster and write its model document");
  add_seed(train, cfg);
  add_data(train, cfg, true);
  add_transform(train, cfg);
  add_training(train, cfg);
  train->add_option("--bias", cfg.bias, "Expectation bias")
      ->check(CLI::IsMember({"none", "hold", "pop-average", "cluster-hard", "cluster-interp"}));
  train->add_option("--model", cfg.model, "Architecture")
      ->check(CLI::IsMember({"model1", "model2", "univariate"}));
  auto *val_data = train->add_option("--val-data", cfg.val_data, "Validation panel CSV");
  train->add_option("--val-fraction", cfg.val_fraction, "Entity share held out for validation when no --val-data")
      ->check(CLI::Range(0.0, 0.99))
      ->excludes(val_data);
  train->add_option("--replication-alpha", cfg.replication_alpha, "Target replication weight in [0,1] (Model 1)");
  train->add_option("--feature-alphas", cfg.feature_alphas, "Per-feature loss weights (Model 2)")->delimiter(',');
  train->add_option("--outer-alpha", cfg.outer_alpha, "Feature loss weight against target loss (Model 2)");
  train->add_option("--out", cfg.out, "Output directory")->required();

  auto *fc = app.add_subcommand("forecast", "Roll a trained model forward from each entity's history");
  add_seed(fc, cfg);
  add_data(fc, cfg, true);
  auto *model_file = fc->add_option("--model-file", cfg.model_file, "Model document from train");
  fc->add_option("--model", cfg.model, "Use 'persistence' instead of a model file")
      ->check(CLI::IsMember({"persistence"}))
      ->excludes(model_file);
  fc->add_option("--horizon", cfg.horizon, "Steps to forecast")->check(CLI::PositiveNumber);
  fc->add_option("--out", cfg.out, "Output directory")->required();

  auto *ev = app.add_subcommand("evaluate", "Score forecast CSVs against truth");
  add_seed(ev, cfg);
  add_schema(ev, cfg);
  ev->add_option("--forecasts", cfg.forecasts, "Forecast CSVs; the first is the baseline")
      ->required()
      ->delimiter(',');
  ev->add_option("--labels", cfg.labels, "Labels for the forecast files")->delimiter(',');
  ev->add_option("--truth", cfg.truth, "Panel CSV with the realized values")->required();
  ev->add_option("--history", cfg.history, "Panel CSV the forecasts started from (sets each origin)");
  ev->add_option("--units", cfg.units, "Score in original or transformed units")
      ->check(CLI::IsMember({"original", "transformed"}));
  ev->add_option("--model-file", cfg.model_file, "Model whose transform defines transformed units");
  ev->add_option("--out", cfg.out, "Output directory")->required();

  auto *bench = app.add_subcommand("bench", "Synthetic biased-vs-unbiased benchmark");
  add_seed(bench, cfg);
  bench->add_option("--out", cfg.out, "Output directory")->required();
  add_synth(bench, cfg);
  add_training(bench, cfg);
  bench->add_option("--history-len", cfg.bench_history, "Rows revealed per held-out entity");
  bench->add_flag("--extended", cfg.extended, "Add univariate, Model 2 and cluster-interp rows");

  require(!args.empty(), ErrorKind::InvalidConfiguration,
          "missing subcommand (synth, kselect, train, forecast, evaluate, bench)\n" + app.help());
  if (args.front() == "--help" || args.front() == "-h") {
    throw HelpRequested(app.help());
  }
  CLI::App *sub = nullptr;
  for (auto *s : app.get_subcommands({})) {
    if (s->get_name() == args.front()) {
      sub = s;
    }
  }
  require(sub != nullptr, ErrorKind::InvalidConfiguration,
          "unknown subcommand '" + args.front() + "' (synth, kselect, train, forecast, evaluate, bench)");

  std::vector<std::string> tokens = args;
  std::set<std::string> given;
  std::optional<std::string> config_path;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (tokens[i].rfind("--", 0) == 0) {
      const std::string key = option_key(tokens[i]);
      if (key == "--help") {
        throw HelpRequested(sub->help());
      }
      require(sub->get_option_no_throw(key) != nullptr, ErrorKind::InvalidConfiguration,
              "unknown option " + key + " for " + sub->get_name());
      given.insert(key);
      if (option_key(tokens[i]) == "--config") {
        const auto eq = tokens[i].find('=');
        if (eq != std::string::npos) {
          config_path = tokens[i].substr(eq + 1);
        } else if (i + 1 < tokens.size()) {
          config_path = tokens[i + 1];
        }
      }
    }
  }
  if (config_path) {
    std::vector<std::string> extra;
    for (auto [key, value] : read_config_file(*config_path)) {
      std::replace(key.begin(), key.end(), '_', '-');
      const std::string flag = "--" + key;
      require(key != "config" && sub->get_option_no_throw(flag) != nullptr, ErrorKind::InvalidConfiguration,
              "unknown config key '" + key + "' for " + sub->get_name());
      if (given.count(flag) == 0) {
        extra.push_back(flag + "=" + value);
      }
    }
    tokens.insert(tokens.begin() + 1, extra.begin(), extra.end());
  }

  std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    throw HelpRequested(sub->parsed() ? sub->help() : app.help());
  } catch (const CLI::ParseError &e) {
    raise(ErrorKind::InvalidConfiguration, std::string(sub->get_name()) + ": " + e.what());
  }

  const std::string name = sub->get_name();
  if (name == "synth") {
    cfg.command = Command::Synth;
    cfg.synth.seed = cfg.seed;
    cfg.synth.validate();
    require(cfg.history_len < cfg.synth.seq_len, ErrorKind::InvalidConfiguration,
            "--history-len must be smaller than --seq-len");
  } else if (name == "kselect") {
    cfg.command = Command::KSelect;
    require(!cfg.target.empty(), ErrorKind::InvalidConfiguration, "kselect needs --target");
  } else if (name == "train") {
    cfg.command = Command::Train;
    require(!cfg.target.empty(), ErrorKind::InvalidConfiguration, "train needs --target");
    if (cfg.model == "model2") {
      cfg.model2_config();
    } else {
      cfg.model1_config();
    }
  } else if (name == "forecast") {
    cfg.command = Command::Forecast;
    const bool persistence = cfg.model == "persistence" && sub->count("--model") > 0;
    require(persistence || !cfg.model_file.empty(), ErrorKind::InvalidConfiguration,
            "forecast needs --model-file or --model persistence");
    require(!persistence || !cfg.target.empty(), ErrorKind::InvalidConfiguration,
            "persistence forecasts need --target");
    if (!persistence) {
      cfg.model = "file";
    }
  } else if (name == "evaluate") {
    cfg.command = Command::Evaluate;
    require(!cfg.target.empty(), ErrorKind::InvalidConfiguration, "evaluate needs --target");
    require(cfg.labels.empty() || cfg.labels.size() == cfg.forecasts.size(), ErrorKind::InvalidConfiguration,
            "--labels needs one label per forecast file");
    require(cfg.units == "original" || !cfg.model_file.empty(), ErrorKind::InvalidConfiguration,
            "--units transformed needs --model-file");
  } else {
    cfg.command = Command::Bench;
    cfg.model1_config();
  }
  return cfg;
}

nlohmann::json resolved_config_json(const RunConfig &cfg) {
  using nlohmann::json;
  json j = {{"command", to_string(cfg.command)}, {"seed", cfg.seed}, {"out", cfg.out.string()}};
  auto schema = [&] {
    j["target"] = cfg.target;
    j["drop_times"] = cfg.drop_times;
    j["time_step"] = cfg.time_step;
    j["uniform_spacing"] = cfg.uniform_spacing;
  };
  auto synth = [&] {
    const auto &s = cfg.synth;
    j["n_entities"] = s.n_entities;
    j["n_features"] = s.n_features;
    j["seq_len"] = s.seq_len;
    j["n_prototypes"] = s.n_prototypes;
    j["reversion_rate"] = s.reversion_rate;
    j["noise_sigma"] = s.noise_sigma;
    j["target_weights"] = s.resolved_weights();
    j["prototype_scale"] = s.prototype_scale;
    j["init_spread"] = s.init_spread;
  };
  switch (cfg.command) {
  case Command::Synth:
    synth();
    j["history_len"] = cfg.history_len;
    break;
  case Command::KSelect:
    j["data"] = cfg.data.string();
    schema();
    j["forward_fill"] = cfg.forward_fill;
    j["impute"] = cfg.impute;
    j["model"] = cfg.model;
    j["difference"] = cfg.difference;
    j["standardize"] = !cfg.no_standardize;
    j["k_candidates"] = cfg.k_candidates;
    break;
  case Command::Train: {
    j["data"] = cfg.data.string();
    j["val_data"] = cfg.val_data.string();
    j["val_fraction"] = cfg.val_data.empty() ? json(cfg.val_fraction) : json(nullptr);
    schema();
    j["forward_fill"] = cfg.forward_fill;
    j["impute"] = cfg.impute;
    j["model"] = cfg.model;
    j["model_config"] = cfg.model == "model2" ? models::config_to_json(cfg.model2_config())
                                              : models::config_to_json(cfg.model1_config());
    break;
  }
  case Command::Forecast:
    j["data"] = cfg.data.string();
    schema();
    j["forward_fill"] = cfg.forward_fill;
    j["impute"] = cfg.impute;
    j["model"] = cfg.model;
    j["model_file"] = cfg.model_file.string();
    j["horizon"] = cfg.horizon;
    break;
  case Command::Evaluate: {
    schema();
    json files = json::array();
    for (const auto &f : cfg.forecasts) {
      files.push_back(f.string());
    }
    j["forecasts"] = files;
    j["labels"] = cfg.labels;
    j["truth"] = cfg.truth.string();
    j["history"] = cfg.history.string();
    j["units"] = cfg.units;
    j["model_file"] = cfg.model_file.string();
    break;
  }
  case Command::Bench:
    synth();
    j["history_len"] = cfg.bench_history;
    j["extended"] = cfg.extended;
    j["model_config"] = models::config_to_json(cfg.model1_config());
    break;
  }
  return j;
}

} // namespace expbias::cli
