#include "expbias/bias/bias_spec.hpp"

#include "expbias/error.hpp"

#include <nlohmann/json.hpp>

namespace expbias::bias {

const char *to_string(BiasMode mode) {
  switch (mode) {
  case BiasMode::Hold:
    return "none";
  case BiasMode::PopulationAverage:
    return "pop-average";
  case BiasMode::ClusterHard:
    return "cluster-hard";
  case BiasMode::ClusterInterpolated:
    return "cluster-interp";
  }
  return "none";
}

BiasMode parse_bias_mode(const std::string &text) {
  if (text == "none" || text == "hold") {
    return BiasMode::Hold;
  }
  if (text == "pop-average") {
    return BiasMode::PopulationAverage;
  }
  if (text == "cluster-hard") {
    return BiasMode::ClusterHard;
  }
  if (text == "cluster-interp") {
    return BiasMode::ClusterInterpolated;
  }
  raise(ErrorKind::InvalidConfiguration,
        "unknown bias mode '" + text + "' (expected none, hold, pop-average, cluster-hard or cluster-interp)");
}

bool BiasSpec::fitted() const {
  switch (mode) {
  case BiasMode::Hold:
    return true;
  case BiasMode::PopulationAverage:
    return population.has_value();
  case BiasMode::ClusterHard:
  case BiasMode::ClusterInterpolated:
    return clusters.has_value() && clusters->k() >= 1;
  }
  return false;
}

BiasSpec fit_bias(const Matrix &samples, const BiasFitOptions &opts) {
  BiasSpec spec;
  spec.mode = opts.mode;
  spec.schedule = opts.schedule;
  switch (opts.mode) {
  case BiasMode::Hold:
    break;
  case BiasMode::PopulationAverage: {
    require(samples.rows() > 0, ErrorKind::InvalidInput, "population means need at least one sample");
    PopulationStats stats;
    stats.mu = samples.colwise().mean().transpose();
    stats.n_samples = static_cast<std::size_t>(samples.rows());
    spec.population = std::move(stats);
    break;
  }
  case BiasMode::ClusterHard:
  case BiasMode::ClusterInterpolated: {
    std::size_t k = opts.k;
    if (k == 0) {
      k = silhouette_select_k(samples, opts.k_candidates, opts.seed, opts.max_iter).best_k;
    }
    spec.clusters = kmeans_fit(samples, k, opts.seed, opts.max_iter);
    break;
  }
  }
  return spec;
}

Vector make_bias_inputs(const BiasSpec &spec, const Vector &x0, std::int64_t t) {
  require(spec.fitted(), ErrorKind::InvalidState,
          std::string("bias mode ") + to_string(spec.mode) + " used before its statistics were fitted");
  switch (spec.mode) {
  case BiasMode::Hold:
    require(t >= 1, ErrorKind::InvalidInput, "rollout step must be >= 1");
    return x0;
  case BiasMode::PopulationAverage:
    return population_average_bias(x0, *spec.population, beta_value(spec.schedule, t));
  case BiasMode::ClusterHard:
    require(t >= 1, ErrorKind::InvalidInput, "rollout step must be >= 1");
    return cluster_bias(*spec.clusters, x0, ClusterMode::Hard, 0.0);
  case BiasMode::ClusterInterpolated:
    return cluster_bias(*spec.clusters, x0, ClusterMode::Interpolated, beta_value(spec.schedule, t));
  }
  return x0;
}

namespace {

nlohmann::json matrix_rows(const Matrix &m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = m(r, c);
    }
    rows.push_back(row);
  }
  return rows;
}

} // namespace

nlohmann::json bias_to_json(const BiasSpec &spec) {
  nlohmann::json doc = {{"mode", to_string(spec.mode)}, {"schedule", spec.schedule.describe()}};
  if (spec.population) {
    doc["population"] = {
        {"mu", std::vector<double>(spec.population->mu.data(), spec.population->mu.data() + spec.population->mu.size())},
        {"n_samples", spec.population->n_samples}};
  }
  if (spec.clusters) {
    doc["clusters"] = {{"k", spec.clusters->k()},
                       {"centers", matrix_rows(spec.clusters->centers)},
                       {"inertia", spec.clusters->inertia},
                       {"iterations", spec.clusters->iterations}};
  }
  return doc;
}

BiasSpec bias_from_json(const nlohmann::json &doc) {
  try {
    BiasSpec spec;
    spec.mode = parse_bias_mode(doc.at("mode").get<std::string>());
    spec.schedule = BetaSchedule::parse(doc.at("schedule").get<std::string>());
    if (doc.contains("population")) {
      const auto mu = doc["population"].at("mu").get<std::vector<double>>();
      PopulationStats stats;
      stats.mu = Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(mu.size()));
      stats.n_samples = doc["population"].at("n_samples").get<std::size_t>();
      spec.population = std::move(stats);
    }
    if (doc.contains("clusters")) {
      const auto &c = doc["clusters"];
      const auto rows = c.at("centers").get<std::vector<std::vector<double>>>();
      KMeansModel model;
      model.centers.resize(static_cast<Eigen::Index>(rows.size()),
                           rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        require(static_cast<Eigen::Index>(rows[r].size()) == model.centers.cols(), ErrorKind::Format,
                "ragged cluster centers in model document");
        for (std::size_t j = 0; j < rows[r].size(); ++j) {
          model.centers(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][j];
        }
      }
      model.inertia = c.at("inertia").get<double>();
      model.iterations = c.at("iterations").get<int>();
      spec.clusters = std::move(model);
    }
    require(spec.fitted(), ErrorKind::Format, "bias document lacks the statistics its mode needs");
    return spec;
  } catch (const nlohmann::json::exception &e) {
    raise(ErrorKind::Format, std::string("malformed bias document: ") + e.what());
  }
}

} // namespace expbias::bias
