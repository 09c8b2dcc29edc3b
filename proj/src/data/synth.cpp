#include "expbias/data/synth.hpp"

#include "expbias/data/csv.hpp"
#include "expbias/error.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace expbias::data {

void SynthSpec::validate() const {
  require(n_entities >= 1 && n_features >= 1 && seq_len >= 1 && n_prototypes >= 1, ErrorKind::InvalidConfiguration,
          "synthetic spec counts must be positive");
  require(reversion_rate > 0.0 && reversion_rate <= 1.0, ErrorKind::InvalidConfiguration,
          "reversion_rate must lie in (0,1]");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, ErrorKind::InvalidConfiguration,
          "noise_sigma must be finite and >= 0");
  require(std::isfinite(prototype_scale) && prototype_scale >= 0.0 && std::isfinite(init_spread) &&
              init_spread >= 0.0,
          ErrorKind::InvalidConfiguration, "prototype_scale and init_spread must be finite and >= 0");
  require(target_weights.empty() || target_weights.size() == n_features, ErrorKind::InvalidConfiguration,
          "target_weights must have one entry per feature");
}

std::vector<double> SynthSpec::resolved_weights() const {
  if (!target_weights.empty()) {
    return target_weights;
  }
  std::vector<double> w(n_features);
  for (std::size_t j = 0; j < n_features; ++j) {
    w[j] = (j % 2 == 0 ? 1.0 : -1.0) / static_cast<double>(j + 1);
  }
  return w;
}

SynthResult gen_synthetic(const SynthSpec &spec) {
  spec.validate();
  const auto nf = static_cast<Eigen::Index>(spec.n_features);
  const std::vector<double> w_vec = spec.resolved_weights();
  const Vector w = Eigen::Map<const Vector>(w_vec.data(), nf);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian_vector = [&](double sigma) {
    Vector v(nf);
    for (Eigen::Index j = 0; j < nf; ++j) {
      v[j] = sigma * normal(rng);
    }
    return v;
  };

  SynthResult out;
  out.prototypes.resize(static_cast<Eigen::Index>(spec.n_prototypes), nf);
  for (std::size_t k = 0; k < spec.n_prototypes; ++k) {
    out.prototypes.row(static_cast<Eigen::Index>(k)) = gaussian_vector(spec.prototype_scale).transpose();
  }

  auto &ds = out.dataset;
  for (std::size_t j = 0; j < spec.n_features; ++j) {
    ds.feature_names.push_back("f" + std::to_string(j));
  }
  ds.feature_names.push_back("y");
  ds.target_index = spec.n_features;

  const std::size_t width = std::to_string(spec.n_entities - 1).size();
  std::uniform_int_distribution<std::size_t> pick(0, spec.n_prototypes - 1);
  for (std::size_t i = 0; i < spec.n_entities; ++i) {
    const std::size_t k = pick(rng);
    const Vector proto = out.prototypes.row(static_cast<Eigen::Index>(k)).transpose();
    Entity e;
    std::string num = std::to_string(i);
    e.id = "e" + std::string(width - num.size(), '0') + num;
    e.values.resize(static_cast<Eigen::Index>(spec.seq_len), nf + 1);
    Vector x = proto + gaussian_vector(spec.init_spread);
    for (std::size_t t = 0; t < spec.seq_len; ++t) {
      if (t > 0) {
        x = x + spec.reversion_rate * (proto - x) + gaussian_vector(spec.noise_sigma);
      }
      const auto row = static_cast<Eigen::Index>(t);
      e.values.row(row).head(nf) = x.transpose();
      e.values(row, nf) = w.dot(x) + spec.noise_sigma * normal(rng);
      e.times.push_back(static_cast<std::int64_t>(t));
    }
    ds.entities.push_back(std::move(e));
    out.prototype_of.push_back(k);
  }
  ds.validate();
  return out;
}

void save_truth_sidecar(const std::filesystem::path &path, const SynthResult &result) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << "entity_id,prototype\n";
  for (std::size_t i = 0; i < result.dataset.entities.size(); ++i) {
    out << csv_field(result.dataset.entities[i].id) << ',' << result.prototype_of[i] << '\n';
  }
  require(out.good(), ErrorKind::Io, "failed writing '" + path.string() + "'");
}

} // namespace expbias::data
