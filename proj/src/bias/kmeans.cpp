#include "expbias/bias/kmeans.hpp"

#include "expbias/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace expbias::bias {

namespace {

double labelled_inertia(const Matrix &samples, const Matrix &centers, const std::vector<std::size_t> &labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    total += (samples.row(i) - centers.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])))
                 .squaredNorm();
  }
  return total;
}

Matrix kmeanspp_seeds(const Matrix &samples, std::size_t k, std::mt19937_64 &rng) {
  const Eigen::Index n = samples.rows();
  Matrix centers(static_cast<Eigen::Index>(k), samples.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = samples.row(first(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    d2[static_cast<std::size_t>(i)] = (samples.row(i) - centers.row(0)).squaredNorm();
  }
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Eigen::Index chosen = n - 1;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double target = u(rng);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc > target && d2[static_cast<std::size_t>(i)] > 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centers.row(static_cast<Eigen::Index>(c)) = samples.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto &d = d2[static_cast<std::size_t>(i)];
      d = std::min(d, (samples.row(i) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm());
    }
  }
  return centers;
}

// Recomputes centers as cluster means. An empty cluster takes the point of
// the largest cluster that lies farthest from that cluster's center.
Matrix update_centers(const Matrix &samples, const Matrix &centers, std::vector<std::size_t> &labels) {
  const std::size_t k = static_cast<std::size_t>(centers.rows());
  std::vector<std::size_t> counts(k, 0);
  for (auto l : labels) {
    ++counts[l];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] != 0) {
      continue;
    }
    const std::size_t largest =
        static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      if (labels[static_cast<std::size_t>(i)] != largest) {
        continue;
      }
      const double d = (samples.row(i) - centers.row(static_cast<Eigen::Index>(largest))).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    labels[static_cast<std::size_t>(far)] = j;
    --counts[largest];
    ++counts[j];
  }
  Matrix next = Matrix::Zero(centers.rows(), centers.cols());
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    next.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) += samples.row(i);
  }
  for (std::size_t j = 0; j < k; ++j) {
    next.row(static_cast<Eigen::Index>(j)) /= static_cast<double>(counts[j]);
  }
  return next;
}

std::size_t nearest(const Matrix &centers, const Eigen::Ref<const Eigen::RowVectorXd> &x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centers.rows(); ++j) {
    const double d = (centers.row(j) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(j);
    }
  }
  return best;
}

} // namespace

std::vector<std::size_t> assign_all(const Matrix &centers, const Matrix &samples) {
  std::vector<std::size_t> labels(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    labels[static_cast<std::size_t>(i)] = nearest(centers, samples.row(i));
  }
  return labels;
}

std::size_t count_distinct_rows(const Matrix &samples) {
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    auto &row = rows.emplace_back(static_cast<std::size_t>(samples.cols()));
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
      row[static_cast<std::size_t>(j)] = samples(i, j);
    }
  }
  std::sort(rows.begin(), rows.end());
  return static_cast<std::size_t>(std::unique(rows.begin(), rows.end()) - rows.begin());
}

KMeansModel kmeans_fit_from(const Matrix &samples, const Matrix &initial_centers, int max_iter) {
  require(initial_centers.rows() >= 1, ErrorKind::InvalidConfiguration, "k-means needs K >= 1");
  require(samples.cols() == initial_centers.cols(), ErrorKind::Shape, "sample and center widths differ");
  require(samples.rows() >= initial_centers.rows(), ErrorKind::InvalidConfiguration,
          "fewer samples than clusters");
  require(samples.allFinite(), ErrorKind::InvalidData, "k-means samples must be finite");

  KMeansModel model;
  model.centers = initial_centers;
  std::vector<std::size_t> labels = assign_all(model.centers, samples);
  model.inertia_history.push_back(labelled_inertia(samples, model.centers, labels));
  for (int it = 0; it < max_iter; ++it) {
    model.centers = update_centers(samples, model.centers, labels);
    std::vector<std::size_t> next = assign_all(model.centers, samples);
    model.inertia_history.push_back(labelled_inertia(samples, model.centers, next));
    model.iterations = it + 1;
    const bool fixpoint = next == labels;
    labels = std::move(next);
    if (fixpoint) {
      break;
    }
  }
  model.inertia = model.inertia_history.back();
  return model;
}

KMeansModel kmeans_fit(const Matrix &samples, std::size_t k, std::uint64_t seed, int max_iter, int n_init) {
  require(k >= 1, ErrorKind::InvalidConfiguration, "k-means needs K >= 1");
  require(n_init >= 1, ErrorKind::InvalidConfiguration, "k-means needs n_init >= 1");
  require(samples.rows() > 0, ErrorKind::InvalidInput, "k-means needs samples");
  require(samples.allFinite(), ErrorKind::InvalidData, "k-means samples must be finite");
  const std::size_t distinct = count_distinct_rows(samples);
  require(distinct >= k, ErrorKind::InvalidConfiguration,
          "only " + std::to_string(distinct) + " distinct samples for K = " + std::to_string(k));

  std::mt19937_64 rng(seed);
  KMeansModel best;
  for (int run = 0; run < n_init; ++run) {
    KMeansModel model = kmeans_fit_from(samples, kmeanspp_seeds(samples, k, rng), max_iter);
    if (run == 0 || model.inertia < best.inertia) {
      best = std::move(model);
    }
  }
  return best;
}

std::size_t assign_cluster(const KMeansModel &model, const Vector &x) {
  require(x.size() == model.dim(), ErrorKind::Shape,
          "sample width " + std::to_string(x.size()) + " does not match center width " +
              std::to_string(model.dim()));
  require(model.k() >= 1, ErrorKind::InvalidState, "k-means model has no centers");
  return nearest(model.centers, x.transpose());
}

std::vector<double> silhouette_samples(const Matrix &samples, const std::vector<std::size_t> &labels,
                                       std::size_t k) {
  const Eigen::Index n = samples.rows();
  require(labels.size() == static_cast<std::size_t>(n), ErrorKind::Shape, "one label per sample required");
  std::vector<std::size_t> counts(k, 0);
  for (auto l : labels) {
    require(l < k, ErrorKind::Shape, "label out of range");
    ++counts[l];
  }
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  std::vector<double> sums(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) {
        sums[labels[static_cast<std::size_t>(j)]] += (samples.row(i) - samples.row(j)).norm();
      }
    }
    const std::size_t own = labels[static_cast<std::size_t>(i)];
    if (counts[own] <= 1) {
      continue;
    }
    const double a = sums[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != own && counts[c] > 0) {
        b = std::min(b, sums[c] / static_cast<double>(counts[c]));
      }
    }
    if (!std::isfinite(b)) {
      continue;
    }
    const double denom = std::max(a, b);
    out[static_cast<std::size_t>(i)] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return out;
}

double mean_silhouette(const Matrix &samples, const std::vector<std::size_t> &labels, std::size_t k) {
  const auto s = silhouette_samples(samples, labels, k);
  return s.empty() ? 0.0 : std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

KSelection silhouette_select_k(const Matrix &samples, std::vector<std::size_t> candidates, std::uint64_t seed,
                               int max_iter, std::size_t max_samples) {
  require(!candidates.empty(), ErrorKind::InvalidConfiguration, "no candidate K values");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  require(candidates.front() >= 2, ErrorKind::InvalidConfiguration, "silhouette selection needs every K >= 2");
  require(samples.rows() > 0, ErrorKind::InvalidInput, "silhouette selection needs samples");
  require(count_distinct_rows(samples) >= 2, ErrorKind::DegenerateData,
          "all samples are identical; silhouette is undefined");

  Matrix scored = samples;
  if (static_cast<std::size_t>(samples.rows()) > max_samples) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(samples.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng() % i)]);
    }
    idx.resize(max_samples);
    std::sort(idx.begin(), idx.end());
    scored.resize(static_cast<Eigen::Index>(max_samples), samples.cols());
    for (std::size_t r = 0; r < max_samples; ++r) {
      scored.row(static_cast<Eigen::Index>(r)) = samples.row(idx[r]);
    }
  }

  KSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k : candidates) {
    const KMeansModel model = kmeans_fit(samples, k, seed, max_iter);
    const double score = mean_silhouette(scored, assign_all(model.centers, scored), k);
    sel.scores.emplace_back(k, score);
    if (score > best) {
      best = score;
      sel.best_k = k;
    }
  }
  return sel;
}

Vector cluster_bias(const KMeansModel &model, const Vector &x, ClusterMode mode, double beta) {
  const std::size_t j = assign_cluster(model, x);
  const Vector center = model.centers.row(static_cast<Eigen::Index>(j)).transpose();
  if (mode == ClusterMode::Hard) {
    return center;
  }
  require(beta >= 0.0 && beta <= 1.0, ErrorKind::InvalidInput, "beta must lie in [0,1]");
  return beta * x + (1.0 - beta) * center;
}

} // namespace expbias::bias
