#pragma once

#include "expbias/linalg.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace expbias::bias {

struct KMeansModel {
  Matrix centers; // K x n
  double inertia = 0.0;
  /// Inertia after each assignment step, first entry from the seeds.
  std::vector<double> inertia_history;
  int iterations = 0;

  std::size_t k() const { return static_cast<std::size_t>(centers.rows()); }
  Eigen::Index dim() const { return centers.cols(); }
};

/// Lloyd's algorithm from k-means++ seeding. Stops at an assignment fixpoint
/// or after `max_iter` updates. With n_init > 1 the run with the lowest final
/// inertia wins (earliest on ties). Samples are rows.
KMeansModel kmeans_fit(const Matrix &samples, std::size_t k, std::uint64_t seed, int max_iter = 300, int n_init = 1);

/// Lloyd's algorithm from explicit initial centers.
KMeansModel kmeans_fit_from(const Matrix &samples, const Matrix &initial_centers, int max_iter = 300);

/// Index of the nearest center by squared Euclidean distance; lowest index
/// wins ties.
std::size_t assign_cluster(const KMeansModel &model, const Vector &x);
std::vector<std::size_t> assign_all(const Matrix &centers, const Matrix &samples);

std::size_t count_distinct_rows(const Matrix &samples);

/// Per-sample silhouette coefficients (b - a) / max(a, b). Samples in
/// singleton clusters score 0.
std::vector<double> silhouette_samples(const Matrix &samples, const std::vector<std::size_t> &labels,
                                       std::size_t k);
double mean_silhouette(const Matrix &samples, const std::vector<std::size_t> &labels, std::size_t k);

struct KSelection {
  std::size_t best_k = 0;
  std::vector<std::pair<std::size_t, double>> scores; // (K, mean silhouette), ascending K
};

/// Fits every candidate K and keeps the one with the highest mean silhouette
/// (smaller K on ties). Datasets larger than `max_samples` rows are scored on
/// a seeded subsample.
KSelection silhouette_select_k(const Matrix &samples, std::vector<std::size_t> candidates, std::uint64_t seed,
                               int max_iter = 300, std::size_t max_samples = 4000);

enum class ClusterMode { Hard, Interpolated };

/// Hard: nearest center. Interpolated: beta * x + (1 - beta) * nearest center.
Vector cluster_bias(const KMeansModel &model, const Vector &x, ClusterMode mode, double beta);

} // namespace expbias::bias
