#pragma once

#include <string>
#include <vector>

#include "pgg/core.hpp"
#include "pgg/dtw.hpp"

namespace pgg {

// Partition of a panel into k clusters. Labels are 0-based internally and
// already ordered by ascending cluster mean action (the reporting convention),
// so label c corresponds to cluster c+1 in emitted CSVs.
struct ClusterSolution {
  int k = 0;
  std::vector<std::string> uids;
  std::vector<int> labels;
  std::vector<int> sizes;

  void validate() const;
};

enum class Linkage { Average, Complete, WardEmbedding };

// Spectral clustering on a precomputed distance matrix: Gaussian affinity with
// sigma = median off-diagonal distance, symmetric normalized Laplacian,
// row-normalized leading eigenvectors, k-means++ with 20 restarts.
ClusterSolution spectral_cluster(const DistanceMatrix& dm, const Panel& panel,
                                 int k, std::uint64_t seed);

// PAM-style k-medoids (BUILD + SWAP to a local optimum).
ClusterSolution kmedoids_cluster(const DistanceMatrix& dm, const Panel& panel,
                                 int k, std::uint64_t seed);

// DBA k-means: alternate DBA centers with DTW assignment.
ClusterSolution dba_kmeans_cluster(const Panel& panel, int k, DtwDims dims,
                                   std::uint64_t seed, int max_iter = 20);

ClusterSolution agglomerative_cluster(const DistanceMatrix& dm,
                                      const Panel& panel, int k,
                                      Linkage linkage);

struct SilhouetteReport {
  std::vector<double> per_point;          // in [-1, 1]; singletons get 0
  std::vector<double> per_cluster_mean;
  std::vector<double> per_cluster_sd;
  double overall_mean = 0.0;
};

SilhouetteReport silhouette(const DistanceMatrix& dm,
                            const std::vector<int>& labels, int k);

struct CviRow {
  int k = 0;
  double sil = 0.0, ch = 0.0, icv = 0.0;        // raw indices
  double sil_n = 0.0, ch_n = 0.0, icv_n = 0.0;  // min-max normalized; icv_n inverted
  double mean_score = 0.0;
  int min_size = 0;
};

struct CviReport {
  std::vector<CviRow> rows;
};

// Fits spectral clustering for each k in [k_min, k_max], computes Silhouette,
// a Frechet-style Calinski-Harabasz index and (inverted) intra-cluster
// variance, min-max normalizes each across the grid and averages.
CviReport cvi_report(const DistanceMatrix& dm, const Panel& panel, DtwDims dims,
                     int k_min, int k_max, std::uint64_t seed);

// k maximizing the mean normalized score among candidates whose smallest
// cluster has at least min_cluster_size members; ties go to the smaller k.
int select_k(const CviReport& report, int min_cluster_size = 30);

// CSV persistence (`uid,cluster`, 1-based cluster ids).
void save_assignments(const ClusterSolution& sol, const std::string& path);
ClusterSolution load_assignments(const std::string& path);
void save_cvi_report(const CviReport& report, const std::string& path);

// Per-cluster member lists in label order.
std::vector<std::vector<int>> cluster_members(const ClusterSolution& sol);

}  // namespace pgg
