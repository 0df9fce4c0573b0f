#pragma once

#include <string>
#include <vector>

#include "pgg/cluster.hpp"
#include "pgg/core.hpp"
#include "pgg/dtw.hpp"

namespace pgg {

// A labeling of a uid set, used for partition-agreement metrics.
struct Partition {
  std::vector<std::string> uids;
  std::vector<int> labels;
};

Partition to_partition(const ClusterSolution& sol);

// Chance-adjusted Rand index via the contingency table. Throws if the uid
// sets differ.
double adjusted_rand_index(const Partition& a, const Partition& b);

// Mutual information normalized by the arithmetic mean of the entropies.
// A zero-entropy partition yields 0 by convention.
double normalized_mutual_information(const Partition& a, const Partition& b);

// Maximum-weight assignment on a k x k overlap matrix (Hungarian algorithm).
// Returns for each row the matched column.
std::vector<int> hungarian_max_assignment(
    const std::vector<std::vector<double>>& weights);

struct StabilityReport {
  int replications = 0;
  int skipped = 0;
  double subsample_fraction = 0.0;
  double ari_mean = 0.0, ari_sd = 0.0;
  double nmi_mean = 0.0, nmi_sd = 0.0;
  std::vector<std::string> uids;
  std::vector<double> return_rate;           // per uid, over reps where sampled
  std::vector<double> cluster_return_mean;   // per baseline cluster
  double overall_return_mean = 0.0;
};

// Per replication: subsample `fraction` of participants without replacement,
// recompute DTW distances, re-cluster spectrally at the baseline k, match
// clusters to the baseline by Hungarian max overlap and record agreement.
// Replications run on derived seeds and may execute in parallel.
StabilityReport bootstrap_stability(const Panel& panel,
                                    const ClusterSolution& base, DtwDims dims,
                                    int reps = 100, double fraction = 0.8,
                                    std::uint64_t seed = 0, int threads = 1);

// Chance benchmark: baseline and replications are independent uniform
// labelings in a shared label space, so no overlap matching is applied.
// Expected return rate is 1/k.
double random_assignment_return_rate(int n, int k, int reps, double fraction,
                                     std::uint64_t seed);

struct HeterogeneityReport {
  std::vector<double> cluster_sil_mean, cluster_sil_sd;
  double share_negative_silhouette = 0.0;
  double within_distance_mean = 0.0, within_distance_sd = 0.0;
  double between_distance_mean = 0.0, between_distance_sd = 0.0;
  double separation_ratio = 0.0;
  double total_variance = 0.0;
  double between_variance_share = 0.0;
  double within_variance_share = 0.0;
  bool degenerate = false;
};

// Within/between pairwise distances plus a Frechet-style DTW variance
// decomposition against DBA barycenters.
HeterogeneityReport heterogeneity(const DistanceMatrix& dm, const Panel& panel,
                                  const ClusterSolution& sol, DtwDims dims);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

WelchResult welch_t_test(const std::vector<double>& x,
                         const std::vector<double>& y);

// Regularized incomplete beta function (exposed for the t CDF and tests).
double regularized_incomplete_beta(double a, double b, double x);

void save_stability_report(const StabilityReport& r, const std::string& path);
void save_heterogeneity_report(const HeterogeneityReport& r,
                               const std::string& path);

}  // namespace pgg
