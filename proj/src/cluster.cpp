#include "pgg/cluster.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pgg/csv.hpp"
#include "pgg/util.hpp"

namespace pgg {

void ClusterSolution::validate() const {
  if (k < 1) throw std::invalid_argument("ClusterSolution: k < 1");
  if (uids.size() != labels.size())
    throw std::invalid_argument("ClusterSolution: uid/label size mismatch");
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) {
    if (l < 0 || l >= k)
      throw std::invalid_argument("ClusterSolution: label out of range");
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int c : counts)
    if (c == 0) throw std::invalid_argument("ClusterSolution: empty cluster");
}

std::vector<std::vector<int>> cluster_members(const ClusterSolution& sol) {
  std::vector<std::vector<int>> members(static_cast<std::size_t>(sol.k));
  for (std::size_t i = 0; i < sol.labels.size(); ++i)
    members[static_cast<std::size_t>(sol.labels[i])].push_back(static_cast<int>(i));
  return members;
}

namespace {

// Relabel clusters so that ids ascend with the cluster mean action
// (the reporting convention), and fill uids/sizes.
ClusterSolution finalize(const Panel& panel, int k, std::vector<int> raw_labels) {
  std::vector<double> mean_action(static_cast<std::size_t>(k), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    const auto& a = panel.trajectories[i].actions;
    mean_action[static_cast<std::size_t>(raw_labels[i])] += mean(a);
    ++counts[static_cast<std::size_t>(raw_labels[i])];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw std::runtime_error("clustering produced an empty cluster");
    mean_action[static_cast<std::size_t>(c)] /= counts[static_cast<std::size_t>(c)];
  }
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return mean_action[static_cast<std::size_t>(a)] <
           mean_action[static_cast<std::size_t>(b)];
  });
  std::vector<int> remap(static_cast<std::size_t>(k));
  for (int pos = 0; pos < k; ++pos)
    remap[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos;

  ClusterSolution sol;
  sol.k = k;
  sol.sizes.assign(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    sol.uids.push_back(panel.trajectories[i].uid);
    const int l = remap[static_cast<std::size_t>(raw_labels[i])];
    sol.labels.push_back(l);
    ++sol.sizes[static_cast<std::size_t>(l)];
  }
  sol.validate();
  return sol;
}

double median_off_diagonal(const DistanceMatrix& dm) {
  std::vector<double> v;
  for (int i = 0; i < dm.n; ++i)
    for (int j = i + 1; j < dm.n; ++j) v.push_back(dm.at(i, j));
  if (v.empty()) return 0.0;
  return percentile(std::move(v), 50.0);
}

// Lloyd's algorithm with k-means++ seeding; 20 restarts, best inertia.
std::vector<int> kmeans_embedding(const Eigen::MatrixXd& X, int k,
                                  std::uint64_t seed, int restarts = 20) {
  const int n = static_cast<int>(X.rows());
  std::vector<int> best_labels;
  double best_inertia = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < restarts; ++restart) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(restart));
    // k-means++ seeding
    std::vector<int> centers_idx;
    centers_idx.push_back(rng.uniform_int(n));
    Eigen::VectorXd d2 = (X.rowwise() - X.row(centers_idx[0])).rowwise().squaredNorm();
    while (static_cast<int>(centers_idx.size()) < k) {
      const double total = d2.sum();
      int pick = 0;
      if (total <= 0.0) {
        pick = rng.uniform_int(n);
      } else {
        double r = rng.uniform() * total;
        for (pick = 0; pick < n - 1; ++pick) {
          r -= d2[pick];
          if (r <= 0.0) break;
        }
      }
      centers_idx.push_back(pick);
      const Eigen::VectorXd dn =
          (X.rowwise() - X.row(pick)).rowwise().squaredNorm();
      d2 = d2.cwiseMin(dn);
    }
    Eigen::MatrixXd centers(k, X.cols());
    for (int c = 0; c < k; ++c) centers.row(c) = X.row(centers_idx[static_cast<std::size_t>(c)]);

    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    for (int iter = 0; iter < 100; ++iter) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        int arg = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          const double d = (X.row(i) - centers.row(c)).squaredNorm();
          if (d < bd) {
            bd = d;
            arg = c;
          }
        }
        if (labels[static_cast<std::size_t>(i)] != arg) {
          labels[static_cast<std::size_t>(i)] = arg;
          changed = true;
        }
      }
      // Update centers; an emptied center keeps its position.
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
      std::vector<int> counts(static_cast<std::size_t>(k), 0);
      for (int i = 0; i < n; ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += X.row(i);
        ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
      }
      for (int c = 0; c < k; ++c)
        if (counts[static_cast<std::size_t>(c)] > 0)
          centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      if (!changed) break;
    }
    double inertia = 0.0;
    for (int i = 0; i < n; ++i)
      inertia += (X.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    if (inertia < best_inertia - 1e-15) {
      best_inertia = inertia;
      best_labels = labels;
    }
  }
  return best_labels;
}

Eigen::MatrixXd spectral_embedding(const DistanceMatrix& dm, int k) {
  const int n = dm.n;
  const double sigma = median_off_diagonal(dm);
  if (sigma <= 0.0)
    throw std::runtime_error(
        "spectral_cluster: degenerate affinity (all points identical)");
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = dm.at(i, j);
      A(i, j) = std::exp(-d * d / (2.0 * sigma * sigma));
    }
  Eigen::VectorXd deg = A.rowwise().sum();
  Eigen::VectorXd dinv = deg.array().rsqrt();
  // Symmetric normalized Laplacian L = I - D^-1/2 A D^-1/2.
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(n, n) -
                      dinv.asDiagonal() * A * dinv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_cluster: eigendecomposition failed");
  // k eigenvectors of the smallest eigenvalues; rows normalized to unit length.
  Eigen::MatrixXd X = es.eigenvectors().leftCols(k);
  for (int i = 0; i < n; ++i) {
    const double norm = X.row(i).norm();
    if (norm > 0.0) X.row(i) /= norm;
  }
  return X;
}

}  // namespace

ClusterSolution spectral_cluster(const DistanceMatrix& dm, const Panel& panel,
                                 int k, std::uint64_t seed) {
  if (k < 2 || k > dm.n)
    throw std::domain_error("spectral_cluster: require 2 <= k <= N");
  if (k == dm.n) {
    std::vector<int> labels(static_cast<std::size_t>(dm.n));
    std::iota(labels.begin(), labels.end(), 0);
    return finalize(panel, k, labels);
  }
  const Eigen::MatrixXd X = spectral_embedding(dm, k);
  return finalize(panel, k, kmeans_embedding(X, k, seed));
}

ClusterSolution kmedoids_cluster(const DistanceMatrix& dm, const Panel& panel,
                                 int k, std::uint64_t seed) {
  if (k < 2 || k > dm.n)
    throw std::domain_error("kmedoids_cluster: require 2 <= k <= N");
  const int n = dm.n;
  (void)seed;  // BUILD is greedy-deterministic; seed kept for interface parity

  // PAM BUILD: greedily add the medoid giving the largest cost reduction.
  std::vector<int> medoids;
  {
    int first = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double total = 0.0;
      for (int j = 0; j < n; ++j) total += dm.at(i, j);
      if (total < best) {
        best = total;
        first = i;
      }
    }
    medoids.push_back(first);
    std::vector<double> nearest(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) nearest[static_cast<std::size_t>(j)] = dm.at(first, j);
    while (static_cast<int>(medoids.size()) < k) {
      int pick = -1;
      double gain_best = -std::numeric_limits<double>::infinity();
      for (int cand = 0; cand < n; ++cand) {
        if (std::find(medoids.begin(), medoids.end(), cand) != medoids.end())
          continue;
        double gain = 0.0;
        for (int j = 0; j < n; ++j)
          gain += std::max(0.0, nearest[static_cast<std::size_t>(j)] - dm.at(cand, j));
        if (gain > gain_best) {
          gain_best = gain;
          pick = cand;
        }
      }
      medoids.push_back(pick);
      for (int j = 0; j < n; ++j)
        nearest[static_cast<std::size_t>(j)] =
            std::min(nearest[static_cast<std::size_t>(j)], dm.at(pick, j));
    }
  }

  auto total_cost = [&](const std::vector<int>& med) {
    double c = 0.0;
    for (int j = 0; j < n; ++j) {
      double b = std::numeric_limits<double>::infinity();
      for (int m : med) b = std::min(b, dm.at(m, j));
      c += b;
    }
    return c;
  };

  // SWAP phase to a local optimum.
  double cost = total_cost(medoids);
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t mi = 0; mi < medoids.size() && !improved; ++mi) {
      for (int cand = 0; cand < n && !improved; ++cand) {
        if (std::find(medoids.begin(), medoids.end(), cand) != medoids.end())
          continue;
        std::vector<int> trial = medoids;
        trial[mi] = cand;
        const double c = total_cost(trial);
        if (c < cost - 1e-12) {
          medoids = trial;
          cost = c;
          improved = true;
        }
      }
    }
  }

  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (int j = 0; j < n; ++j) {
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t mi = 0; mi < medoids.size(); ++mi) {
      if (dm.at(medoids[mi], j) < b) {
        b = dm.at(medoids[mi], j);
        labels[static_cast<std::size_t>(j)] = static_cast<int>(mi);
      }
    }
  }
  return finalize(panel, k, labels);
}

ClusterSolution dba_kmeans_cluster(const Panel& panel, int k, DtwDims dims,
                                   std::uint64_t seed, int max_iter) {
  if (k < 2 || k > panel.size())
    throw std::domain_error("dba_kmeans_cluster: require 2 <= k <= N");
  const int n = panel.size();
  Rng rng = Rng::derive(seed, 0);
  // Seed centers with k distinct random trajectories.
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  std::vector<Trajectory> centers;
  for (int c = 0; c < k; ++c)
    centers.push_back(panel.trajectories[static_cast<std::size_t>(idx[static_cast<std::size_t>(c)])]);

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int arg = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = dtw_distance(panel.trajectories[static_cast<std::size_t>(i)],
                                      centers[static_cast<std::size_t>(c)], dims);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != arg) {
        labels[static_cast<std::size_t>(i)] = arg;
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < k; ++c) {
      std::vector<Trajectory> members;
      for (int i = 0; i < n; ++i)
        if (labels[static_cast<std::size_t>(i)] == c)
          members.push_back(panel.trajectories[static_cast<std::size_t>(i)]);
      if (members.empty()) continue;
      const Barycenter b = dba_barycenter(members, dims, 10, seed);
      centers[static_cast<std::size_t>(c)].actions = b.actions;
      centers[static_cast<std::size_t>(c)].states = b.states;
    }
  }
  // Guard against emptied clusters: reassign the farthest point of the largest
  // cluster into each empty one.
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    int donor = static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                                 counts.begin());
    int far = -1;
    double fd = -1.0;
    for (int i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)] != donor) continue;
      const double d = dtw_distance(panel.trajectories[static_cast<std::size_t>(i)],
                                    centers[static_cast<std::size_t>(donor)], dims);
      if (d > fd) {
        fd = d;
        far = i;
      }
    }
    labels[static_cast<std::size_t>(far)] = c;
    --counts[static_cast<std::size_t>(donor)];
    ++counts[static_cast<std::size_t>(c)];
  }
  return finalize(panel, k, labels);
}

ClusterSolution agglomerative_cluster(const DistanceMatrix& dm,
                                      const Panel& panel, int k,
                                      Linkage linkage) {
  if (k < 2 || k > dm.n)
    throw std::domain_error("agglomerative_cluster: require 2 <= k <= N");
  const int n = dm.n;

  // Ward runs on Euclidean distances in the spectral embedding.
  DistanceMatrix work = dm;
  if (linkage == Linkage::WardEmbedding) {
    const Eigen::MatrixXd X = spectral_embedding(dm, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        work.at(i, j) = (X.row(i) - X.row(j)).squaredNorm();
  }

  // Lance-Williams agglomeration.
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups.push_back({i});
  std::vector<std::vector<double>> d(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = work.at(i, j);
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  int remaining = n;

  while (remaining > k) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (!alive[static_cast<std::size_t>(i)]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!alive[static_cast<std::size_t>(j)]) continue;
        if (d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] < best) {
          best = d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = static_cast<double>(groups[static_cast<std::size_t>(bi)].size());
    const double nj = static_cast<double>(groups[static_cast<std::size_t>(bj)].size());
    for (int h = 0; h < n; ++h) {
      if (!alive[static_cast<std::size_t>(h)] || h == bi || h == bj) continue;
      const double dih = d[static_cast<std::size_t>(bi)][static_cast<std::size_t>(h)];
      const double djh = d[static_cast<std::size_t>(bj)][static_cast<std::size_t>(h)];
      double merged = 0.0;
      switch (linkage) {
        case Linkage::Average:
          merged = (ni * dih + nj * djh) / (ni + nj);
          break;
        case Linkage::Complete:
          merged = std::max(dih, djh);
          break;
        case Linkage::WardEmbedding: {
          const double nh = static_cast<double>(groups[static_cast<std::size_t>(h)].size());
          const double dij = d[static_cast<std::size_t>(bi)][static_cast<std::size_t>(bj)];
          merged = ((ni + nh) * dih + (nj + nh) * djh - nh * dij) / (ni + nj + nh);
          break;
        }
      }
      d[static_cast<std::size_t>(bi)][static_cast<std::size_t>(h)] = merged;
      d[static_cast<std::size_t>(h)][static_cast<std::size_t>(bi)] = merged;
    }
    groups[static_cast<std::size_t>(bi)].insert(
        groups[static_cast<std::size_t>(bi)].end(),
        groups[static_cast<std::size_t>(bj)].begin(),
        groups[static_cast<std::size_t>(bj)].end());
    groups[static_cast<std::size_t>(bj)].clear();
    alive[static_cast<std::size_t>(bj)] = false;
    --remaining;
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (!alive[static_cast<std::size_t>(i)]) continue;
    for (int m : groups[static_cast<std::size_t>(i)])
      labels[static_cast<std::size_t>(m)] = next;
    ++next;
  }
  return finalize(panel, k, labels);
}

SilhouetteReport silhouette(const DistanceMatrix& dm,
                            const std::vector<int>& labels, int k) {
  if (k < 2) throw std::domain_error("silhouette: need at least two clusters");
  const int n = dm.n;
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (int c : counts)
    if (c == 0) throw std::domain_error("silhouette: empty cluster");

  SilhouetteReport rep;
  rep.per_point.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < n; ++j)
      if (j != i) sums[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += dm.at(i, j);
    const int own = labels[static_cast<std::size_t>(i)];
    if (counts[static_cast<std::size_t>(own)] == 1) {
      rep.per_point[static_cast<std::size_t>(i)] = 0.0;  // singleton convention
      continue;
    }
    const double a = sums[static_cast<std::size_t>(own)] /
                     static_cast<double>(counts[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own) continue;
      b = std::min(b, sums[static_cast<std::size_t>(c)] /
                          static_cast<double>(counts[static_cast<std::size_t>(c)]));
    }
    const double denom = std::max(a, b);
    rep.per_point[static_cast<std::size_t>(i)] = denom > 0.0 ? (b - a) / denom : 0.0;
  }

  rep.per_cluster_mean.assign(static_cast<std::size_t>(k), 0.0);
  rep.per_cluster_sd.assign(static_cast<std::size_t>(k), 0.0);
  for (int c = 0; c < k; ++c) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i)
      if (labels[static_cast<std::size_t>(i)] == c)
        v.push_back(rep.per_point[static_cast<std::size_t>(i)]);
    rep.per_cluster_mean[static_cast<std::size_t>(c)] = mean(v);
    rep.per_cluster_sd[static_cast<std::size_t>(c)] = sample_sd(v);
  }
  rep.overall_mean = mean(rep.per_point);
  return rep;
}

namespace {

struct Dispersion {
  double within = 0.0;   // sum of squared DTW distances to own barycenter
  double between = 0.0;  // size-weighted squared distances of barycenters to global
};

Dispersion dispersion(const Panel& panel, const ClusterSolution& sol,
                      DtwDims dims) {
  const auto members = cluster_members(sol);
  const Barycenter global = dba_barycenter(panel.trajectories, dims);
  Trajectory g;
  g.uid = "global";
  g.actions = global.actions;
  g.states = global.states;

  Dispersion d;
  for (int c = 0; c < sol.k; ++c) {
    std::vector<Trajectory> mt;
    for (int i : members[static_cast<std::size_t>(c)])
      mt.push_back(panel.trajectories[static_cast<std::size_t>(i)]);
    const Barycenter bc = dba_barycenter(mt, dims);
    Trajectory ct;
    ct.uid = "center";
    ct.actions = bc.actions;
    ct.states = bc.states;
    for (const auto& m : mt) {
      const double dist = dtw_distance(m, ct, dims);
      d.within += dist * dist;
    }
    const double dist = dtw_distance(ct, g, dims);
    d.between += static_cast<double>(mt.size()) * dist * dist;
  }
  return d;
}

}  // namespace

CviReport cvi_report(const DistanceMatrix& dm, const Panel& panel, DtwDims dims,
                     int k_min, int k_max, std::uint64_t seed) {
  if (dm.n <= k_max)
    throw std::domain_error("cvi_report: need more points than max(k_range)");
  CviReport rep;
  for (int k = k_min; k <= k_max; ++k) {
    const ClusterSolution sol = spectral_cluster(dm, panel, k, seed);
    CviRow row;
    row.k = k;
    row.min_size = *std::min_element(sol.sizes.begin(), sol.sizes.end());
    row.sil = silhouette(dm, sol.labels, k).overall_mean;
    const Dispersion d = dispersion(panel, sol, dims);
    const int n = dm.n;
    row.icv = d.within / static_cast<double>(n);
    const double w = d.within / static_cast<double>(n - k);
    row.ch = w > 0.0 ? (d.between / static_cast<double>(k - 1)) / w
                     : std::numeric_limits<double>::infinity();
    rep.rows.push_back(row);
  }

  auto normalize = [&](auto get, auto set, bool invert) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& r : rep.rows) {
      const double v = get(r);
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    for (auto& r : rep.rows) {
      double v = get(r);
      if (!std::isfinite(v)) v = hi;
      double x = hi > lo ? (v - lo) / (hi - lo) : 0.5;
      if (invert) x = 1.0 - x;
      set(r, x);
    }
  };
  normalize([](const CviRow& r) { return r.sil; },
            [](CviRow& r, double v) { r.sil_n = v; }, false);
  normalize([](const CviRow& r) { return r.ch; },
            [](CviRow& r, double v) { r.ch_n = v; }, false);
  normalize([](const CviRow& r) { return r.icv; },
            [](CviRow& r, double v) { r.icv_n = v; }, true);  // lower variance is better
  for (auto& r : rep.rows) r.mean_score = (r.sil_n + r.ch_n + r.icv_n) / 3.0;
  return rep;
}

int select_k(const CviReport& report, int min_cluster_size) {
  if (report.rows.empty()) throw std::domain_error("select_k: empty report");
  int best_k = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  std::ostringstream violations;
  for (const auto& r : report.rows) {
    if (r.min_size < min_cluster_size) {
      violations << " k=" << r.k << " (min size " << r.min_size << ")";
      continue;
    }
    if (r.mean_score > best_score + 1e-12) {
      best_score = r.mean_score;
      best_k = r.k;
    }
  }
  if (best_k < 0)
    throw std::runtime_error("select_k: no candidate meets the size floor of " +
                             std::to_string(min_cluster_size) + ";" +
                             violations.str());
  return best_k;
}

void save_assignments(const ClusterSolution& sol, const std::string& path) {
  std::vector<std::string> lines;
  lines.push_back("uid,cluster");
  for (std::size_t i = 0; i < sol.uids.size(); ++i)
    lines.push_back(sol.uids[i] + "," + std::to_string(sol.labels[i] + 1));
  write_lines(path, lines);
}

ClusterSolution load_assignments(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c_uid = t.column("uid"), c_cl = t.column("cluster");
  if (c_uid < 0 || c_cl < 0)
    throw std::runtime_error("assignments CSV requires header uid,cluster");
  ClusterSolution sol;
  int k = 0;
  for (const auto& row : t.rows) {
    sol.uids.push_back(row[static_cast<std::size_t>(c_uid)]);
    const int l = std::stoi(row[static_cast<std::size_t>(c_cl)]) - 1;
    sol.labels.push_back(l);
    k = std::max(k, l + 1);
  }
  sol.k = k;
  sol.sizes.assign(static_cast<std::size_t>(k), 0);
  for (int l : sol.labels) ++sol.sizes[static_cast<std::size_t>(l)];
  sol.validate();
  return sol;
}

void save_cvi_report(const CviReport& report, const std::string& path) {
  std::vector<std::string> lines;
  lines.push_back("k,silhouette,ch,icv,sil_n,ch_n,icv_n,mean");
  for (const auto& r : report.rows) {
    std::ostringstream ss;
    ss << r.k << ',' << fmt_num(r.sil) << ',' << fmt_num(r.ch) << ','
       << fmt_num(r.icv) << ',' << fmt_num(r.sil_n) << ',' << fmt_num(r.ch_n)
       << ',' << fmt_num(r.icv_n) << ',' << fmt_num(r.mean_score);
    lines.push_back(ss.str());
  }
  write_lines(path, lines);
}

}  // namespace pgg
