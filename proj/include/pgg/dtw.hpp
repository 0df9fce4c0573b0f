#pragma once

#include <string>
#include <vector>

#include "pgg/core.hpp"

namespace pgg {

// Which series enter the local cost.
enum class DtwDims { ActionOnly, StateOnly, Joint };

DtwDims parse_dims(const std::string& s);

// Symmetric pairwise distance matrix with zero diagonal. DTW is not a metric;
// no triangle inequality is implied.
struct DistanceMatrix {
  int n = 0;
  std::vector<double> values;  // row-major n*n

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n + j]; }
  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * n + j]; }

  static DistanceMatrix zeros(int n);
  void validate() const;
};

// Dependent multivariate DTW: one warping path, squared local cost summed over
// the included dimensions. Returns the raw cumulative cost D(T,T).
double dtw_distance(const Trajectory& x, const Trajectory& y, DtwDims dims);

// Point-wise squared distance over the included dimensions (the
// local-alignment baseline). Always >= dtw_distance on the same dims.
double euclidean_distance(const Trajectory& x, const Trajectory& y, DtwDims dims);

// Pairwise DTW distances. Pairs (i<j) are partitioned across `threads`
// workers; the result is identical for any thread count.
DistanceMatrix distance_matrix(const Panel& panel, DtwDims dims, int threads = 1);
DistanceMatrix euclidean_distance_matrix(const Panel& panel, DtwDims dims);

// Optimal warping path of x against y as (i, j) index pairs, starting at
// (0,0) and ending at (T-1, T-1). Tie-break prefers the diagonal step.
std::vector<std::pair<int, int>> warping_path(const Trajectory& x,
                                              const Trajectory& y, DtwDims dims);

// DBA centroid with per-round IQR bands over the member trajectories.
struct Barycenter {
  std::vector<double> actions;
  std::vector<double> states;
  std::vector<double> action_iqr_low, action_iqr_high;
  std::vector<double> state_iqr_low, state_iqr_high;
  // Within-set sum of DTW distances after each iteration (index 0 is the
  // medoid initialization); non-increasing.
  std::vector<double> objective_history;
};

Barycenter dba_barycenter(const std::vector<Trajectory>& members, DtwDims dims,
                          int max_iter = 30, std::uint64_t seed = 0);

// CSV persistence: N rows x N columns, no header.
void save_distance_matrix(const DistanceMatrix& dm, const std::string& path);
DistanceMatrix load_distance_matrix(const std::string& path);

}  // namespace pgg
