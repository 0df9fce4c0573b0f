#include "pgg/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pgg/csv.hpp"
#include "pgg/util.hpp"

namespace pgg {

DtwDims parse_dims(const std::string& s) {
  if (s == "action" || s == "action_only") return DtwDims::ActionOnly;
  if (s == "state" || s == "state_only") return DtwDims::StateOnly;
  if (s == "joint") return DtwDims::Joint;
  throw std::runtime_error("unknown dims '" + s + "' (action|state|joint)");
}

DistanceMatrix DistanceMatrix::zeros(int n) {
  DistanceMatrix dm;
  dm.n = n;
  dm.values.assign(static_cast<std::size_t>(n) * n, 0.0);
  return dm;
}

void DistanceMatrix::validate() const {
  for (int i = 0; i < n; ++i) {
    if (at(i, i) != 0.0)
      throw std::invalid_argument("DistanceMatrix: nonzero diagonal");
    for (int j = 0; j < i; ++j) {
      if (at(i, j) < 0.0)
        throw std::invalid_argument("DistanceMatrix: negative entry");
      if (std::abs(at(i, j) - at(j, i)) > 1e-12)
        throw std::invalid_argument("DistanceMatrix: asymmetric");
    }
  }
}

namespace {

inline double local_cost(const Trajectory& x, const Trajectory& y, int i, int j,
                         DtwDims dims) {
  double c = 0.0;
  if (dims != DtwDims::StateOnly) {
    const double d = x.actions[i] - y.actions[j];
    c += d * d;
  }
  if (dims != DtwDims::ActionOnly) {
    const double d = x.states[i] - y.states[j];
    c += d * d;
  }
  return c;
}

void check_lengths(const Trajectory& x, const Trajectory& y) {
  if (x.game_length() != y.game_length() || x.game_length() < 1)
    throw std::domain_error("dtw: trajectories must share a positive length");
}

// Full cumulative cost matrix D.
std::vector<double> cost_matrix(const Trajectory& x, const Trajectory& y,
                                DtwDims dims) {
  const int T = x.game_length();
  std::vector<double> D(static_cast<std::size_t>(T) * T);
  auto at = [&](int i, int j) -> double& {
    return D[static_cast<std::size_t>(i) * T + j];
  };
  at(0, 0) = local_cost(x, y, 0, 0, dims);
  for (int i = 1; i < T; ++i) at(i, 0) = at(i - 1, 0) + local_cost(x, y, i, 0, dims);
  for (int j = 1; j < T; ++j) at(0, j) = at(0, j - 1) + local_cost(x, y, 0, j, dims);
  for (int i = 1; i < T; ++i)
    for (int j = 1; j < T; ++j)
      at(i, j) = local_cost(x, y, i, j, dims) +
                 std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
  return D;
}

}  // namespace

double dtw_distance(const Trajectory& x, const Trajectory& y, DtwDims dims) {
  check_lengths(x, y);
  const int T = x.game_length();
  // Rolling two-row DP.
  std::vector<double> prev(T), cur(T);
  prev[0] = local_cost(x, y, 0, 0, dims);
  for (int j = 1; j < T; ++j) prev[j] = prev[j - 1] + local_cost(x, y, 0, j, dims);
  for (int i = 1; i < T; ++i) {
    cur[0] = prev[0] + local_cost(x, y, i, 0, dims);
    for (int j = 1; j < T; ++j)
      cur[j] = local_cost(x, y, i, j, dims) +
               std::min({prev[j - 1], prev[j], cur[j - 1]});
    std::swap(prev, cur);
  }
  return prev[T - 1];
}

double euclidean_distance(const Trajectory& x, const Trajectory& y, DtwDims dims) {
  check_lengths(x, y);
  double total = 0.0;
  for (int t = 0; t < x.game_length(); ++t) total += local_cost(x, y, t, t, dims);
  return total;
}

std::vector<std::pair<int, int>> warping_path(const Trajectory& x,
                                              const Trajectory& y, DtwDims dims) {
  check_lengths(x, y);
  const int T = x.game_length();
  const auto D = cost_matrix(x, y, dims);
  auto at = [&](int i, int j) { return D[static_cast<std::size_t>(i) * T + j]; };
  std::vector<std::pair<int, int>> path;
  int i = T - 1, j = T - 1;
  path.push_back({i, j});
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = at(i - 1, j - 1), up = at(i - 1, j), left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    path.push_back({i, j});
  }
  std::reverse(path.begin(), path.end());
  return path;
}

DistanceMatrix distance_matrix(const Panel& panel, DtwDims dims, int threads) {
  if (panel.size() == 0) throw std::domain_error("distance_matrix: empty panel");
  panel.validate();
  const int n = panel.size();
  DistanceMatrix dm = DistanceMatrix::zeros(n);

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.push_back({i, j});

  const int nthreads = std::max(1, threads);
  auto worker = [&](int w) {
    for (std::size_t p = static_cast<std::size_t>(w); p < pairs.size();
         p += static_cast<std::size_t>(nthreads)) {
      const auto [i, j] = pairs[p];
      const double d =
          dtw_distance(panel.trajectories[i], panel.trajectories[j], dims);
      dm.at(i, j) = d;
      dm.at(j, i) = d;
    }
  };
  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  return dm;
}

DistanceMatrix euclidean_distance_matrix(const Panel& panel, DtwDims dims) {
  if (panel.size() == 0) throw std::domain_error("distance_matrix: empty panel");
  const int n = panel.size();
  DistanceMatrix dm = DistanceMatrix::zeros(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d =
          euclidean_distance(panel.trajectories[i], panel.trajectories[j], dims);
      dm.at(i, j) = d;
      dm.at(j, i) = d;
    }
  return dm;
}

namespace {

double summed_dtw(const Trajectory& center, const std::vector<Trajectory>& members,
                  DtwDims dims) {
  double total = 0.0;
  for (const auto& m : members) total += dtw_distance(center, m, dims);
  return total;
}

}  // namespace

Barycenter dba_barycenter(const std::vector<Trajectory>& members, DtwDims dims,
                          int max_iter, std::uint64_t seed) {
  if (members.empty()) throw std::domain_error("dba_barycenter: no members");
  (void)seed;  // tie-breaking is by lowest index, which is already deterministic
  const int T = members.front().game_length();
  for (const auto& m : members)
    if (m.game_length() != T)
      throw std::domain_error("dba_barycenter: mixed lengths");

  // Medoid initialization.
  int medoid = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < members.size(); ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < members.size(); ++j)
      if (i != j) total += dtw_distance(members[i], members[j], dims);
    if (total < best) {
      best = total;
      medoid = static_cast<int>(i);
    }
  }

  Trajectory center = members[static_cast<std::size_t>(medoid)];
  center.uid = "barycenter";
  Barycenter out;
  out.objective_history.push_back(summed_dtw(center, members, dims));

  for (int iter = 0; iter < max_iter; ++iter) {
    std::vector<double> acc_a(static_cast<std::size_t>(T), 0.0);
    std::vector<double> acc_s(static_cast<std::size_t>(T), 0.0);
    std::vector<double> counts(static_cast<std::size_t>(T), 0.0);
    for (const auto& m : members) {
      // Path indices: first = center, second = member.
      for (const auto& [ci, mi] : warping_path(center, m, dims)) {
        acc_a[static_cast<std::size_t>(ci)] += m.actions[static_cast<std::size_t>(mi)];
        acc_s[static_cast<std::size_t>(ci)] += m.states[static_cast<std::size_t>(mi)];
        counts[static_cast<std::size_t>(ci)] += 1.0;
      }
    }
    Trajectory updated = center;
    for (int t = 0; t < T; ++t) {
      if (counts[static_cast<std::size_t>(t)] > 0.0) {
        updated.actions[static_cast<std::size_t>(t)] =
            acc_a[static_cast<std::size_t>(t)] / counts[static_cast<std::size_t>(t)];
        updated.states[static_cast<std::size_t>(t)] =
            acc_s[static_cast<std::size_t>(t)] / counts[static_cast<std::size_t>(t)];
      }
    }
    const double obj = summed_dtw(updated, members, dims);
    if (obj > out.objective_history.back()) break;  // keep previous center
    center = updated;
    const double prev = out.objective_history.back();
    out.objective_history.push_back(obj);
    if (prev - obj < 1e-9) break;
  }

  out.actions = center.actions;
  out.states = center.states;
  out.action_iqr_low.resize(static_cast<std::size_t>(T));
  out.action_iqr_high.resize(static_cast<std::size_t>(T));
  out.state_iqr_low.resize(static_cast<std::size_t>(T));
  out.state_iqr_high.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    std::vector<double> av, sv;
    for (const auto& m : members) {
      av.push_back(m.actions[static_cast<std::size_t>(t)]);
      sv.push_back(m.states[static_cast<std::size_t>(t)]);
    }
    out.action_iqr_low[static_cast<std::size_t>(t)] = percentile(av, 25.0);
    out.action_iqr_high[static_cast<std::size_t>(t)] = percentile(av, 75.0);
    out.state_iqr_low[static_cast<std::size_t>(t)] = percentile(sv, 25.0);
    out.state_iqr_high[static_cast<std::size_t>(t)] = percentile(sv, 75.0);
  }
  return out;
}

void save_distance_matrix(const DistanceMatrix& dm, const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(static_cast<std::size_t>(dm.n));
  for (int i = 0; i < dm.n; ++i) {
    std::ostringstream ss;
    for (int j = 0; j < dm.n; ++j) {
      if (j) ss << ',';
      ss << fmt_num(dm.at(i, j));
    }
    lines.push_back(ss.str());
  }
  write_lines(path, lines);
}

DistanceMatrix load_distance_matrix(const std::string& path) {
  const CsvTable t = read_csv(path, /*expect_header=*/false);
  const int n = static_cast<int>(t.rows.size());
  DistanceMatrix dm = DistanceMatrix::zeros(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(t.rows[static_cast<std::size_t>(i)].size()) != n)
      throw std::runtime_error("distance matrix CSV is not square");
    for (int j = 0; j < n; ++j)
      dm.at(i, j) = std::stod(t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  }
  dm.validate();
  return dm;
}

}  // namespace pgg
