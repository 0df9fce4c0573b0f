#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "doctest.h"
#include "pgg/dtw.hpp"
#include "pgg/util.hpp"

using namespace pgg;

namespace {

double local_cost(const Trajectory& x, const Trajectory& y, int i, int j,
                  DtwDims dims) {
  double c = 0.0;
  if (dims != DtwDims::StateOnly) {
    const double d = x.actions[static_cast<std::size_t>(i)] -
                     y.actions[static_cast<std::size_t>(j)];
    c += d * d;
  }
  if (dims != DtwDims::ActionOnly) {
    const double d = x.states[static_cast<std::size_t>(i)] -
                     y.states[static_cast<std::size_t>(j)];
    c += d * d;
  }
  return c;
}

// Exhaustive minimum over all monotone warping paths (exponential; small T only).
double brute_force_dtw(const Trajectory& x, const Trajectory& y, DtwDims dims) {
  const int n = x.game_length(), m = y.game_length();
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, int, double)> walk = [&](int i, int j, double acc) {
    acc += local_cost(x, y, i, j, dims);
    if (acc >= best) return;
    if (i == n - 1 && j == m - 1) {
      best = acc;
      return;
    }
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, acc);
    if (i + 1 < n) walk(i + 1, j, acc);
    if (j + 1 < m) walk(i, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

Trajectory random_traj(Rng& rng, int len) {
  Trajectory t;
  t.uid = "r";
  for (int i = 0; i < len; ++i) {
    t.actions.push_back(rng.uniform());
    t.states.push_back(rng.uniform());
  }
  return t;
}

}  // namespace

TEST_SUITE("dtw") {

TEST_CASE("warping absorbs a shifted step while euclidean pays for it") {
  Trajectory x, y;
  x.uid = "x";
  y.uid = "y";
  x.actions = {0, 0, 1};
  x.states = {0, 0, 0};
  y.actions = {0, 1, 1};
  y.states = {0, 0, 0};
  CHECK(dtw_distance(x, y, DtwDims::ActionOnly) == doctest::Approx(0.0));
  CHECK(euclidean_distance(x, y, DtwDims::ActionOnly) == doctest::Approx(1.0));
}

TEST_CASE("joint dims sum the action and state costs along one path") {
  Trajectory x, y;
  x.uid = "x";
  y.uid = "y";
  x.actions = {0.0, 1.0};
  x.states = {0.5, 0.5};
  y.actions = {0.0, 1.0};
  y.states = {0.0, 0.0};
  // Actions align perfectly on the diagonal; states differ by 0.5 each step.
  CHECK(dtw_distance(x, y, DtwDims::ActionOnly) == doctest::Approx(0.0));
  CHECK(dtw_distance(x, y, DtwDims::Joint) == doctest::Approx(0.5));
  CHECK(dtw_distance(x, y, DtwDims::StateOnly) == doctest::Approx(0.5));
}

TEST_CASE("recurrence equals exhaustive path enumeration on random pairs") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    // The panel convention fixes a common game length, so both series share T.
    const int n = 2 + rng.uniform_int(4);
    const Trajectory x = random_traj(rng, n);
    const Trajectory y = random_traj(rng, n);
    const DtwDims dims = trial % 3 == 0   ? DtwDims::ActionOnly
                         : trial % 3 == 1 ? DtwDims::StateOnly
                                          : DtwDims::Joint;
    CHECK(dtw_distance(x, y, dims) ==
          doctest::Approx(brute_force_dtw(x, y, dims)).epsilon(1e-12));
  }
}

TEST_CASE("euclidean distance dominates dtw on identically long series") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Trajectory x = random_traj(rng, 10);
    const Trajectory y = random_traj(rng, 10);
    CHECK(euclidean_distance(x, y, DtwDims::Joint) >=
          dtw_distance(x, y, DtwDims::Joint) - 1e-12);
  }
}

TEST_CASE("warping path is monotone, boundary-anchored, and costs D(T,T)") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Trajectory x = random_traj(rng, 8);
    const Trajectory y = random_traj(rng, 8);
    const auto path = warping_path(x, y, DtwDims::Joint);
    REQUIRE(!path.empty());
    CHECK(path.front() == std::pair<int, int>(0, 0));
    CHECK(path.back() == std::pair<int, int>(7, 7));
    double acc = 0.0;
    for (std::size_t s = 0; s < path.size(); ++s) {
      if (s > 0) {
        const int di = path[s].first - path[s - 1].first;
        const int dj = path[s].second - path[s - 1].second;
        CHECK(di >= 0);
        CHECK(dj >= 0);
        CHECK(di + dj >= 1);
        CHECK(di <= 1);
        CHECK(dj <= 1);
      }
      acc += local_cost(x, y, path[s].first, path[s].second, DtwDims::Joint);
    }
    CHECK(acc == doctest::Approx(dtw_distance(x, y, DtwDims::Joint)));
  }
}

TEST_CASE("distance matrix is symmetric, zero-diagonal, thread-invariant") {
  Rng rng(3);
  Panel panel;
  for (int i = 0; i < 12; ++i) {
    Trajectory t = random_traj(rng, 10);
    t.uid = "p" + std::to_string(i);
    panel.trajectories.push_back(t);
  }
  const DistanceMatrix d1 = distance_matrix(panel, DtwDims::Joint, 1);
  const DistanceMatrix d4 = distance_matrix(panel, DtwDims::Joint, 4);
  for (int i = 0; i < 12; ++i) {
    CHECK(d1.at(i, i) == 0.0);
    for (int j = 0; j < 12; ++j) {
      CHECK(d1.at(i, j) == d1.at(j, i));
      CHECK(d1.at(i, j) == d4.at(i, j));  // bitwise identical partitioning
    }
  }
}

TEST_CASE("dba objective is non-increasing and beats the pointwise mean on "
          "staggered step trajectories") {
  // Ten threshold-style series with switch rounds 2..8: high then zero.
  Rng rng(5);
  std::vector<Trajectory> members;
  for (int i = 0; i < 10; ++i) {
    const int sw = 2 + i % 7;
    Trajectory t;
    t.uid = "s" + std::to_string(i);
    for (int r = 1; r <= 10; ++r) {
      const double base = r < sw ? 1.0 : 0.0;
      const double v = std::clamp(base + rng.normal(0.0, 0.03), 0.0, 1.0);
      t.actions.push_back(v);
      t.states.push_back(v);
    }
    members.push_back(t);
  }
  const Barycenter bc = dba_barycenter(members, DtwDims::ActionOnly);
  REQUIRE(bc.objective_history.size() >= 2);
  for (std::size_t i = 1; i < bc.objective_history.size(); ++i)
    CHECK(bc.objective_history[i] <= bc.objective_history[i - 1] + 1e-9);

  Trajectory center, mean_t;
  center.uid = "dba";
  center.actions = bc.actions;
  center.states = bc.states;
  mean_t.uid = "mean";
  for (int r = 0; r < 10; ++r) {
    double ma = 0.0, ms = 0.0;
    for (const auto& m : members) {
      ma += m.actions[static_cast<std::size_t>(r)];
      ms += m.states[static_cast<std::size_t>(r)];
    }
    mean_t.actions.push_back(ma / 10.0);
    mean_t.states.push_back(ms / 10.0);
  }
  double cost_dba = 0.0, cost_mean = 0.0;
  for (const auto& m : members) {
    cost_dba += dtw_distance(center, m, DtwDims::ActionOnly);
    cost_mean += dtw_distance(mean_t, m, DtwDims::ActionOnly);
  }
  CHECK(cost_dba <= cost_mean);
}

TEST_CASE("dba of identical members reproduces the member with zero cost") {
  Trajectory t;
  t.uid = "t";
  t.actions = {0.2, 0.4, 0.9, 0.1};
  t.states = {0.1, 0.3, 0.8, 0.2};
  const Barycenter bc = dba_barycenter({t, t, t}, DtwDims::Joint);
  for (int r = 0; r < 4; ++r) {
    CHECK(bc.actions[static_cast<std::size_t>(r)] ==
          doctest::Approx(t.actions[static_cast<std::size_t>(r)]));
    // All members coincide, so the band collapses onto the center.
    CHECK(bc.action_iqr_low[static_cast<std::size_t>(r)] ==
          doctest::Approx(t.actions[static_cast<std::size_t>(r)]));
    CHECK(bc.action_iqr_high[static_cast<std::size_t>(r)] ==
          doctest::Approx(t.actions[static_cast<std::size_t>(r)]));
  }
  CHECK(bc.objective_history.back() == doctest::Approx(0.0));
}

TEST_CASE("distance matrix csv round-trip") {
  DistanceMatrix dm = DistanceMatrix::zeros(3);
  dm.at(0, 1) = dm.at(1, 0) = 1.25;
  dm.at(0, 2) = dm.at(2, 0) = 0.5;
  dm.at(1, 2) = dm.at(2, 1) = 2.0;
  const std::string path = "/tmp/pgg_dtw_test_dm.csv";
  save_distance_matrix(dm, path);
  const DistanceMatrix back = load_distance_matrix(path);
  REQUIRE(back.n == 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(back.at(i, j) == doctest::Approx(dm.at(i, j)));
  std::remove(path.c_str());
}

}  // TEST_SUITE
