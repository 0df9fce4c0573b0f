#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "pgg/cluster.hpp"
#include "pgg/dtw.hpp"
#include "pgg/stability.hpp"
#include "pgg/util.hpp"

using namespace pgg;

namespace {

Partition make_partition(const std::vector<int>& labels) {
  Partition p;
  for (std::size_t i = 0; i < labels.size(); ++i)
    p.uids.push_back("p" + std::to_string(i));
  p.labels = labels;
  return p;
}

Panel blob_panel(int per_side) {
  Rng rng(91);
  Panel p;
  for (int i = 0; i < 2 * per_side; ++i) {
    const double level = i < per_side ? 0.0 : 1.0;
    Trajectory t;
    t.uid = "p" + std::to_string(i);
    for (int r = 0; r < 8; ++r) {
      const double v = std::clamp(level + rng.normal(0.0, 0.01), 0.0, 1.0);
      t.actions.push_back(v);
      t.states.push_back(v);
    }
    p.trajectories.push_back(t);
  }
  return p;
}

}  // namespace

TEST_SUITE("stability") {

TEST_CASE("adjusted rand index matches the hand-computed contingency") {
  const Partition a = make_partition({0, 0, 0, 1, 1, 1});
  const Partition b = make_partition({0, 0, 1, 1, 2, 2});
  // Contingency [[2,1,0],[0,1,2]]: sum C(nij,2)=2, row pairs 6, col pairs 3,
  // expected 18/15, max 4.5 -> ARI = (2-1.2)/(4.5-1.2) = 0.242424...
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(8.0 / 33.0));
}

TEST_CASE("ari and nmi are 1 for identical partitions up to relabeling") {
  const Partition a = make_partition({0, 0, 1, 1, 2, 2});
  const Partition b = make_partition({2, 2, 0, 0, 1, 1});
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(1.0));
  CHECK(normalized_mutual_information(a, b) == doctest::Approx(1.0));
}

TEST_CASE("ari of a fully crossed design is its known negative value") {
  // 4x4 crossed design: every cell of the contingency table holds exactly one
  // point, so the index is 0, the expectation 4.8 and the maximum 24, giving
  // ARI = (0 - 4.8) / (24 - 4.8) = -0.25.
  std::vector<int> la, lb;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      la.push_back(i);
      lb.push_back(j);
    }
  CHECK(adjusted_rand_index(make_partition(la), make_partition(lb)) ==
        doctest::Approx(-0.25));
}

TEST_CASE("nmi matches the arithmetic-mean-entropy oracle") {
  const Partition a = make_partition({0, 0, 0, 1, 1, 1});
  const Partition b = make_partition({0, 0, 1, 1, 2, 2});
  // MI = (2/3) ln 2, H(a) = ln 2, H(b) = ln 3.
  const double expected =
      (2.0 / 3.0) * std::log(2.0) / (0.5 * (std::log(2.0) + std::log(3.0)));
  CHECK(normalized_mutual_information(a, b) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("nmi of a constant partition is zero by convention") {
  const Partition a = make_partition({0, 0, 0, 0});
  const Partition b = make_partition({0, 1, 0, 1});
  CHECK(normalized_mutual_information(a, b) == doctest::Approx(0.0));
}

TEST_CASE("partition metrics reject mismatched uid sets") {
  Partition a = make_partition({0, 1});
  Partition b = make_partition({0, 1});
  b.uids[1] = "other";
  CHECK_THROWS(adjusted_rand_index(a, b));
}

TEST_CASE("hungarian assignment maximizes total overlap") {
  const std::vector<std::vector<double>> w{{7, 5, 11}, {5, 4, 1}, {9, 3, 2}};
  const std::vector<int> match = hungarian_max_assignment(w);
  REQUIRE(match.size() == 3);
  CHECK(match[0] == 2);
  CHECK(match[1] == 1);
  CHECK(match[2] == 0);
  double total = 0.0;
  for (int i = 0; i < 3; ++i) total += w[static_cast<std::size_t>(i)][static_cast<std::size_t>(match[static_cast<std::size_t>(i)])];
  CHECK(total == doctest::Approx(24.0));
}

TEST_CASE("hungarian 2x2 picks the off-diagonal when it pays") {
  const std::vector<int> match = hungarian_max_assignment({{1, 10}, {10, 1}});
  CHECK(match[0] == 1);
  CHECK(match[1] == 0);
}

TEST_CASE("welch t test matches a pinned reference") {
  // Reference values computed with an independent statistics package.
  const WelchResult r = welch_t_test({1, 2, 3, 4, 5}, {2, 4, 6, 8, 10});
  CHECK(r.t == doctest::Approx(-1.8973665961).epsilon(1e-9));
  CHECK(r.df == doctest::Approx(5.8823529412).epsilon(1e-9));
  CHECK(r.p == doctest::Approx(0.1075311949).epsilon(1e-7));
}

TEST_CASE("regularized incomplete beta matches pinned references") {
  // I_0.25(2,3) has the closed form 67/256.
  CHECK(regularized_incomplete_beta(2, 3, 0.25) == doctest::Approx(67.0 / 256.0).epsilon(1e-10));
  CHECK(regularized_incomplete_beta(2.5, 1.5, 0.7) == doctest::Approx(0.5843121477).epsilon(1e-8));
  CHECK(regularized_incomplete_beta(2, 3, 0.0) == doctest::Approx(0.0));
  CHECK(regularized_incomplete_beta(2, 3, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("bootstrap on a clean two-blob panel is perfectly stable") {
  const Panel panel = blob_panel(12);
  const DistanceMatrix dm = distance_matrix(panel, DtwDims::ActionOnly, 2);
  const ClusterSolution base = spectral_cluster(dm, panel, 2, 1);
  const StabilityReport rep =
      bootstrap_stability(panel, base, DtwDims::ActionOnly, 20, 0.8, 5, 2);
  CHECK(rep.replications == 20);
  CHECK(rep.ari_mean == doctest::Approx(1.0));
  CHECK(rep.nmi_mean == doctest::Approx(1.0));
  CHECK(rep.overall_return_mean == doctest::Approx(1.0));
}

TEST_CASE("bootstrap replications are seed-deterministic and thread-invariant") {
  const Panel panel = blob_panel(8);
  const DistanceMatrix dm = distance_matrix(panel, DtwDims::ActionOnly, 2);
  const ClusterSolution base = spectral_cluster(dm, panel, 2, 1);
  const StabilityReport r1 =
      bootstrap_stability(panel, base, DtwDims::ActionOnly, 10, 0.75, 3, 1);
  const StabilityReport r4 =
      bootstrap_stability(panel, base, DtwDims::ActionOnly, 10, 0.75, 3, 4);
  CHECK(r1.ari_mean == r4.ari_mean);
  CHECK(r1.nmi_mean == r4.nmi_mean);
  CHECK(r1.return_rate == r4.return_rate);
}

TEST_CASE("random assignment return rate approaches 1/k") {
  CHECK(random_assignment_return_rate(120, 6, 2000, 0.8, 5) ==
        doctest::Approx(1.0 / 6.0).epsilon(0.1));
  CHECK(random_assignment_return_rate(100, 4, 2000, 0.8, 9) ==
        doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("heterogeneity separates within from between on two blobs") {
  const Panel panel = blob_panel(10);
  const DistanceMatrix dm = distance_matrix(panel, DtwDims::ActionOnly, 2);
  const ClusterSolution sol = spectral_cluster(dm, panel, 2, 1);
  const HeterogeneityReport rep = heterogeneity(dm, panel, sol, DtwDims::ActionOnly);
  CHECK(!rep.degenerate);
  CHECK(rep.between_distance_mean > 10.0 * rep.within_distance_mean);
  CHECK(rep.separation_ratio > 10.0);
  CHECK(rep.share_negative_silhouette == doctest::Approx(0.0));
  CHECK(rep.between_variance_share + rep.within_variance_share ==
        doctest::Approx(1.0));
  CHECK(rep.between_variance_share > 0.9);
}

}  // TEST_SUITE
