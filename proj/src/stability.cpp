#include "pgg/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pgg/csv.hpp"
#include "pgg/util.hpp"

namespace pgg {

Partition to_partition(const ClusterSolution& sol) {
  Partition p;
  p.uids = sol.uids;
  p.labels = sol.labels;
  return p;
}

namespace {

// Contingency table over the shared uid set; throws on mismatch.
std::vector<std::vector<long long>> contingency(const Partition& a,
                                                const Partition& b) {
  if (a.uids.size() != b.uids.size())
    throw std::invalid_argument("partition agreement: uid sets differ in size");
  std::map<std::string, int> bl;
  for (std::size_t i = 0; i < b.uids.size(); ++i)
    bl[b.uids[i]] = b.labels[i];
  const int ka = a.labels.empty()
                     ? 0
                     : *std::max_element(a.labels.begin(), a.labels.end()) + 1;
  const int kb = b.labels.empty()
                     ? 0
                     : *std::max_element(b.labels.begin(), b.labels.end()) + 1;
  std::vector<std::vector<long long>> n(
      static_cast<std::size_t>(ka), std::vector<long long>(static_cast<std::size_t>(kb), 0));
  for (std::size_t i = 0; i < a.uids.size(); ++i) {
    auto it = bl.find(a.uids[i]);
    if (it == bl.end())
      throw std::invalid_argument("partition agreement: uid " + a.uids[i] +
                                  " missing from the other partition");
    ++n[static_cast<std::size_t>(a.labels[i])][static_cast<std::size_t>(it->second)];
  }
  return n;
}

inline double choose2(long long x) {
  return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1);
}

}  // namespace

double adjusted_rand_index(const Partition& a, const Partition& b) {
  const auto n = contingency(a, b);
  const long long total = static_cast<long long>(a.uids.size());
  if (total < 2) throw std::invalid_argument("ARI: need at least two items");

  double sum_ij = 0.0;
  std::vector<long long> rows(n.size(), 0), cols(n.empty() ? 0 : n[0].size(), 0);
  for (std::size_t i = 0; i < n.size(); ++i)
    for (std::size_t j = 0; j < n[i].size(); ++j) {
      sum_ij += choose2(n[i][j]);
      rows[i] += n[i][j];
      cols[j] += n[i][j];
    }
  double sum_a = 0.0, sum_b = 0.0;
  for (long long r : rows) sum_a += choose2(r);
  for (long long c : cols) sum_b += choose2(c);
  const double expected = sum_a * sum_b / choose2(total);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (std::abs(max_index - expected) < 1e-15) return 1.0;  // both trivial
  return (sum_ij - expected) / (max_index - expected);
}

double normalized_mutual_information(const Partition& a, const Partition& b) {
  const auto n = contingency(a, b);
  const double total = static_cast<double>(a.uids.size());
  if (total < 1) throw std::invalid_argument("NMI: empty partition");

  std::vector<double> rows(n.size(), 0.0), cols(n.empty() ? 0 : n[0].size(), 0.0);
  for (std::size_t i = 0; i < n.size(); ++i)
    for (std::size_t j = 0; j < n[i].size(); ++j) {
      rows[i] += static_cast<double>(n[i][j]);
      cols[j] += static_cast<double>(n[i][j]);
    }
  double mi = 0.0, ha = 0.0, hb = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i)
    for (std::size_t j = 0; j < n[i].size(); ++j) {
      const double nij = static_cast<double>(n[i][j]);
      if (nij > 0.0)
        mi += nij / total * std::log(nij * total / (rows[i] * cols[j]));
    }
  for (double r : rows)
    if (r > 0.0) ha -= r / total * std::log(r / total);
  for (double c : cols)
    if (c > 0.0) hb -= c / total * std::log(c / total);
  const double denom = 0.5 * (ha + hb);
  if (denom <= 0.0) return 0.0;  // a zero-entropy partition carries no information
  return mi / denom;
}

std::vector<int> hungarian_max_assignment(
    const std::vector<std::vector<double>>& weights) {
  const int n = static_cast<int>(weights.size());
  if (n == 0) return {};
  for (const auto& row : weights)
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("hungarian: matrix must be square");

  // Convert to a minimization problem; O(n^3) potentials formulation
  // (1-indexed with a dummy row/column 0).
  double wmax = -std::numeric_limits<double>::infinity();
  for (const auto& row : weights)
    for (double w : row) wmax = std::max(wmax, w);
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          wmax - weights[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0),
      v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0),
      way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), kInf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> match(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    match[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return match;
}

StabilityReport bootstrap_stability(const Panel& panel,
                                    const ClusterSolution& base, DtwDims dims,
                                    int reps, double fraction,
                                    std::uint64_t seed, int threads) {
  if (reps < 1) throw std::invalid_argument("bootstrap: reps must be positive");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("bootstrap: fraction must lie in (0, 1]");
  const int n = panel.size();
  const int m = std::max(base.k, static_cast<int>(std::llround(fraction * n)));
  if (m > n) throw std::invalid_argument("bootstrap: subsample exceeds panel");

  std::map<std::string, int> base_label;
  for (std::size_t i = 0; i < base.uids.size(); ++i)
    base_label[base.uids[i]] = base.labels[i];

  struct RepOutcome {
    bool ok = false;
    double ari = 0.0, nmi = 0.0;
    std::vector<int> sampled;   // trajectory indices
    std::vector<int> returned;  // 1 if matched label equals baseline label
  };
  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));

  auto run_rep = [&](int rep) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(rep));
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    idx.resize(static_cast<std::size_t>(m));
    std::sort(idx.begin(), idx.end());

    Panel sub;
    for (int i : idx) sub.trajectories.push_back(panel.trajectories[static_cast<std::size_t>(i)]);
    RepOutcome out;
    out.sampled = idx;
    ClusterSolution sol;
    try {
      const DistanceMatrix dm = distance_matrix(sub, dims, 1);
      sol = spectral_cluster(dm, sub, base.k, rng.next_u64());
    } catch (const std::exception&) {
      return out;  // degenerate subsample; replication skipped
    }

    // Restrict the baseline to the subsample and compare.
    Partition pb, ps;
    for (std::size_t i = 0; i < sol.uids.size(); ++i) {
      pb.uids.push_back(sol.uids[i]);
      pb.labels.push_back(base_label.at(sol.uids[i]));
      ps.uids.push_back(sol.uids[i]);
      ps.labels.push_back(sol.labels[i]);
    }
    out.ari = adjusted_rand_index(pb, ps);
    out.nmi = normalized_mutual_information(pb, ps);

    // Hungarian max-overlap match of replicate clusters onto baseline clusters.
    std::vector<std::vector<double>> overlap(
        static_cast<std::size_t>(base.k),
        std::vector<double>(static_cast<std::size_t>(base.k), 0.0));
    for (std::size_t i = 0; i < sol.uids.size(); ++i)
      overlap[static_cast<std::size_t>(pb.labels[i])][static_cast<std::size_t>(ps.labels[i])] += 1.0;
    const std::vector<int> match = hungarian_max_assignment(overlap);
    out.returned.resize(sol.uids.size());
    for (std::size_t i = 0; i < sol.uids.size(); ++i)
      out.returned[i] = match[static_cast<std::size_t>(pb.labels[i])] == ps.labels[i] ? 1 : 0;
    out.ok = true;
    return out;
  };

  const int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    for (int rep = 0; rep < reps; ++rep) outcomes[static_cast<std::size_t>(rep)] = run_rep(rep);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&, w] {
        for (int rep = w; rep < reps; rep += nthreads)
          outcomes[static_cast<std::size_t>(rep)] = run_rep(rep);
      });
    for (auto& t : pool) t.join();
  }

  StabilityReport report;
  report.replications = reps;
  report.subsample_fraction = fraction;
  report.uids = base.uids;
  std::vector<double> aris, nmis;
  std::vector<double> return_hits(static_cast<std::size_t>(n), 0.0);
  std::vector<double> return_draws(static_cast<std::size_t>(n), 0.0);
  for (const auto& out : outcomes) {
    if (!out.ok) {
      ++report.skipped;
      continue;
    }
    aris.push_back(out.ari);
    nmis.push_back(out.nmi);
    for (std::size_t i = 0; i < out.sampled.size(); ++i) {
      const std::size_t idx = static_cast<std::size_t>(out.sampled[i]);
      return_draws[idx] += 1.0;
      return_hits[idx] += out.returned[i];
    }
  }
  if (aris.empty())
    throw std::runtime_error("bootstrap: all replications were degenerate");
  report.ari_mean = mean(aris);
  report.ari_sd = sample_sd(aris);
  report.nmi_mean = mean(nmis);
  report.nmi_sd = sample_sd(nmis);
  report.return_rate.resize(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    report.return_rate[static_cast<std::size_t>(i)] =
        return_draws[static_cast<std::size_t>(i)] > 0.0
            ? return_hits[static_cast<std::size_t>(i)] / return_draws[static_cast<std::size_t>(i)]
            : 0.0;
  report.cluster_return_mean.assign(static_cast<std::size_t>(base.k), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(base.k), 0);
  for (int i = 0; i < n; ++i) {
    const int c = base.labels[static_cast<std::size_t>(i)];
    report.cluster_return_mean[static_cast<std::size_t>(c)] +=
        report.return_rate[static_cast<std::size_t>(i)];
    ++counts[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < base.k; ++c)
    report.cluster_return_mean[static_cast<std::size_t>(c)] /=
        static_cast<double>(counts[static_cast<std::size_t>(c)]);
  report.overall_return_mean = mean(report.return_rate);
  return report;
}

double random_assignment_return_rate(int n, int k, int reps, double fraction,
                                     std::uint64_t seed) {
  if (n < 1 || k < 1 || reps < 1)
    throw std::invalid_argument("random benchmark: positive n, k, reps required");
  const int m = std::max(1, static_cast<int>(std::llround(fraction * n)));
  Rng base_rng = Rng::derive(seed, 0);
  std::vector<int> baseline(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) baseline[static_cast<std::size_t>(i)] = base_rng.uniform_int(k);

  // Labels share one space across baseline and replicate, so agreement is
  // read off directly: no overlap matching, expected rate 1/k.
  double hits = 0.0, draws = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(rep) + 1);
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    for (int i = 0; i < m; ++i) {
      const int who = idx[static_cast<std::size_t>(i)];
      const int label = rng.uniform_int(k);
      draws += 1.0;
      if (label == baseline[static_cast<std::size_t>(who)]) hits += 1.0;
    }
  }
  return hits / draws;
}

HeterogeneityReport heterogeneity(const DistanceMatrix& dm, const Panel& panel,
                                  const ClusterSolution& sol, DtwDims dims) {
  const int n = dm.n;
  HeterogeneityReport rep;

  const SilhouetteReport sil = silhouette(dm, sol.labels, sol.k);
  rep.cluster_sil_mean = sil.per_cluster_mean;
  rep.cluster_sil_sd = sil.per_cluster_sd;
  int negatives = 0;
  for (double s : sil.per_point)
    if (s < 0.0) ++negatives;
  rep.share_negative_silhouette = static_cast<double>(negatives) / n;

  std::vector<double> within, between;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (sol.labels[static_cast<std::size_t>(i)] == sol.labels[static_cast<std::size_t>(j)])
        within.push_back(dm.at(i, j));
      else
        between.push_back(dm.at(i, j));
    }
  rep.within_distance_mean = mean(within);
  rep.within_distance_sd = sample_sd(within);
  rep.between_distance_mean = mean(between);
  rep.between_distance_sd = sample_sd(between);
  if (rep.within_distance_mean > 0.0 && !between.empty()) {
    rep.separation_ratio = rep.between_distance_mean / rep.within_distance_mean;
  } else {
    rep.degenerate = true;
  }

  // Frechet-style variance decomposition against DBA barycenters.
  const Barycenter global = dba_barycenter(panel.trajectories, dims);
  Trajectory g;
  g.uid = "global";
  g.actions = global.actions;
  g.states = global.states;
  double total_ss = 0.0, between_ss = 0.0;
  const auto members = cluster_members(sol);
  for (int i = 0; i < n; ++i) {
    const double d = dtw_distance(panel.trajectories[static_cast<std::size_t>(i)], g, dims);
    total_ss += d * d;
  }
  for (int c = 0; c < sol.k; ++c) {
    std::vector<Trajectory> mt;
    for (int i : members[static_cast<std::size_t>(c)])
      mt.push_back(panel.trajectories[static_cast<std::size_t>(i)]);
    const Barycenter bc = dba_barycenter(mt, dims);
    Trajectory ct;
    ct.uid = "center";
    ct.actions = bc.actions;
    ct.states = bc.states;
    const double d = dtw_distance(ct, g, dims);
    between_ss += static_cast<double>(mt.size()) * d * d;
  }
  rep.total_variance = total_ss / n;
  if (total_ss > 0.0) {
    rep.between_variance_share = std::min(1.0, between_ss / total_ss);
    rep.within_variance_share = 1.0 - rep.between_variance_share;
  } else {
    rep.degenerate = true;
  }
  return rep;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0)
    throw std::domain_error("ibeta: a and b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Continued fraction (Lentz), with the symmetry transform for convergence.
  if (x > (a + 1.0) / (a + b + 2.0))
    return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);

  const double ln_front = a * std::log(x) + b * std::log(1.0 - x) +
                          std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double tiny = 1e-300;
  double f = tiny, c = f, d = 0.0;
  for (int i = 0; i <= 300; ++i) {
    double numerator;
    const int m = i / 2;
    if (i == 0)
      numerator = 1.0;
    else if (i % 2 == 0)
      numerator = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
    else
      numerator = -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
    d = 1.0 + numerator * d;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    c = 1.0 + numerator / c;
    if (std::abs(c) < tiny) c = tiny;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-14) break;
  }
  return std::exp(ln_front) * (f - tiny) / a;
}

WelchResult welch_t_test(const std::vector<double>& x,
                         const std::vector<double>& y) {
  if (x.size() < 2 || y.size() < 2)
    throw std::invalid_argument("welch: each sample needs at least two values");
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  const double vx = sample_sd(x) * sample_sd(x);
  const double vy = sample_sd(y) * sample_sd(y);
  WelchResult r;
  const double se2 = vx / nx + vy / ny;
  if (se2 <= 0.0) {
    // Identical constant samples: no evidence of a difference.
    r.t = 0.0;
    r.df = nx + ny - 2.0;
    r.p = 1.0;
    return r;
  }
  r.t = (mean(x) - mean(y)) / std::sqrt(se2);
  r.df = se2 * se2 /
         (vx * vx / (nx * nx * (nx - 1.0)) + vy * vy / (ny * ny * (ny - 1.0)));
  // Two-sided p from the t CDF via the incomplete beta.
  const double w = r.df / (r.df + r.t * r.t);
  r.p = regularized_incomplete_beta(r.df / 2.0, 0.5, w);
  return r;
}

void save_stability_report(const StabilityReport& r, const std::string& path) {
  std::vector<std::string> lines;
  lines.push_back("metric,value");
  auto add = [&](const std::string& name, double v) {
    lines.push_back(name + "," + fmt_num(v));
  };
  add("replications", r.replications);
  add("skipped", r.skipped);
  add("subsample_fraction", r.subsample_fraction);
  add("ari_mean", r.ari_mean);
  add("ari_sd", r.ari_sd);
  add("nmi_mean", r.nmi_mean);
  add("nmi_sd", r.nmi_sd);
  add("overall_return_mean", r.overall_return_mean);
  for (std::size_t c = 0; c < r.cluster_return_mean.size(); ++c)
    add("cluster_" + std::to_string(c + 1) + "_return_mean",
        r.cluster_return_mean[c]);
  for (std::size_t i = 0; i < r.uids.size(); ++i)
    lines.push_back("return_rate." + r.uids[i] + "," + fmt_num(r.return_rate[i]));
  write_lines(path, lines);
}

void save_heterogeneity_report(const HeterogeneityReport& r,
                               const std::string& path) {
  std::vector<std::string> lines;
  lines.push_back("metric,value");
  auto add = [&](const std::string& name, double v) {
    lines.push_back(name + "," + fmt_num(v));
  };
  for (std::size_t c = 0; c < r.cluster_sil_mean.size(); ++c) {
    add("cluster_" + std::to_string(c + 1) + "_sil_mean", r.cluster_sil_mean[c]);
    add("cluster_" + std::to_string(c + 1) + "_sil_sd", r.cluster_sil_sd[c]);
  }
  add("share_negative_silhouette", r.share_negative_silhouette);
  add("within_distance_mean", r.within_distance_mean);
  add("within_distance_sd", r.within_distance_sd);
  add("between_distance_mean", r.between_distance_mean);
  add("between_distance_sd", r.between_distance_sd);
  add("separation_ratio", r.separation_ratio);
  add("total_variance", r.total_variance);
  add("between_variance_share", r.between_variance_share);
  add("within_variance_share", r.within_variance_share);
  add("degenerate", r.degenerate ? 1.0 : 0.0);
  write_lines(path, lines);
}

}  // namespace pgg
