#pragma once

#include <string>
#include <vector>

#include "pgg/cluster.hpp"
#include "pgg/core.hpp"
#include "pgg/hiql.hpp"

namespace pgg {

enum class FirstRoundType { FreeRider, ConditionalCooperator, FullCooperator };

std::string first_round_type_name(FirstRoundType t);

// c <= 0.1 free rider, c >= 0.9 full cooperator, else conditional.
FirstRoundType classify_first_round(double c1);

struct SwitcherCriteria {
  double stickiness_max = 0.15;
  double switching_min = 0.35;
  double volatility_min = 0.25;
};

// Lag-1 Pearson autocorrelation. A constant series returns 1.0 (maximal
// persistence); a non-constant series with a degenerate lagged slice returns 0.
double stickiness(const std::vector<double>& series);

// (Lambda_12 + Lambda_21) / 2 for a 2x2 row-stochastic matrix.
double switching_rate(const std::vector<std::vector<double>>& lambda);

// Share of consecutive pairs strictly straddling 0.5 (an exact 0.5 is not a
// crossing).
double volatility(const std::vector<double>& posterior);

struct ClusterMetrics {
  int cluster = 0;  // 1-based id
  double stickiness_mean = 0.0, stickiness_iqr_low = 0.0, stickiness_iqr_high = 0.0;
  double switching = 0.0;
  double volatility_mean = 0.0, volatility_iqr_low = 0.0, volatility_iqr_high = 0.0;
  bool is_switcher = false;
};

bool classify_switcher(const ClusterMetrics& m,
                       const SwitcherCriteria& criteria = {});

// Member-level stickiness/volatility of the intention-1 posterior, aggregated
// per cluster; switching rate from the cluster's fitted Lambda.
std::vector<ClusterMetrics> cluster_metrics(
    const std::vector<std::vector<IntentionPosterior>>& cluster_posteriors,
    const std::vector<std::vector<std::vector<double>>>& cluster_lambdas,
    const SwitcherCriteria& criteria = {});

struct Responsiveness {
  double r = 0.0;
  bool degenerate = false;
};

// Pooled Pearson correlation of action_t on the lagged others'-average,
// per cluster.
std::vector<Responsiveness> responsiveness(const Panel& panel,
                                           const ClusterSolution& sol);

void save_cluster_metrics(const std::vector<ClusterMetrics>& metrics,
                          const std::string& path);

}  // namespace pgg
