#include "pgg/typing.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pgg/csv.hpp"
#include "pgg/util.hpp"

namespace pgg {

std::string first_round_type_name(FirstRoundType t) {
  switch (t) {
    case FirstRoundType::FreeRider: return "free_rider";
    case FirstRoundType::ConditionalCooperator: return "conditional_cooperator";
    case FirstRoundType::FullCooperator: return "full_cooperator";
  }
  throw std::logic_error("first_round_type_name: unknown type");
}

FirstRoundType classify_first_round(double c1) {
  if (!(c1 >= 0.0 && c1 <= 1.0))
    throw std::domain_error("classify_first_round: contribution outside [0,1]");
  if (c1 <= 0.1) return FirstRoundType::FreeRider;
  if (c1 >= 0.9) return FirstRoundType::FullCooperator;
  return FirstRoundType::ConditionalCooperator;
}

double stickiness(const std::vector<double>& series) {
  if (series.size() < 2)
    throw std::invalid_argument("stickiness: need at least two observations");
  bool constant = true;
  for (double v : series)
    if (v != series.front()) {
      constant = false;
      break;
    }
  if (constant) return 1.0;  // perfectly persistent
  std::vector<double> x(series.begin(), series.end() - 1);
  std::vector<double> y(series.begin() + 1, series.end());
  bool degenerate = false;
  const double r = pearson(x, y, &degenerate);
  return degenerate ? 0.0 : r;
}

double switching_rate(const std::vector<std::vector<double>>& lambda) {
  if (lambda.size() != 2 || lambda[0].size() != 2 || lambda[1].size() != 2)
    throw std::invalid_argument("switching_rate: expects a 2x2 matrix");
  for (const auto& row : lambda) {
    double total = 0.0;
    for (double p : row) {
      if (p < 0.0) throw std::invalid_argument("switching_rate: negative entry");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("switching_rate: rows must sum to 1");
  }
  return 0.5 * (lambda[0][1] + lambda[1][0]);
}

double volatility(const std::vector<double>& posterior) {
  if (posterior.size() < 2)
    throw std::invalid_argument("volatility: need at least two observations");
  int crossings = 0;
  for (std::size_t t = 1; t < posterior.size(); ++t) {
    const double a = posterior[t - 1], b = posterior[t];
    if ((a < 0.5 && b > 0.5) || (a > 0.5 && b < 0.5)) ++crossings;
  }
  return static_cast<double>(crossings) / static_cast<double>(posterior.size() - 1);
}

bool classify_switcher(const ClusterMetrics& m, const SwitcherCriteria& criteria) {
  return m.stickiness_mean < criteria.stickiness_max &&
         m.switching > criteria.switching_min &&
         m.volatility_mean > criteria.volatility_min;
}

std::vector<ClusterMetrics> cluster_metrics(
    const std::vector<std::vector<IntentionPosterior>>& cluster_posteriors,
    const std::vector<std::vector<std::vector<double>>>& cluster_lambdas,
    const SwitcherCriteria& criteria) {
  if (cluster_posteriors.size() != cluster_lambdas.size())
    throw std::invalid_argument("cluster_metrics: cluster count mismatch");
  std::vector<ClusterMetrics> out;
  for (std::size_t c = 0; c < cluster_posteriors.size(); ++c) {
    if (cluster_posteriors[c].empty())
      throw std::invalid_argument("cluster_metrics: empty cluster " +
                                  std::to_string(c + 1));
    std::vector<double> sticks, vols;
    for (const auto& p : cluster_posteriors[c]) {
      std::vector<double> series;
      for (const auto& row : p.probs) series.push_back(row.front());
      sticks.push_back(stickiness(series));
      vols.push_back(volatility(series));
    }
    ClusterMetrics m;
    m.cluster = static_cast<int>(c) + 1;
    m.stickiness_mean = mean(sticks);
    m.stickiness_iqr_low = percentile(sticks, 25.0);
    m.stickiness_iqr_high = percentile(sticks, 75.0);
    m.switching = switching_rate(cluster_lambdas[c]);
    m.volatility_mean = mean(vols);
    m.volatility_iqr_low = percentile(vols, 25.0);
    m.volatility_iqr_high = percentile(vols, 75.0);
    m.is_switcher = classify_switcher(m, criteria);
    out.push_back(m);
  }
  return out;
}

std::vector<Responsiveness> responsiveness(const Panel& panel,
                                           const ClusterSolution& sol) {
  if (panel.size() != static_cast<int>(sol.labels.size()))
    throw std::invalid_argument("responsiveness: panel/solution size mismatch");
  std::vector<Responsiveness> out(static_cast<std::size_t>(sol.k));
  for (int c = 0; c < sol.k; ++c) {
    std::vector<double> lagged_state, action;
    for (int i = 0; i < panel.size(); ++i) {
      if (sol.labels[static_cast<std::size_t>(i)] != c) continue;
      const auto& t = panel.trajectories[static_cast<std::size_t>(i)];
      for (int r = 1; r < t.game_length(); ++r) {
        lagged_state.push_back(t.states[static_cast<std::size_t>(r - 1)]);
        action.push_back(t.actions[static_cast<std::size_t>(r)]);
      }
    }
    Responsiveness r;
    r.r = pearson(lagged_state, action, &r.degenerate);
    out[static_cast<std::size_t>(c)] = r;
  }
  return out;
}

void save_cluster_metrics(const std::vector<ClusterMetrics>& metrics,
                          const std::string& path) {
  std::vector<std::string> lines;
  lines.push_back(
      "cluster,stickiness,stickiness_iqr_low,stickiness_iqr_high,"
      "switching_rate,volatility,volatility_iqr_low,volatility_iqr_high,"
      "is_switcher");
  for (const auto& m : metrics) {
    std::ostringstream ss;
    ss << m.cluster << ',' << fmt_num(m.stickiness_mean) << ','
       << fmt_num(m.stickiness_iqr_low) << ',' << fmt_num(m.stickiness_iqr_high)
       << ',' << fmt_num(m.switching) << ',' << fmt_num(m.volatility_mean) << ','
       << fmt_num(m.volatility_iqr_low) << ',' << fmt_num(m.volatility_iqr_high)
       << ',' << (m.is_switcher ? 1 : 0);
    lines.push_back(ss.str());
  }
  write_lines(path, lines);
}

}  // namespace pgg
