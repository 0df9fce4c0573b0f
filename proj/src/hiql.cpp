#include "pgg/hiql.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pgg/csv.hpp"
#include "pgg/util.hpp"

namespace pgg {

namespace {

constexpr double kEmissionFloor = 1e-12;

double logsumexp5(const std::array<double, kNumBins>& x) {
  const double m = *std::max_element(x.begin(), x.end());
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - m);
  return m + std::log(acc);
}

}  // namespace

TransitionModel TransitionModel::uniform() {
  TransitionModel t;
  for (int s = 0; s < kNumBins; ++s)
    for (int a = 0; a < kNumBins; ++a)
      for (int s2 = 0; s2 < kNumBins; ++s2)
        t.p[s][a][s2] = 1.0 / kNumBins;
  return t;
}

TransitionModel TransitionModel::estimate(
    const std::vector<DiscreteTrajectory>& data, double pseudocount) {
  if (pseudocount <= 0.0)
    throw std::invalid_argument("TransitionModel: pseudocount must be positive");
  TransitionModel t;
  double counts[kNumBins][kNumBins][kNumBins];
  for (int s = 0; s < kNumBins; ++s)
    for (int a = 0; a < kNumBins; ++a)
      for (int s2 = 0; s2 < kNumBins; ++s2) counts[s][a][s2] = pseudocount;
  for (const auto& traj : data)
    for (const auto& tr : traj.triplets)
      counts[tr.state][tr.action][tr.next_state] += 1.0;
  for (int s = 0; s < kNumBins; ++s)
    for (int a = 0; a < kNumBins; ++a) {
      double total = 0.0;
      for (int s2 = 0; s2 < kNumBins; ++s2) total += counts[s][a][s2];
      for (int s2 = 0; s2 < kNumBins; ++s2) t.p[s][a][s2] = counts[s][a][s2] / total;
    }
  return t;
}

PolicyResult policy_from_reward(const Table5& reward, double gamma, double beta,
                                const TransitionModel& trans, double tol,
                                const std::array<double, kNumBins>* warm_v,
                                std::array<double, kNumBins>* out_v) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::domain_error("policy_from_reward: gamma must lie in [0, 1)");
  if (beta <= 0.0)
    throw std::domain_error("policy_from_reward: beta must be positive");

  std::array<double, kNumBins> v{};
  if (warm_v) v = *warm_v;
  PolicyResult res;
  for (int iter = 0; iter < 200000; ++iter) {
    std::array<double, kNumBins> v_next{};
    double residual = 0.0;
    for (int s = 0; s < kNumBins; ++s) {
      std::array<double, kNumBins> bq{};
      for (int a = 0; a < kNumBins; ++a) {
        double ev = 0.0;
        for (int s2 = 0; s2 < kNumBins; ++s2) ev += trans.p[s][a][s2] * v[s2];
        res.q[s][a] = reward[s][a] + gamma * ev;
        bq[a] = beta * res.q[s][a];
      }
      v_next[s] = logsumexp5(bq) / beta;
      residual = std::max(residual, std::abs(v_next[s] - v[s]));
    }
    v = v_next;
    if (residual < tol) break;
  }
  for (int s = 0; s < kNumBins; ++s) {
    std::array<double, kNumBins> bq{};
    for (int a = 0; a < kNumBins; ++a) {
      double ev = 0.0;
      for (int s2 = 0; s2 < kNumBins; ++s2) ev += trans.p[s][a][s2] * v[s2];
      res.q[s][a] = reward[s][a] + gamma * ev;
      bq[a] = beta * res.q[s][a];
    }
    const double lse = logsumexp5(bq);
    for (int a = 0; a < kNumBins; ++a) res.policy[s][a] = std::exp(bq[a] - lse);
  }
  if (out_v) *out_v = v;
  return res;
}

void HiqlModel::refresh_derived() {
  q_tables.resize(static_cast<std::size_t>(K));
  policies.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const PolicyResult pr =
        policy_from_reward(rewards[static_cast<std::size_t>(k)], gamma, beta, trans);
    q_tables[static_cast<std::size_t>(k)] = pr.q;
    policies[static_cast<std::size_t>(k)] = pr.policy;
  }
}

void HiqlModel::validate() const {
  if (K < 1) throw std::invalid_argument("HiqlModel: K < 1");
  if (static_cast<int>(rewards.size()) != K ||
      static_cast<int>(policies.size()) != K ||
      static_cast<int>(lambda.size()) != K || static_cast<int>(pi.size()) != K)
    throw std::invalid_argument("HiqlModel: parameter shapes disagree with K");
  double pit = 0.0;
  for (double p : pi) {
    if (p < 0.0) throw std::invalid_argument("HiqlModel: negative pi entry");
    pit += p;
  }
  if (std::abs(pit - 1.0) > 1e-9)
    throw std::invalid_argument("HiqlModel: pi does not sum to 1");
  for (const auto& row : lambda) {
    if (static_cast<int>(row.size()) != K)
      throw std::invalid_argument("HiqlModel: lambda is not K x K");
    double total = 0.0;
    for (double p : row) {
      if (p < 0.0) throw std::invalid_argument("HiqlModel: negative lambda entry");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("HiqlModel: lambda row does not sum to 1");
  }
  for (const auto& pol : policies)
    for (int s = 0; s < kNumBins; ++s) {
      double total = 0.0;
      for (int a = 0; a < kNumBins; ++a) total += pol[s][a];
      if (std::abs(total - 1.0) > 1e-6)
        throw std::invalid_argument("HiqlModel: policy row does not sum to 1");
    }
}

void HiqlModel::swap_intentions(int a, int b) {
  if (a < 0 || b < 0 || a >= K || b >= K)
    throw std::domain_error("swap_intentions: index out of range");
  if (a == b) return;
  std::swap(rewards[static_cast<std::size_t>(a)], rewards[static_cast<std::size_t>(b)]);
  if (!q_tables.empty())
    std::swap(q_tables[static_cast<std::size_t>(a)], q_tables[static_cast<std::size_t>(b)]);
  if (!policies.empty())
    std::swap(policies[static_cast<std::size_t>(a)], policies[static_cast<std::size_t>(b)]);
  std::swap(pi[static_cast<std::size_t>(a)], pi[static_cast<std::size_t>(b)]);
  for (auto& row : lambda)
    std::swap(row[static_cast<std::size_t>(a)], row[static_cast<std::size_t>(b)]);
  std::swap(lambda[static_cast<std::size_t>(a)], lambda[static_cast<std::size_t>(b)]);
}

EStepResult e_step(const HiqlModel& model, const DiscreteTrajectory& traj) {
  const int K = model.K;
  const int T = traj.num_decisions();
  if (T < 1) throw std::domain_error("e_step: trajectory has no decisions");

  EStepResult res;
  res.posterior.uid = traj.uid;

  // Emission matrix b[t][k] with flooring.
  std::vector<std::vector<double>> b(static_cast<std::size_t>(T),
                                     std::vector<double>(static_cast<std::size_t>(K)));
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < K; ++k) {
      double e = model.policies[static_cast<std::size_t>(k)]
                               [traj.triplets[static_cast<std::size_t>(t)].state]
                               [traj.triplets[static_cast<std::size_t>(t)].action];
      if (e < kEmissionFloor) {
        e = kEmissionFloor;
        res.floored_emission = true;
      }
      b[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] = e;
    }

  // Scaled forward pass.
  std::vector<std::vector<double>> alpha(static_cast<std::size_t>(T),
                                         std::vector<double>(static_cast<std::size_t>(K)));
  std::vector<double> scale(static_cast<std::size_t>(T));
  for (int k = 0; k < K; ++k)
    alpha[0][static_cast<std::size_t>(k)] =
        model.pi[static_cast<std::size_t>(k)] * b[0][static_cast<std::size_t>(k)];
  scale[0] = std::accumulate(alpha[0].begin(), alpha[0].end(), 0.0);
  for (int k = 0; k < K; ++k) alpha[0][static_cast<std::size_t>(k)] /= scale[0];
  for (int t = 1; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      double acc = 0.0;
      for (int j = 0; j < K; ++j)
        acc += alpha[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(j)] *
               model.lambda[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] =
          acc * b[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
    }
    scale[static_cast<std::size_t>(t)] =
        std::accumulate(alpha[static_cast<std::size_t>(t)].begin(),
                        alpha[static_cast<std::size_t>(t)].end(), 0.0);
    for (int k = 0; k < K; ++k)
      alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] /=
          scale[static_cast<std::size_t>(t)];
  }
  for (int t = 0; t < T; ++t) res.log_likelihood += std::log(scale[static_cast<std::size_t>(t)]);

  // Scaled backward pass.
  std::vector<std::vector<double>> betav(static_cast<std::size_t>(T),
                                         std::vector<double>(static_cast<std::size_t>(K), 1.0));
  for (int t = T - 2; t >= 0; --t)
    for (int j = 0; j < K; ++j) {
      double acc = 0.0;
      for (int k = 0; k < K; ++k)
        acc += model.lambda[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] *
               b[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(k)] *
               betav[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(k)];
      betav[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] =
          acc / scale[static_cast<std::size_t>(t + 1)];
    }

  // Posteriors and expected transition counts.
  res.posterior.probs.assign(static_cast<std::size_t>(T),
                             std::vector<double>(static_cast<std::size_t>(K)));
  for (int t = 0; t < T; ++t) {
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
      res.posterior.probs[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] =
          alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] *
          betav[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
      total += res.posterior.probs[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < K; ++k)
      res.posterior.probs[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] /= total;
  }
  res.first_step = res.posterior.probs[0];
  res.xi_sum.assign(static_cast<std::size_t>(K),
                    std::vector<double>(static_cast<std::size_t>(K), 0.0));
  for (int t = 1; t < T; ++t)
    for (int j = 0; j < K; ++j)
      for (int k = 0; k < K; ++k)
        res.xi_sum[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] +=
            alpha[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(j)] *
            model.lambda[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] *
            b[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] *
            betav[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] /
            scale[static_cast<std::size_t>(t)];
  return res;
}

double dataset_log_likelihood(const HiqlModel& model,
                              const std::vector<DiscreteTrajectory>& data) {
  double ll = 0.0;
  for (const auto& traj : data) ll += e_step(model, traj).log_likelihood;
  return ll;
}

int dataset_decisions(const std::vector<DiscreteTrajectory>& data) {
  int n = 0;
  for (const auto& traj : data) n += traj.num_decisions();
  return n;
}

namespace {

// Responsibility-weighted visit counts per intention: W[s][a] and row sums.
struct WeightedCounts {
  Table5 w{};
  std::array<double, kNumBins> row{};
  double total = 0.0;
};

std::vector<WeightedCounts> gather_counts(
    const std::vector<DiscreteTrajectory>& data,
    const std::vector<EStepResult>& e, int K) {
  std::vector<WeightedCounts> counts(static_cast<std::size_t>(K));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& traj = data[i];
    for (int t = 0; t < traj.num_decisions(); ++t) {
      const auto& tr = traj.triplets[static_cast<std::size_t>(t)];
      for (int k = 0; k < K; ++k) {
        const double g =
            e[i].posterior.probs[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
        counts[static_cast<std::size_t>(k)].w[tr.state][tr.action] += g;
        counts[static_cast<std::size_t>(k)].row[tr.state] += g;
        counts[static_cast<std::size_t>(k)].total += g;
      }
    }
  }
  return counts;
}

// Expected complete-data emission objective sum_{s,a} W(s,a) log pi_r(a|s).
double weighted_objective(const Table5& policy, const WeightedCounts& wc) {
  double obj = 0.0;
  for (int s = 0; s < kNumBins; ++s)
    for (int a = 0; a < kNumBins; ++a)
      if (wc.w[s][a] > 0.0)
        obj += wc.w[s][a] * std::log(std::max(policy[s][a], kEmissionFloor));
  return obj;
}

}  // namespace

void m_step(HiqlModel& model, const std::vector<DiscreteTrajectory>& data,
            const std::vector<EStepResult>& e, const FitOptions& opts) {
  const int K = model.K;
  if (e.size() != data.size())
    throw std::invalid_argument("m_step: E-step results do not match data");

  // Pi: average first-step posterior.
  std::vector<double> pi(static_cast<std::size_t>(K), 0.0);
  for (const auto& r : e)
    for (int k = 0; k < K; ++k) pi[static_cast<std::size_t>(k)] += r.first_step[static_cast<std::size_t>(k)];
  const double pit = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& p : pi) p /= pit;
  model.pi = pi;

  // Lambda: normalized expected transition counts; an intention with no
  // expected exits keeps its previous row.
  if (K > 1) {
    for (int j = 0; j < K; ++j) {
      std::vector<double> row(static_cast<std::size_t>(K), 0.0);
      double total = 0.0;
      for (const auto& r : e)
        for (int k = 0; k < K; ++k) {
          row[static_cast<std::size_t>(k)] +=
              r.xi_sum[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
          total += r.xi_sum[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
        }
      if (total > 1e-12) {
        for (int k = 0; k < K; ++k)
          model.lambda[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
              row[static_cast<std::size_t>(k)] / total;
      }
    }
  }

  // Rewards: per-intention gradient ascent on the responsibility-weighted
  // log-policy objective with backtracking, so the objective never decreases.
  const auto counts = gather_counts(data, e, K);
  for (int k = 0; k < K; ++k) {
    const WeightedCounts& wc = counts[static_cast<std::size_t>(k)];
    if (wc.total < 1e-10) continue;  // vacated intention; caller may flag it
    Table5 reward = model.rewards[static_cast<std::size_t>(k)];
    std::array<double, kNumBins> v{};
    PolicyResult pr = policy_from_reward(reward, model.gamma, model.beta,
                                         model.trans, 1e-9, nullptr, &v);
    double obj = weighted_objective(pr.policy, wc);
    double step = opts.reward_step_size;
    for (int it = 0; it < opts.reward_grad_steps; ++it) {
      // Semi-gradient of the objective in the reward table (treating the
      // downstream value coupling as fixed), normalized by total weight.
      Table5 grad{};
      for (int s = 0; s < kNumBins; ++s)
        for (int a = 0; a < kNumBins; ++a)
          grad[s][a] = model.beta *
                       (wc.w[s][a] - wc.row[s] * pr.policy[s][a]) / wc.total;
      bool accepted = false;
      for (int half = 0; half < 20; ++half) {
        Table5 cand = reward;
        for (int s = 0; s < kNumBins; ++s)
          for (int a = 0; a < kNumBins; ++a) cand[s][a] += step * grad[s][a];
        std::array<double, kNumBins> cv{};
        const PolicyResult cpr = policy_from_reward(
            cand, model.gamma, model.beta, model.trans, 1e-9, &v, &cv);
        const double cobj = weighted_objective(cpr.policy, wc);
        if (cobj >= obj) {
          reward = cand;
          pr = cpr;
          v = cv;
          if (cobj - obj < 1e-12 * std::max(1.0, std::abs(obj))) {
            obj = cobj;
            accepted = false;  // converged; stop the inner loop
            break;
          }
          obj = cobj;
          accepted = true;
          step *= 1.5;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
    model.rewards[static_cast<std::size_t>(k)] = reward;
    model.q_tables[static_cast<std::size_t>(k)] = pr.q;
    model.policies[static_cast<std::size_t>(k)] = pr.policy;
  }
}

namespace {

HiqlModel init_model(const std::vector<DiscreteTrajectory>& data, int K,
                     const TransitionModel& trans, std::uint64_t seed,
                     const FitOptions& opts) {
  (void)data;
  Rng rng = Rng::derive(seed, 0x417ULL);
  HiqlModel m;
  m.K = K;
  m.trans = trans;
  m.rewards.assign(static_cast<std::size_t>(K), Table5{});
  for (auto& r : m.rewards)
    for (int s = 0; s < kNumBins; ++s)
      for (int a = 0; a < kNumBins; ++a) r[s][a] = rng.normal(0.0, opts.reward_init_sd);
  m.pi.assign(static_cast<std::size_t>(K), 1.0 / K);
  m.lambda.assign(static_cast<std::size_t>(K),
                  std::vector<double>(static_cast<std::size_t>(K)));
  if (K == 1) {
    m.lambda[0][0] = 1.0;
  } else {
    for (int j = 0; j < K; ++j) {
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        const double base = j == k ? opts.lambda_init_diag
                                   : (1.0 - opts.lambda_init_diag) / (K - 1);
        const double v = std::max(1e-6, base + rng.normal(0.0, opts.lambda_init_sd));
        m.lambda[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = v;
        total += v;
      }
      for (int k = 0; k < K; ++k)
        m.lambda[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] /= total;
    }
  }
  m.refresh_derived();
  return m;
}

// Shift each reward row so its maximum is zero; policy-preserving at the
// fixed point only state-wise, so this is applied once after convergence
// and the derived tables are rebuilt from the recentered rewards.
void recenter_rewards(HiqlModel& m) {
  for (auto& r : m.rewards)
    for (int s = 0; s < kNumBins; ++s) {
      const double mx = *std::max_element(r[s].begin(), r[s].end());
      for (int a = 0; a < kNumBins; ++a) r[s][a] -= mx;
    }
  m.refresh_derived();
}

}  // namespace

FitReport fit_from(HiqlModel& model, const std::vector<DiscreteTrajectory>& data,
                   const FitOptions& opts) {
  if (data.empty()) throw std::invalid_argument("fit: empty dataset");
  FitReport report;
  report.n_decisions = dataset_decisions(data);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_em_iter; ++iter) {
    std::vector<EStepResult> e;
    e.reserve(data.size());
    double ll = 0.0;
    for (const auto& traj : data) {
      e.push_back(e_step(model, traj));
      ll += e.back().log_likelihood;
    }
    report.train_ll_history.push_back(ll);
    const auto counts = gather_counts(data, e, model.K);
    for (const auto& wc : counts)
      if (wc.total < 1e-10) report.reinitialized_intention = true;
    if (std::isfinite(prev_ll) &&
        ll - prev_ll < opts.tol * std::max(1.0, std::abs(ll)))
      break;
    prev_ll = ll;
    m_step(model, data, e, opts);
  }
  report.train_ll = report.train_ll_history.back();
  report.bic = bic_score(report.train_ll, model.K, report.n_decisions);
  return report;
}

std::pair<HiqlModel, FitReport> fit(const std::vector<DiscreteTrajectory>& data,
                                    int K, std::uint64_t seed,
                                    const FitOptions& opts) {
  if (K < 1) throw std::invalid_argument("fit: K must be positive");
  if (data.empty()) throw std::invalid_argument("fit: empty dataset");
  const TransitionModel trans = TransitionModel::estimate(data);

  HiqlModel best;
  FitReport best_report;
  std::vector<double> init_lls;
  for (int init = 0; init < opts.n_init; ++init) {
    HiqlModel m = init_model(data, K, trans,
                             seed + static_cast<std::uint64_t>(init) * 7919ULL, opts);
    FitReport rep = fit_from(m, data, opts);
    init_lls.push_back(rep.train_ll);
    if (init == 0 || rep.train_ll > best_report.train_ll) {
      best = std::move(m);
      best_report = std::move(rep);
      best_report.chosen_init = init;
    }
  }
  best_report.init_final_ll = init_lls;
  recenter_rewards(best);
  // Recentering can move the train LL by value-iteration tolerance only;
  // report the exact post-recentering figure.
  best_report.train_ll = dataset_log_likelihood(best, data);
  best_report.bic = bic_score(best_report.train_ll, K, best_report.n_decisions);
  return {std::move(best), std::move(best_report)};
}

int bic_param_count(int K) {
  return K * kNumBins * kNumBins + K * (K - 1) + (K - 1);
}

double bic_score(double train_ll_total, int K, int n_decisions) {
  return -2.0 * train_ll_total +
         bic_param_count(K) * std::log(static_cast<double>(n_decisions));
}

namespace {

// Mean action level (in [0,1]) per participant from the binned decisions.
double mean_action_level(const DiscreteTrajectory& traj) {
  double acc = 0.0;
  for (const auto& tr : traj.triplets) acc += tr.action / static_cast<double>(kNumBins - 1);
  return acc / traj.num_decisions();
}

// Stratified fold assignment: three equal-width mean-contribution strata;
// strata smaller than the fold count are merged into the nearest neighbor.
std::vector<int> fold_assignment(const std::vector<DiscreteTrajectory>& data,
                                 int folds, std::uint64_t seed, int repeat,
                                 bool* merged) {
  const int n = static_cast<int>(data.size());
  std::vector<int> stratum(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double m = mean_action_level(data[static_cast<std::size_t>(i)]);
    stratum[static_cast<std::size_t>(i)] = m < 1.0 / 3.0 ? 0 : (m < 2.0 / 3.0 ? 1 : 2);
  }
  std::vector<int> sizes(3, 0);
  for (int s : stratum) ++sizes[static_cast<std::size_t>(s)];
  for (int s = 0; s < 3; ++s) {
    if (sizes[static_cast<std::size_t>(s)] > 0 &&
        sizes[static_cast<std::size_t>(s)] < folds) {
      const int target = s == 0 ? 1 : (s == 2 ? 1 : (sizes[0] >= sizes[2] ? 0 : 2));
      for (int& v : stratum)
        if (v == s) v = target;
      sizes[static_cast<std::size_t>(target)] += sizes[static_cast<std::size_t>(s)];
      sizes[static_cast<std::size_t>(s)] = 0;
      if (merged) *merged = true;
    }
  }
  std::vector<int> fold(static_cast<std::size_t>(n), -1);
  for (int s = 0; s < 3; ++s) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (stratum[static_cast<std::size_t>(i)] == s) members.push_back(i);
    if (members.empty()) continue;
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(repeat) * 31ULL +
                                    static_cast<std::uint64_t>(s));
    rng.shuffle(members);
    for (std::size_t pos = 0; pos < members.size(); ++pos)
      fold[static_cast<std::size_t>(members[pos])] =
          static_cast<int>(pos % static_cast<std::size_t>(folds));
  }
  return fold;
}

std::vector<std::vector<double>> action_series_of(
    const std::vector<DiscreteTrajectory>& data) {
  std::vector<std::vector<double>> series;
  for (const auto& traj : data) {
    std::vector<double> s;
    for (const auto& tr : traj.triplets)
      s.push_back(tr.action / static_cast<double>(kNumBins - 1));
    series.push_back(std::move(s));
  }
  return series;
}

}  // namespace

CvFitResult cv_fit(const std::vector<DiscreteTrajectory>& data, int K,
                   const CvOptions& cv, std::uint64_t seed) {
  if (cv.folds < 2) throw std::invalid_argument("cv_fit: need at least 2 folds");
  if (static_cast<int>(data.size()) < cv.folds)
    throw std::invalid_argument("cv_fit: fewer participants than folds");

  CvFitResult result;
  std::map<std::string, std::pair<std::vector<std::vector<double>>, int>> acc;

  std::vector<double> test_lls, train_lls;
  for (int rep = 0; rep < cv.repeats; ++rep) {
    const std::vector<int> fold =
        fold_assignment(data, cv.folds, seed, rep, &result.merged_strata);
    for (int f = 0; f < cv.folds; ++f) {
      std::vector<DiscreteTrajectory> train, test;
      for (std::size_t i = 0; i < data.size(); ++i)
        (fold[i] == f ? test : train).push_back(data[i]);
      if (test.empty() || train.empty()) continue;

      auto [model, fit_rep] =
          fit(train, K, seed ^ (static_cast<std::uint64_t>(rep) * 1000003ULL +
                                static_cast<std::uint64_t>(f)),
              cv.fit);

      std::vector<IntentionPosterior> post;
      double test_ll = 0.0;
      for (const auto& traj : test) {
        EStepResult e = e_step(model, traj);
        test_ll += e.log_likelihood;
        post.push_back(std::move(e.posterior));
      }
      if (K == 2) align_latents(post, action_series_of(test), &model);

      CvCell cell;
      cell.repeat = rep;
      cell.fold = f;
      cell.train_ll_per_decision = fit_rep.train_ll / dataset_decisions(train);
      cell.test_ll_per_decision = test_ll / dataset_decisions(test);
      result.cells.push_back(cell);
      test_lls.push_back(cell.test_ll_per_decision);
      train_lls.push_back(cell.train_ll_per_decision);

      for (const auto& p : post) {
        auto& slot = acc[p.uid];
        if (slot.second == 0) {
          slot.first = p.probs;
        } else {
          for (std::size_t t = 0; t < p.probs.size(); ++t)
            for (std::size_t k = 0; k < p.probs[t].size(); ++k)
              slot.first[t][k] += p.probs[t][k];
        }
        ++slot.second;
      }
    }
  }
  result.mean_test_ll_per_decision = mean(test_lls);
  result.mean_train_ll_per_decision = mean(train_lls);
  for (const auto& traj : data) {
    auto it = acc.find(traj.uid);
    if (it == acc.end()) continue;
    IntentionPosterior p;
    p.uid = traj.uid;
    p.probs = it->second.first;
    for (auto& row : p.probs)
      for (double& v : row) v /= it->second.second;
    result.posteriors.push_back(std::move(p));
  }
  return result;
}

SelectKResult select_K(const std::vector<DiscreteTrajectory>& data, int k_min,
                       int k_max, const CvOptions& cv, std::uint64_t seed) {
  if (k_min < 1 || k_max < k_min)
    throw std::invalid_argument("select_K: bad K range");
  SelectKResult res;
  for (int K = k_min; K <= k_max; ++K) {
    SelectKRow row;
    row.K = K;
    row.mean_test_ll_per_decision =
        cv_fit(data, K, cv, seed).mean_test_ll_per_decision;
    const auto [model, rep] = fit(data, K, seed, cv.fit);
    row.bic = rep.bic;
    res.rows.push_back(row);
  }
  res.recommended = k_min;
  if (res.rows.size() < 2) return res;

  for (std::size_t i = 1; i < res.rows.size(); ++i) {
    SelectKDelta d;
    d.from = res.rows[i - 1].K;
    d.to = res.rows[i].K;
    d.d_test_ll = res.rows[i].mean_test_ll_per_decision -
                  res.rows[i - 1].mean_test_ll_per_decision;
    d.d_bic = res.rows[i].bic - res.rows[i - 1].bic;
    res.deltas.push_back(d);
  }
  // Elbow rule: among transitions whose test-LL gain is within 0.02/decision
  // of the best gain, the smallest BIC increase wins; adopt its upper K.
  double best_gain = -std::numeric_limits<double>::infinity();
  for (const auto& d : res.deltas) best_gain = std::max(best_gain, d.d_test_ll);
  const SelectKDelta* chosen = nullptr;
  for (const auto& d : res.deltas) {
    if (d.d_test_ll < best_gain - 0.02) continue;
    if (!chosen || d.d_bic < chosen->d_bic) chosen = &d;
  }
  res.recommended = chosen->to;
  return res;
}

std::vector<int> detect_peaks(const std::vector<double>& series,
                              double min_prominence) {
  const int n = static_cast<int>(series.size());
  std::vector<int> peaks;
  for (int i = 1; i + 1 < n; ++i) {
    if (!(series[static_cast<std::size_t>(i)] > series[static_cast<std::size_t>(i - 1)] &&
          series[static_cast<std::size_t>(i)] >= series[static_cast<std::size_t>(i + 1)]))
      continue;
    // Plateau: require a strict drop after the flat run.
    int j = i + 1;
    while (j < n && series[static_cast<std::size_t>(j)] == series[static_cast<std::size_t>(i)]) ++j;
    if (j < n && series[static_cast<std::size_t>(j)] > series[static_cast<std::size_t>(i)]) continue;
    // Prominence: drop to the lowest valley before terrain re-exceeds the peak.
    auto side_min = [&](int from, int dir) {
      double lo = series[static_cast<std::size_t>(i)];
      for (int t = from; t >= 0 && t < n; t += dir) {
        if (series[static_cast<std::size_t>(t)] > series[static_cast<std::size_t>(i)]) break;
        lo = std::min(lo, series[static_cast<std::size_t>(t)]);
      }
      return lo;
    };
    const double base = std::max(side_min(i - 1, -1), side_min(j, +1));
    if (series[static_cast<std::size_t>(i)] - base >= min_prominence) peaks.push_back(i);
    i = j - 1;
  }
  return peaks;
}

bool align_latents(std::vector<IntentionPosterior>& posteriors,
                   const std::vector<std::vector<double>>& action_series,
                   HiqlModel* model) {
  if (posteriors.empty()) return false;
  if (posteriors.size() != action_series.size())
    throw std::invalid_argument("align_latents: series count mismatch");
  const int K = static_cast<int>(posteriors.front().probs.front().size());
  if (K < 2) return false;

  std::vector<double> score(static_cast<std::size_t>(K), 0.0);
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    const auto action_peaks = detect_peaks(action_series[i]);
    if (action_peaks.empty()) continue;
    for (int k = 0; k < K; ++k) {
      std::vector<double> series;
      for (const auto& row : posteriors[i].probs)
        series.push_back(row[static_cast<std::size_t>(k)]);
      for (int p : detect_peaks(series))
        for (int ap : action_peaks)
          if (std::abs(p - ap) <= 1) {
            score[static_cast<std::size_t>(k)] += 1.0;
            break;
          }
    }
  }
  int best = 0;
  for (int k = 1; k < K; ++k)
    if (score[static_cast<std::size_t>(k)] > score[static_cast<std::size_t>(best)]) best = k;
  if (best == 0) return false;
  for (auto& p : posteriors)
    for (auto& row : p.probs)
      std::swap(row[0], row[static_cast<std::size_t>(best)]);
  if (model) model->swap_intentions(0, best);
  return true;
}

std::vector<std::pair<HiqlModel, FitReport>> cluster_initialized_fit(
    const std::vector<std::vector<DiscreteTrajectory>>& cluster_data,
    const HiqlModel& global_model, const FitOptions& opts) {
  std::vector<std::pair<HiqlModel, FitReport>> out;
  for (const auto& data : cluster_data) {
    HiqlModel m = global_model;
    m.trans = TransitionModel::estimate(data);
    m.refresh_derived();
    FitReport rep = fit_from(m, data, opts);
    out.push_back({std::move(m), std::move(rep)});
  }
  return out;
}

void save_model(const HiqlModel& model, const std::string& path) {
  std::ostringstream ss;
  ss << std::setprecision(17);
  ss << "META " << model.K << ' ' << model.gamma << ' ' << model.beta << '\n';
  ss << "PI\n";
  for (double p : model.pi) ss << p << ' ';
  ss << '\n' << "LAMBDA\n";
  for (const auto& row : model.lambda) {
    for (double p : row) ss << p << ' ';
    ss << '\n';
  }
  ss << "TRANSITION\n";
  for (int s = 0; s < kNumBins; ++s)
    for (int a = 0; a < kNumBins; ++a) {
      for (int s2 = 0; s2 < kNumBins; ++s2) ss << model.trans.p[s][a][s2] << ' ';
      ss << '\n';
    }
  for (int k = 0; k < model.K; ++k) {
    ss << "REWARD_" << k << '\n';
    for (int s = 0; s < kNumBins; ++s) {
      for (int a = 0; a < kNumBins; ++a)
        ss << model.rewards[static_cast<std::size_t>(k)][s][a] << ' ';
      ss << '\n';
    }
  }
  write_lines(path, {ss.str()});
}

HiqlModel load_model(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string tok;
  HiqlModel m;
  if (!(in >> tok) || tok != "META")
    throw std::runtime_error("model file: expected META header");
  if (!(in >> m.K >> m.gamma >> m.beta) || m.K < 1)
    throw std::runtime_error("model file: bad META line");
  auto expect = [&](const std::string& want) {
    if (!(in >> tok) || tok != want)
      throw std::runtime_error("model file: expected section " + want);
  };
  auto num = [&]() {
    double v;
    if (!(in >> v)) throw std::runtime_error("model file: truncated numbers");
    return v;
  };
  expect("PI");
  m.pi.resize(static_cast<std::size_t>(m.K));
  for (double& p : m.pi) p = num();
  expect("LAMBDA");
  m.lambda.assign(static_cast<std::size_t>(m.K),
                  std::vector<double>(static_cast<std::size_t>(m.K)));
  for (auto& row : m.lambda)
    for (double& p : row) p = num();
  expect("TRANSITION");
  for (int s = 0; s < kNumBins; ++s)
    for (int a = 0; a < kNumBins; ++a)
      for (int s2 = 0; s2 < kNumBins; ++s2) m.trans.p[s][a][s2] = num();
  m.rewards.assign(static_cast<std::size_t>(m.K), Table5{});
  for (int k = 0; k < m.K; ++k) {
    expect("REWARD_" + std::to_string(k));
    for (int s = 0; s < kNumBins; ++s)
      for (int a = 0; a < kNumBins; ++a)
        m.rewards[static_cast<std::size_t>(k)][s][a] = num();
  }
  m.refresh_derived();
  m.validate();
  return m;
}

void save_posteriors(const std::vector<IntentionPosterior>& posteriors,
                     const std::string& path) {
  if (posteriors.empty())
    throw std::invalid_argument("save_posteriors: nothing to save");
  const std::size_t K = posteriors.front().probs.front().size();
  std::ostringstream header;
  header << "uid,step";
  for (std::size_t k = 0; k < K; ++k) header << ",p_intention" << (k + 1);
  std::vector<std::string> lines{header.str()};
  for (const auto& p : posteriors)
    for (std::size_t t = 0; t < p.probs.size(); ++t) {
      std::ostringstream ss;
      ss << p.uid << ',' << (t + 1);
      for (double v : p.probs[t]) ss << ',' << fmt_num(v);
      lines.push_back(ss.str());
    }
  write_lines(path, lines);
}

std::vector<IntentionPosterior> load_posteriors(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 3 || t.header[0] != "uid" || t.header[1] != "step")
    throw std::runtime_error("posteriors CSV: bad header");
  const std::size_t K = t.header.size() - 2;
  std::vector<IntentionPosterior> out;
  for (const auto& row : t.rows) {
    if (out.empty() || out.back().uid != row[0]) {
      out.push_back({});
      out.back().uid = row[0];
    }
    std::vector<double> probs;
    for (std::size_t k = 0; k < K; ++k) probs.push_back(std::stod(row[2 + k]));
    out.back().probs.push_back(std::move(probs));
  }
  return out;
}

}  // namespace pgg
