#pragma once

#include <array>
#include <string>
#include <vector>

#include "pgg/core.hpp"

namespace pgg {

using Table5 = std::array<std::array<double, kNumBins>, kNumBins>;  // (s, a)

// Empirical state transition kernel P(s' | s, a) with a small uniform
// pseudocount so unvisited pairs stay well-defined.
struct TransitionModel {
  std::array<std::array<std::array<double, kNumBins>, kNumBins>, kNumBins> p{};

  static TransitionModel uniform();
  static TransitionModel estimate(const std::vector<DiscreteTrajectory>& data,
                                  double pseudocount = 1e-3);
};

// Soft (log-sum-exp) value iteration at temperature beta:
//   Q(s,a) = r(s,a) + gamma * sum_s' P(s'|s,a) V(s'),
//   V(s)   = (1/beta) log sum_a exp(beta Q(s,a)).
// Returns the fixed-point Q (residual < tol) and the Boltzmann policy rows.
struct PolicyResult {
  Table5 q{};
  Table5 policy{};  // pi(a|s), rows sum to 1
};
PolicyResult policy_from_reward(const Table5& reward, double gamma, double beta,
                                const TransitionModel& trans,
                                double tol = 1e-9,
                                const std::array<double, kNumBins>* warm_v = nullptr,
                                std::array<double, kNumBins>* out_v = nullptr);

struct HiqlModel {
  int K = 1;
  double gamma = 0.99;
  double beta = 1.0;
  std::vector<Table5> rewards;   // per intention
  std::vector<Table5> q_tables;  // derived fixed points
  std::vector<Table5> policies;  // derived Boltzmann policies
  std::vector<std::vector<double>> lambda;  // K x K row-stochastic
  std::vector<double> pi;                   // length K
  TransitionModel trans;

  void refresh_derived();  // recompute q_tables/policies from rewards
  void validate() const;
  // Swap intention indices a and b consistently across all parameters.
  void swap_intentions(int a, int b);
};

struct IntentionPosterior {
  std::string uid;
  std::vector<std::vector<double>> probs;  // per decision step, length K
};

struct EStepResult {
  IntentionPosterior posterior;
  std::vector<std::vector<double>> xi_sum;   // K x K expected transition counts
  std::vector<double> first_step;            // posterior at step 0
  double log_likelihood = 0.0;
  bool floored_emission = false;
};

// Scaled forward-backward over the intention chain with emissions
// pi_k(a_t | s_t), floored at 1e-12.
EStepResult e_step(const HiqlModel& model, const DiscreteTrajectory& traj);

double dataset_log_likelihood(const HiqlModel& model,
                              const std::vector<DiscreteTrajectory>& data);
int dataset_decisions(const std::vector<DiscreteTrajectory>& data);

struct FitOptions {
  int n_init = 10;
  int max_em_iter = 100;
  double tol = 1e-5;          // relative train-LL improvement stop
  int reward_grad_steps = 50; // inner ascent steps per M-step
  double reward_step_size = 0.1;
  double reward_init_sd = 0.1;
  double lambda_init_diag = 0.95;
  double lambda_init_sd = 0.05;
};

// One EM pass (Pi, Lambda, responsibility-weighted reward ascent) from the
// given model. The reward update uses backtracking so the expected
// complete-data objective never decreases; train LL is monotone up to
// emission-flooring error.
void m_step(HiqlModel& model, const std::vector<DiscreteTrajectory>& data,
            const std::vector<EStepResult>& e, const FitOptions& opts);

struct FitReport {
  std::vector<double> train_ll_history;  // per EM iteration of the chosen init
  std::vector<double> init_final_ll;     // final train LL per initialization
  int chosen_init = 0;
  double train_ll = 0.0;   // total over dataset
  double bic = 0.0;
  int n_decisions = 0;
  bool reinitialized_intention = false;  // an intention lost all responsibility
};

std::pair<HiqlModel, FitReport> fit(const std::vector<DiscreteTrajectory>& data,
                                    int K, std::uint64_t seed,
                                    const FitOptions& opts = {});

// EM continuation from an existing model (no re-initialization).
FitReport fit_from(HiqlModel& model, const std::vector<DiscreteTrajectory>& data,
                   const FitOptions& opts);

// BIC free-parameter count: K*25 rewards + K(K-1) Lambda + (K-1) Pi.
int bic_param_count(int K);
double bic_score(double train_ll_total, int K, int n_decisions);

struct SelectKRow {
  int K = 0;
  double mean_test_ll_per_decision = 0.0;
  double bic = 0.0;
};
struct SelectKDelta {
  int from = 0, to = 0;
  double d_test_ll = 0.0;  // per decision
  double d_bic = 0.0;
};
struct SelectKResult {
  std::vector<SelectKRow> rows;
  std::vector<SelectKDelta> deltas;
  int recommended = 1;
};

struct CvOptions {
  int folds = 5;
  int repeats = 10;
  FitOptions fit;
};

// Cross-validated test LL per decision and full-data BIC for each K.
// The recommendation follows the elbow rule: among transitions whose test-LL
// gain is within 0.02/decision of the best gain, take the one with the
// smallest BIC increase and adopt its upper K.
SelectKResult select_K(const std::vector<DiscreteTrajectory>& data, int k_min,
                       int k_max, const CvOptions& cv, std::uint64_t seed);

struct CvCell {
  int repeat = 0, fold = 0;
  double train_ll_per_decision = 0.0;
  double test_ll_per_decision = 0.0;
};

struct CvFitResult {
  std::vector<IntentionPosterior> posteriors;  // per participant, averaged
  std::vector<CvCell> cells;
  double mean_test_ll_per_decision = 0.0;
  double mean_train_ll_per_decision = 0.0;
  bool merged_strata = false;
};

// Repeated stratified K-fold cross-validation. Participants are stratified
// into three average-contribution bins; strata smaller than the fold count
// are merged into a neighbor. Test posteriors are aligned (K = 2) before
// averaging across folds and repeats.
CvFitResult cv_fit(const std::vector<DiscreteTrajectory>& data, int K,
                   const CvOptions& cv, std::uint64_t seed);

// Peak-coincidence alignment for the two-intention model: the intention whose
// posterior peaks most often coincide (within one round) with action peaks
// becomes intention 1. Returns true if the labels were swapped.
bool align_latents(std::vector<IntentionPosterior>& posteriors,
                   const std::vector<std::vector<double>>& action_series,
                   HiqlModel* model = nullptr);

// Local maxima with the given prominence (exposed for tests).
std::vector<int> detect_peaks(const std::vector<double>& series,
                              double min_prominence = 0.2);

// Per-cluster EM warm-started from the global fit (Pi, Lambda and rewards).
std::vector<std::pair<HiqlModel, FitReport>> cluster_initialized_fit(
    const std::vector<std::vector<DiscreteTrajectory>>& cluster_data,
    const HiqlModel& global_model, const FitOptions& opts);

// Flat text serialization: META / PI / LAMBDA / TRANSITION / REWARD_k
// sections of whitespace-separated numbers. Derived tables are rebuilt on load.
void save_model(const HiqlModel& model, const std::string& path);
HiqlModel load_model(const std::string& path);

// `uid,step,p_intention1[,p2,...]`
void save_posteriors(const std::vector<IntentionPosterior>& posteriors,
                     const std::string& path);
std::vector<IntentionPosterior> load_posteriors(const std::string& path);

}  // namespace pgg
