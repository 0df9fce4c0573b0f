#pragma once

#include <array>
#include <string>
#include <vector>

namespace pgg {

// Parameters of one linear public goods game.
struct GameConfig {
  double endowment = 10.0;   // tokens per round
  double multiplier = 0.4;   // marginal per-capita return, in (0,1)
  int group_size = 4;
  int rounds = 10;

  void validate() const;
};

// One participant's aligned action/state series, normalized to [0,1].
// actions[t] is the own contribution in round t; states[t] is the average
// contribution of the other group members in round t.
struct Trajectory {
  std::string uid;
  std::vector<double> actions;
  std::vector<double> states;

  int game_length() const { return static_cast<int>(actions.size()); }
  void validate() const;
};

struct Panel {
  std::vector<Trajectory> trajectories;

  int size() const { return static_cast<int>(trajectories.size()); }
  int game_length() const;
  void validate() const;
};

constexpr int kNumBins = 5;

struct Triplet {
  int state = 0;       // bin of the lagged others'-average
  int action = 0;      // bin of the own contribution
  int next_state = 0;  // bin of the others'-average observed after the action
};

// Binned state-action-next-state chain. The first round has no prior state
// and is excluded, so a length-T trajectory yields T-1 triplets.
struct DiscreteTrajectory {
  std::string uid;
  std::vector<Triplet> triplets;

  int num_decisions() const { return static_cast<int>(triplets.size()); }
};

// pi_i = e - c_i + mu * sum_j c_j
double payoff(const GameConfig& config, double own,
              const std::vector<double>& all_contribs);

// (1/(I-1)) * sum_{j != i} c_j
double others_average(const GameConfig& config,
                      const std::vector<double>& all_contribs, int index);

// raw / endowment, raw must lie in [0, endowment].
double normalize_contribution(double raw, double endowment);

// Equal-width bin on [0,1]: min(floor(v*5), 4). Last bin closed at 1.0.
int bin_of(double v);

DiscreteTrajectory discretize(const Trajectory& traj);

// Panel CSV: header `uid,round,contribution,others_avg,game_length[,group_id]`,
// raw token units. An empty others_avg cell requires group_id; the loader then
// computes the others'-average from the group members in that round.
Panel load_panel(const std::string& path, double endowment);
void save_panel(const Panel& panel, const std::string& path, double endowment);

// Flat key-value config file. Recognized keys: endowment, multiplier,
// group_size, rounds, seed. Unknown keys are rejected.
struct RunConfig {
  GameConfig game;
  std::uint64_t seed = 0;
};
RunConfig load_run_config(const std::string& path);

}  // namespace pgg
