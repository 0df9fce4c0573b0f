#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "pgg/core.hpp"
#include "pgg/util.hpp"

namespace pgg {

// Tabular action values over the 5x5 binned state/action space.
struct QTable {
  std::array<std::array<double, kNumBins>, kNumBins> values{};

  double at(int s, int a) const { return values[s][a]; }
  double& at(int s, int a) { return values[s][a]; }
  double row_max(int s) const;
  int argmax(int s) const;  // lowest index wins on ties
};

struct LearnerConfig {
  double alpha = 0.1;    // learning rate, (0, 1]
  double gamma = 0.95;   // discount, [0, 1)
  double epsilon = 0.1;  // exploration probability, [0, 1]

  void validate() const;
};

// Q_new(s,a) = (1-alpha) Q_old(s,a) + alpha [r + gamma max_a' Q_old(s',a')].
// Touches exactly one cell.
QTable q_update(const QTable& q, int s, int a, double r, int s_next,
                const LearnerConfig& cfg);

int epsilon_greedy(const QTable& q, int s, double epsilon, Rng& rng);

enum class ArchetypeKind {
  FreeRider,
  UnconditionalCooperator,
  ConsistentCooperator,
  ThresholdSwitcher,
  FarsightedFreeRider,
  MarkovSwitcher,
  ConditionalCooperator,
};

std::string archetype_name(ArchetypeKind kind);
ArchetypeKind parse_archetype(const std::string& name);

struct ArchetypeSpec {
  ArchetypeKind kind = ArchetypeKind::FreeRider;
  double markov_p = 0.5;       // intention switch probability per round
  double noise_sd = 0.08;      // action noise
  int switch_round = -1;       // threshold switcher; -1 draws uniform {2..T-1}
  int initial_intention = -1;  // markov switcher start; -1 draws uniform {0,1}
};

struct SimulatedGroup {
  std::vector<Trajectory> trajectories;
  std::vector<ArchetypeKind> kinds;
  // Latent cooperate/defect path per agent (1 = cooperate); only meaningful
  // for markov switchers but recorded for all.
  std::vector<std::vector<int>> intention_paths;
};

// Plays `config.rounds` rounds; each agent emits a contribution per its
// archetype policy, reacting to the previous round's others'-average where
// the archetype calls for it. Trajectories come out normalized.
SimulatedGroup simulate_group(const std::vector<ArchetypeSpec>& specs,
                              const GameConfig& config, std::uint64_t seed);

struct LabeledPanel {
  Panel panel;
  std::map<std::string, ArchetypeKind> labels;
  // Generating latent cooperate/defect path per uid (1 = cooperate).
  std::map<std::string, std::vector<int>> intentions;
};

// Groups are formed by seeded random assignment of the census. The census
// total must be divisible by the group size.
LabeledPanel simulate_panel(
    const std::vector<std::pair<ArchetypeSpec, int>>& census,
    const GameConfig& config, std::uint64_t seed);

// Sidecar `uid,archetype` CSV.
void save_labels(const LabeledPanel& lp, const std::string& path);

}  // namespace pgg
