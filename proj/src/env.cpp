#include "pgg/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pgg/csv.hpp"

namespace pgg {

double QTable::row_max(int s) const {
  double best = values[static_cast<std::size_t>(s)][0];
  for (int a = 1; a < kNumBins; ++a)
    best = std::max(best, values[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]);
  return best;
}

int QTable::argmax(int s) const {
  int arg = 0;
  for (int a = 1; a < kNumBins; ++a)
    if (values[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] >
        values[static_cast<std::size_t>(s)][static_cast<std::size_t>(arg)])
      arg = a;
  return arg;
}

void LearnerConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("LearnerConfig: alpha must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("LearnerConfig: gamma must lie in [0, 1)");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("LearnerConfig: epsilon must lie in [0, 1]");
}

QTable q_update(const QTable& q, int s, int a, double r, int s_next,
                const LearnerConfig& cfg) {
  cfg.validate();
  if (s < 0 || s >= kNumBins || a < 0 || a >= kNumBins || s_next < 0 ||
      s_next >= kNumBins)
    throw std::domain_error("q_update: index out of range");
  QTable out = q;
  out.at(s, a) = (1.0 - cfg.alpha) * q.at(s, a) +
                 cfg.alpha * (r + cfg.gamma * q.row_max(s_next));
  return out;
}

int epsilon_greedy(const QTable& q, int s, double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::domain_error("epsilon_greedy: epsilon must lie in [0, 1]");
  if (rng.uniform() < epsilon) return rng.uniform_int(kNumBins);
  return q.argmax(s);
}

std::string archetype_name(ArchetypeKind kind) {
  switch (kind) {
    case ArchetypeKind::FreeRider: return "free_rider";
    case ArchetypeKind::UnconditionalCooperator: return "unconditional_cooperator";
    case ArchetypeKind::ConsistentCooperator: return "consistent_cooperator";
    case ArchetypeKind::ThresholdSwitcher: return "threshold_switcher";
    case ArchetypeKind::FarsightedFreeRider: return "farsighted_free_rider";
    case ArchetypeKind::MarkovSwitcher: return "markov_switcher";
    case ArchetypeKind::ConditionalCooperator: return "conditional_cooperator";
  }
  throw std::logic_error("archetype_name: unknown kind");
}

ArchetypeKind parse_archetype(const std::string& name) {
  if (name == "free_rider") return ArchetypeKind::FreeRider;
  if (name == "unconditional_cooperator") return ArchetypeKind::UnconditionalCooperator;
  if (name == "consistent_cooperator") return ArchetypeKind::ConsistentCooperator;
  if (name == "threshold_switcher") return ArchetypeKind::ThresholdSwitcher;
  if (name == "farsighted_free_rider") return ArchetypeKind::FarsightedFreeRider;
  if (name == "markov_switcher") return ArchetypeKind::MarkovSwitcher;
  if (name == "conditional_cooperator") return ArchetypeKind::ConditionalCooperator;
  throw std::runtime_error("unknown archetype '" + name + "'");
}

namespace {

inline double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

// Steady contribution levels. Cooperation targets the top bin; consistent
// cooperators hold a distinct mid-high level; defection sits at the bottom.
inline double cooperate_level(Rng& rng, double noise_sd) {
  return clip01(1.0 + rng.normal(0.0, noise_sd));
}
inline double consistent_level(Rng& rng, double noise_sd) {
  return clip01(0.6 + rng.normal(0.0, noise_sd));
}
inline double defect_level(Rng& rng, double noise_sd) {
  return clip01(std::abs(rng.normal(0.0, noise_sd)));
}

struct AgentState {
  ArchetypeSpec spec;
  int switch_round = -1;   // resolved threshold round (1-based)
  int intention = 1;       // 1 = cooperate, 0 = defect (markov switchers)
  std::vector<int> intention_path;
};

}  // namespace

SimulatedGroup simulate_group(const std::vector<ArchetypeSpec>& specs,
                              const GameConfig& config, std::uint64_t seed) {
  config.validate();
  if (specs.empty()) throw std::invalid_argument("simulate_group: no agents");
  const int n = static_cast<int>(specs.size());
  const int T = config.rounds;

  Rng rng = Rng::derive(seed, 0);
  std::vector<AgentState> agents;
  for (const auto& spec : specs) {
    if (!(spec.markov_p >= 0.0 && spec.markov_p <= 1.0))
      throw std::invalid_argument("simulate_group: markov_p outside [0, 1]");
    AgentState a;
    a.spec = spec;
    if (spec.kind == ArchetypeKind::ThresholdSwitcher) {
      a.switch_round = spec.switch_round > 0
                           ? spec.switch_round
                           : 2 + rng.uniform_int(std::max(1, T - 2));
      if (a.switch_round < 2 || a.switch_round > T - 1)
        throw std::invalid_argument(
            "simulate_group: switch_round must lie in {2..T-1}");
    }
    if (spec.kind == ArchetypeKind::MarkovSwitcher) {
      if (spec.initial_intention != -1 && spec.initial_intention != 0 &&
          spec.initial_intention != 1)
        throw std::invalid_argument(
            "simulate_group: initial_intention must be -1, 0 or 1");
      a.intention = spec.initial_intention == -1 ? rng.uniform_int(2)
                                                 : spec.initial_intention;
    }
    agents.push_back(a);
  }

  SimulatedGroup group;
  group.trajectories.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    group.trajectories[static_cast<std::size_t>(i)].uid = "a" + std::to_string(i);
    group.kinds.push_back(specs[static_cast<std::size_t>(i)].kind);
  }

  const int decay_start = static_cast<int>(std::ceil(0.7 * T));  // 1-based
  std::vector<double> last_state(static_cast<std::size_t>(n), 0.0);
  for (int round = 1; round <= T; ++round) {
    std::vector<double> contribs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      AgentState& a = agents[static_cast<std::size_t>(i)];
      const double noise = a.spec.noise_sd;
      double c;
      switch (a.spec.kind) {
        case ArchetypeKind::FreeRider:
          c = defect_level(rng, noise);
          a.intention_path.push_back(0);
          break;
        case ArchetypeKind::UnconditionalCooperator:
          c = cooperate_level(rng, noise);
          a.intention_path.push_back(1);
          break;
        case ArchetypeKind::ConsistentCooperator:
          c = consistent_level(rng, noise);
          a.intention_path.push_back(1);
          break;
        case ArchetypeKind::ThresholdSwitcher:
          if (round < a.switch_round) {
            c = cooperate_level(rng, noise);
            a.intention_path.push_back(1);
          } else {
            c = defect_level(rng, noise);
            a.intention_path.push_back(0);
          }
          break;
        case ArchetypeKind::FarsightedFreeRider:
          if (round <= decay_start) {
            c = cooperate_level(rng, noise);
          } else {
            // Linear decay from 1 at decay_start to 0 in the final round.
            const double frac = static_cast<double>(T - round) /
                                static_cast<double>(T - decay_start);
            c = clip01(frac + rng.normal(0.0, noise));
          }
          a.intention_path.push_back(round <= decay_start ? 1 : 0);
          break;
        case ArchetypeKind::MarkovSwitcher:
          if (round > 1 && rng.uniform() < a.spec.markov_p)
            a.intention = 1 - a.intention;
          c = a.intention ? cooperate_level(rng, noise)
                          : defect_level(rng, noise);
          a.intention_path.push_back(a.intention);
          break;
        case ArchetypeKind::ConditionalCooperator:
          // Matches the group average observed after the previous round;
          // opens at the cooperative level.
          c = round == 1 ? cooperate_level(rng, noise)
                         : clip01(last_state[static_cast<std::size_t>(i)] +
                                  rng.normal(0.0, noise));
          a.intention_path.push_back(c >= 0.5 ? 1 : 0);
          break;
        default:
          throw std::logic_error("simulate_group: unknown archetype");
      }
      contribs[static_cast<std::size_t>(i)] = c;
    }
    const double total = std::accumulate(contribs.begin(), contribs.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      // clip01 guards against one-ulp overshoot from the summed total.
      const double others =
          n > 1 ? clip01((total - contribs[static_cast<std::size_t>(i)]) /
                         static_cast<double>(n - 1))
                : 0.0;
      group.trajectories[static_cast<std::size_t>(i)].actions.push_back(
          contribs[static_cast<std::size_t>(i)]);
      group.trajectories[static_cast<std::size_t>(i)].states.push_back(others);
      last_state[static_cast<std::size_t>(i)] = others;
    }
  }
  for (auto& a : agents) group.intention_paths.push_back(std::move(a.intention_path));
  for (const auto& t : group.trajectories) t.validate();
  return group;
}

LabeledPanel simulate_panel(
    const std::vector<std::pair<ArchetypeSpec, int>>& census,
    const GameConfig& config, std::uint64_t seed) {
  config.validate();
  std::vector<ArchetypeSpec> roster;
  for (const auto& [spec, count] : census) {
    if (count < 0) throw std::invalid_argument("simulate_panel: negative count");
    for (int i = 0; i < count; ++i) roster.push_back(spec);
  }
  if (roster.empty()) throw std::invalid_argument("simulate_panel: empty census");
  if (static_cast<int>(roster.size()) % config.group_size != 0)
    throw std::invalid_argument(
        "simulate_panel: census total must be divisible by group_size");

  // Seeded random assignment into groups.
  std::vector<int> order(roster.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::derive(seed, 0xa55157ULL);
  rng.shuffle(order);

  LabeledPanel lp;
  const int n_groups = static_cast<int>(roster.size()) / config.group_size;
  for (int g = 0; g < n_groups; ++g) {
    std::vector<ArchetypeSpec> specs;
    std::vector<int> who;
    for (int m = 0; m < config.group_size; ++m) {
      const int idx = order[static_cast<std::size_t>(g * config.group_size + m)];
      specs.push_back(roster[static_cast<std::size_t>(idx)]);
      who.push_back(idx);
    }
    SimulatedGroup group =
        simulate_group(specs, config, seed + static_cast<std::uint64_t>(g) + 1);
    for (int m = 0; m < config.group_size; ++m) {
      Trajectory t = std::move(group.trajectories[static_cast<std::size_t>(m)]);
      t.uid = "p" + std::to_string(who[static_cast<std::size_t>(m)]);
      lp.labels[t.uid] = specs[static_cast<std::size_t>(m)].kind;
      lp.intentions[t.uid] = std::move(group.intention_paths[static_cast<std::size_t>(m)]);
      lp.panel.trajectories.push_back(std::move(t));
    }
  }
  // Stable uid order regardless of the group shuffle.
  std::sort(lp.panel.trajectories.begin(), lp.panel.trajectories.end(),
            [](const Trajectory& a, const Trajectory& b) {
              auto key = [](const std::string& uid) {
                return std::stoi(uid.substr(1));
              };
              return key(a.uid) < key(b.uid);
            });
  lp.panel.validate();
  return lp;
}

void save_labels(const LabeledPanel& lp, const std::string& path) {
  std::vector<std::string> lines;
  lines.push_back("uid,archetype");
  for (const auto& t : lp.panel.trajectories)
    lines.push_back(t.uid + "," + archetype_name(lp.labels.at(t.uid)));
  write_lines(path, lines);
}

}  // namespace pgg
