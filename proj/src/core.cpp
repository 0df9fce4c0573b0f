#include "pgg/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pgg/csv.hpp"

namespace pgg {

void GameConfig::validate() const {
  if (!(multiplier > 0.0 && multiplier < 1.0))
    throw std::invalid_argument("GameConfig: multiplier must lie in (0,1)");
  if (group_size < 2)
    throw std::invalid_argument("GameConfig: group_size must be >= 2");
  if (rounds < 2) throw std::invalid_argument("GameConfig: rounds must be >= 2");
  if (!(endowment > 0.0))
    throw std::invalid_argument("GameConfig: endowment must be positive");
}

void Trajectory::validate() const {
  if (actions.size() != states.size())
    throw std::invalid_argument("Trajectory " + uid +
                                ": actions and states differ in length");
  for (double v : actions)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("Trajectory " + uid + ": action outside [0,1]");
  for (double v : states)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("Trajectory " + uid + ": state outside [0,1]");
}

int Panel::game_length() const {
  return trajectories.empty() ? 0 : trajectories.front().game_length();
}

void Panel::validate() const {
  std::set<std::string> seen;
  for (const auto& t : trajectories) {
    t.validate();
    if (t.game_length() != game_length())
      throw std::invalid_argument("Panel: mixed game lengths (uid " + t.uid + ")");
    if (!seen.insert(t.uid).second)
      throw std::invalid_argument("Panel: duplicate uid " + t.uid);
  }
}

double payoff(const GameConfig& config, double own,
              const std::vector<double>& all_contribs) {
  config.validate();
  bool found = false;
  double total = 0.0;
  for (double c : all_contribs) {
    if (c < 0.0 || c > config.endowment)
      throw std::domain_error("payoff: contribution outside [0, endowment]");
    if (c == own) found = true;
    total += c;
  }
  if (!found) throw std::domain_error("payoff: own contribution not in group vector");
  return config.endowment - own + config.multiplier * total;
}

double others_average(const GameConfig& config,
                      const std::vector<double>& all_contribs, int index) {
  if (config.group_size < 2)
    throw std::domain_error("others_average: group_size must be >= 2");
  if (index < 0 || index >= static_cast<int>(all_contribs.size()))
    throw std::domain_error("others_average: index out of range");
  double total = 0.0;
  for (std::size_t j = 0; j < all_contribs.size(); ++j)
    if (static_cast<int>(j) != index) total += all_contribs[j];
  return total / static_cast<double>(all_contribs.size() - 1);
}

double normalize_contribution(double raw, double endowment) {
  if (raw < 0.0 || raw > endowment)
    throw std::domain_error("normalize: contribution outside [0, endowment]");
  return raw / endowment;
}

int bin_of(double v) {
  const int b = static_cast<int>(std::floor(v * kNumBins));
  return std::min(b, kNumBins - 1);
}

DiscreteTrajectory discretize(const Trajectory& traj) {
  traj.validate();
  DiscreteTrajectory out;
  out.uid = traj.uid;
  const int T = traj.game_length();
  out.triplets.reserve(static_cast<std::size_t>(std::max(0, T - 1)));
  // The state for the decision in round t is the others'-average observed
  // after round t-1; round 1 has no prior state and is dropped.
  for (int t = 1; t < T; ++t) {
    Triplet tr;
    tr.state = bin_of(traj.states[t - 1]);
    tr.action = bin_of(traj.actions[t]);
    tr.next_state = bin_of(traj.states[t]);
    out.triplets.push_back(tr);
  }
  return out;
}

namespace {

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("ingestion error: bad " + what + " value '" + s + "'");
  }
}

int parse_int(const std::string& s, const std::string& what) {
  const double v = parse_double(s, what);
  const int i = static_cast<int>(std::llround(v));
  if (std::abs(v - i) > 1e-9)
    throw std::runtime_error("ingestion error: non-integer " + what + " '" + s + "'");
  return i;
}

struct RawRow {
  int round = 0;
  double contribution = 0.0;
  bool has_others = false;
  double others = 0.0;
  int game_length = 0;
  std::string group;
};

}  // namespace

Panel load_panel(const std::string& path, double endowment) {
  const CsvTable t = read_csv(path);
  const int c_uid = t.column("uid"), c_round = t.column("round"),
            c_contrib = t.column("contribution"), c_others = t.column("others_avg"),
            c_len = t.column("game_length"), c_group = t.column("group_id");
  if (c_uid < 0 || c_round < 0 || c_contrib < 0 || c_others < 0 || c_len < 0)
    throw std::runtime_error(
        "ingestion error: panel CSV requires header "
        "uid,round,contribution,others_avg,game_length[,group_id]");

  std::map<std::string, std::map<int, RawRow>> by_uid;
  std::vector<std::string> uid_order;
  // (group, round) -> list of (uid, contribution) for others_avg computation
  std::map<std::pair<std::string, int>, std::vector<std::pair<std::string, double>>>
      group_rows;

  for (const auto& row : t.rows) {
    const std::string uid = row[static_cast<std::size_t>(c_uid)];
    RawRow r;
    r.round = parse_int(row[static_cast<std::size_t>(c_round)], "round");
    r.contribution =
        parse_double(row[static_cast<std::size_t>(c_contrib)], "contribution");
    r.game_length = parse_int(row[static_cast<std::size_t>(c_len)], "game_length");
    const std::string& oth = row[static_cast<std::size_t>(c_others)];
    if (!oth.empty()) {
      r.has_others = true;
      r.others = parse_double(oth, "others_avg");
    } else {
      if (c_group < 0 || row[static_cast<std::size_t>(c_group)].empty())
        throw std::runtime_error("ingestion error: uid " + uid +
                                 " has empty others_avg and no group_id");
      r.group = row[static_cast<std::size_t>(c_group)];
      group_rows[{r.group, r.round}].push_back({uid, r.contribution});
    }
    auto& rows = by_uid[uid];
    if (rows.count(r.round))
      throw std::runtime_error("ingestion error: duplicate (uid, round) for uid " +
                               uid);
    if (rows.empty()) uid_order.push_back(uid);
    rows[r.round] = r;
  }

  Panel panel;
  int expected_len = -1;
  for (const auto& uid : uid_order) {
    const auto& rows = by_uid[uid];
    const int len = rows.begin()->second.game_length;
    if (expected_len < 0) expected_len = len;
    if (len != expected_len)
      throw std::runtime_error("ingestion error: mixed game lengths (uid " + uid +
                               ")");
    Trajectory traj;
    traj.uid = uid;
    for (int round = 1; round <= len; ++round) {
      auto it = rows.find(round);
      if (it == rows.end())
        throw std::runtime_error("ingestion error: uid " + uid +
                                 " missing round " + std::to_string(round));
      const RawRow& r = it->second;
      if (r.game_length != len)
        throw std::runtime_error("ingestion error: inconsistent game_length (uid " +
                                 uid + ")");
      double others;
      if (r.has_others) {
        others = r.others;
      } else {
        const auto& members = group_rows[{r.group, round}];
        if (members.size() < 2)
          throw std::runtime_error("ingestion error: uid " + uid +
                                   " group too small to compute others_avg");
        double total = 0.0;
        for (const auto& [muid, c] : members)
          if (muid != uid) total += c;
        others = total / static_cast<double>(members.size() - 1);
      }
      traj.actions.push_back(normalize_contribution(r.contribution, endowment));
      traj.states.push_back(normalize_contribution(others, endowment));
    }
    panel.trajectories.push_back(std::move(traj));
  }
  panel.validate();
  return panel;
}

void save_panel(const Panel& panel, const std::string& path, double endowment) {
  std::vector<std::string> lines;
  lines.push_back("uid,round,contribution,others_avg,game_length");
  for (const auto& t : panel.trajectories) {
    for (int r = 0; r < t.game_length(); ++r) {
      std::ostringstream ss;
      ss << t.uid << ',' << (r + 1) << ',' << fmt_num(t.actions[r] * endowment)
         << ',' << fmt_num(t.states[r] * endowment) << ',' << t.game_length();
      lines.push_back(ss.str());
    }
  }
  write_lines(path, lines);
}

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected key=value, got '" + line + "'");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.pop_back();
    };
    trim(key);
    trim(val);
    if (key == "endowment") cfg.game.endowment = std::stod(val);
    else if (key == "multiplier") cfg.game.multiplier = std::stod(val);
    else if (key == "group_size") cfg.game.group_size = std::stoi(val);
    else if (key == "rounds") cfg.game.rounds = std::stoi(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else throw std::runtime_error("config: unknown key '" + key + "'");
  }
  cfg.game.validate();
  return cfg;
}

}  // namespace pgg
