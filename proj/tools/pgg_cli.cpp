// Command-line front end: simulate | cluster | fit-hiql | classify | report.
// All tables are CSV with headers; figures are self-contained SVG documents.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pgg/cluster.hpp"
#include "pgg/core.hpp"
#include "pgg/csv.hpp"
#include "pgg/dtw.hpp"
#include "pgg/env.hpp"
#include "pgg/hiql.hpp"
#include "pgg/stability.hpp"
#include "pgg/svg.hpp"
#include "pgg/typing.hpp"
#include "pgg/util.hpp"

namespace fs = std::filesystem;
using namespace pgg;

namespace {

constexpr const char* kVersion = "1.0.0";

// Invalid-input failures exit with code 2; anything else internal is 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;  // 0 = available parallelism
  std::string out = "out";
  bool deterministic = false;
};

int effective_threads(const GlobalArgs& g) {
  if (g.threads > 0) return g.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

RunConfig resolve_config(const GlobalArgs& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) cfg = load_run_config(g.config_path);
  if (g.seed_set) cfg.seed = g.seed;
  return cfg;
}

void write_manifest(const GlobalArgs& g, const std::string& subcommand,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::pair<std::string, std::string>>& params) {
  std::vector<std::string> lines;
  lines.push_back("subcommand=" + subcommand);
  lines.push_back(std::string("version=") + kVersion);
  lines.push_back("out=" + g.out);
  for (const auto& [k, v] : params) lines.push_back(k + "=" + v);
  for (const auto& path : inputs) {
    lines.push_back("input=" + path);
    lines.push_back("input_hash=" + std::to_string(fnv1a(read_file(path))));
  }
  write_lines((fs::path(g.out) / "run.txt").string(), lines);
}

Panel load_panel_checked(const std::string& path, double endowment) {
  Panel panel;
  try {
    panel = load_panel(path, endowment);
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
  if (panel.size() == 0) throw InputError("empty panel");
  return panel;
}

std::vector<std::pair<ArchetypeSpec, int>> parse_census(const std::string& text,
                                                        double markov_p,
                                                        double noise_sd) {
  std::vector<std::pair<ArchetypeSpec, int>> census;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw InputError("census entry '" + item + "' is not name=count");
    ArchetypeSpec spec;
    try {
      spec.kind = parse_archetype(item.substr(0, eq));
    } catch (const std::runtime_error& e) {
      throw InputError(e.what());
    }
    spec.markov_p = markov_p;
    spec.noise_sd = noise_sd;
    int count = 0;
    try {
      count = std::stoi(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw InputError("census entry '" + item + "' has a bad count");
    }
    census.push_back({spec, count});
  }
  if (census.empty()) throw InputError("empty census");
  return census;
}

// Round (1-based, >= 2) of the largest consecutive contribution decrease;
// 0 when the series never falls.
int drop_round(const Trajectory& t) {
  int best_round = 0;
  double best_drop = 0.0;
  for (int r = 1; r < t.game_length(); ++r) {
    const double drop = t.actions[static_cast<std::size_t>(r - 1)] -
                        t.actions[static_cast<std::size_t>(r)];
    if (drop > best_drop) {
      best_drop = drop;
      best_round = r + 1;
    }
  }
  return best_round;
}

// Member row indices of a cluster ordered by descending mean action, the
// heatmap row convention.
std::vector<int> heatmap_order(const Panel& panel, const std::vector<int>& members) {
  std::vector<int> order = members;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return mean(panel.trajectories[static_cast<std::size_t>(a)].actions) >
           mean(panel.trajectories[static_cast<std::size_t>(b)].actions);
  });
  return order;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string census = "free_rider=20,unconditional_cooperator=20,"
                       "conditional_cooperator=20,threshold_switcher=20,"
                       "farsighted_free_rider=20,markov_switcher=20";
  int rounds = 10;
  int group_size = 4;
  double endowment = 10.0;
  double markov_p = 0.5;
  double noise_sd = 0.08;
};

int cmd_simulate(const GlobalArgs& g, const SimulateArgs& a) {
  RunConfig cfg = resolve_config(g);
  cfg.game.rounds = a.rounds;
  cfg.game.group_size = a.group_size;
  cfg.game.endowment = a.endowment;
  try {
    cfg.game.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  const auto census = parse_census(a.census, a.markov_p, a.noise_sd);
  LabeledPanel lp;
  try {
    lp = simulate_panel(census, cfg.game, cfg.seed);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  fs::create_directories(g.out);
  save_panel(lp.panel, (fs::path(g.out) / "panel.csv").string(), cfg.game.endowment);
  save_labels(lp, (fs::path(g.out) / "labels.csv").string());
  write_manifest(g, "simulate", {},
                 {{"seed", std::to_string(cfg.seed)},
                  {"census", a.census},
                  {"rounds", std::to_string(a.rounds)},
                  {"group_size", std::to_string(a.group_size)},
                  {"endowment", fmt_num(a.endowment)}});
  return 0;
}

// ---------------------------------------------------------------------------
// cluster

struct ClusterArgs {
  std::string panel_path;
  double endowment = 10.0;
  std::string dims = "joint";
  std::string distance = "dtw";  // dtw | euclidean
  std::string method = "spectral";
  int k = 0;  // 0 = select via CVI
  int k_min = 2, k_max = 8;
  int min_cluster_size = 30;
};

int cmd_cluster(const GlobalArgs& g, const ClusterArgs& a) {
  const RunConfig cfg = resolve_config(g);
  const Panel panel = load_panel_checked(a.panel_path, a.endowment);
  const DtwDims dims = parse_dims(a.dims);
  fs::create_directories(g.out);

  DistanceMatrix dm;
  if (a.distance == "dtw") {
    dm = distance_matrix(panel, dims, effective_threads(g));
  } else if (a.distance == "euclidean") {
    dm = euclidean_distance_matrix(panel, dims);
  } else {
    throw InputError("unknown distance '" + a.distance + "' (dtw|euclidean)");
  }
  save_distance_matrix(dm, (fs::path(g.out) / "distance_matrix.csv").string());

  int k = a.k;
  if (k == 0) {
    const CviReport report =
        cvi_report(dm, panel, dims, a.k_min, a.k_max, cfg.seed);
    save_cvi_report(report, (fs::path(g.out) / "cvi_report.csv").string());
    k = select_k(report, a.min_cluster_size);
  }

  ClusterSolution sol;
  if (a.method == "spectral") sol = spectral_cluster(dm, panel, k, cfg.seed);
  else if (a.method == "kmedoids") sol = kmedoids_cluster(dm, panel, k, cfg.seed);
  else if (a.method == "agglomerative")
    sol = agglomerative_cluster(dm, panel, k, Linkage::Average);
  else if (a.method == "dba-kmeans") sol = dba_kmeans_cluster(panel, k, dims, cfg.seed);
  else throw InputError("unknown method '" + a.method + "'");
  save_assignments(sol, (fs::path(g.out) / "assignments.csv").string());

  // Drop-point markers (round of the largest consecutive decrease).
  {
    std::vector<std::string> lines{"uid,drop_round"};
    for (const auto& t : panel.trajectories)
      lines.push_back(t.uid + "," + std::to_string(drop_round(t)));
    write_lines((fs::path(g.out) / "drop_points.csv").string(), lines);
  }

  // Per-cluster barycenters and figures.
  const auto members = cluster_members(sol);
  std::vector<std::string> bary_lines{
      "cluster,round,action,action_iqr_low,action_iqr_high,state,"
      "state_iqr_low,state_iqr_high"};
  for (int c = 0; c < sol.k; ++c) {
    std::vector<Trajectory> mt;
    for (int i : members[static_cast<std::size_t>(c)])
      mt.push_back(panel.trajectories[static_cast<std::size_t>(i)]);
    const Barycenter b = dba_barycenter(mt, dims);
    for (std::size_t t = 0; t < b.actions.size(); ++t) {
      std::ostringstream ss;
      ss << (c + 1) << ',' << (t + 1) << ',' << fmt_num(b.actions[t]) << ','
         << fmt_num(b.action_iqr_low[t]) << ',' << fmt_num(b.action_iqr_high[t])
         << ',' << fmt_num(b.states[t]) << ',' << fmt_num(b.state_iqr_low[t])
         << ',' << fmt_num(b.state_iqr_high[t]);
      bary_lines.push_back(ss.str());
    }

    const std::vector<int> order = heatmap_order(panel, members[static_cast<std::size_t>(c)]);
    std::vector<std::string> order_lines{"row,uid"};
    std::vector<std::vector<double>> action_rows, state_rows;
    for (std::size_t r = 0; r < order.size(); ++r) {
      const auto& t = panel.trajectories[static_cast<std::size_t>(order[r])];
      order_lines.push_back(std::to_string(r + 1) + "," + t.uid);
      action_rows.push_back(t.actions);
      state_rows.push_back(t.states);
    }
    const std::string suffix = "cluster" + std::to_string(c + 1);
    write_lines((fs::path(g.out) / ("heatmap_rows_" + suffix + ".csv")).string(),
                order_lines);

    Svg heat(520.0, 240.0, g.deterministic);
    heat.heatmap(10.0, 10.0, 240.0, 220.0, action_rows, "Actions " + suffix);
    heat.heatmap(270.0, 10.0, 240.0, 220.0, state_rows, "States " + suffix);
    heat.save((fs::path(g.out) / ("heatmap_" + suffix + ".svg")).string());

    Svg bary(280.0, 200.0, g.deterministic);
    bary.band_plot(10.0, 10.0, 260.0, 180.0, b.actions, b.action_iqr_low,
                   b.action_iqr_high, "Barycenter " + suffix);
    bary.save((fs::path(g.out) / ("barycenter_" + suffix + ".svg")).string());
  }
  write_lines((fs::path(g.out) / "barycenters.csv").string(), bary_lines);

  // Heterogeneity summary for the chosen partition.
  save_heterogeneity_report(
      heterogeneity(dm, panel, sol, dims),
      (fs::path(g.out) / "heterogeneity.csv").string());

  write_manifest(g, "cluster", {a.panel_path},
                 {{"seed", std::to_string(cfg.seed)},
                  {"dims", a.dims},
                  {"distance", a.distance},
                  {"method", a.method},
                  {"k", std::to_string(k)}});
  return 0;
}

// ---------------------------------------------------------------------------
// fit-hiql

struct FitArgs {
  std::string panel_path;
  std::string assignments_path;
  double endowment = 10.0;
  int k_intentions = 2;
  double gamma = 0.99;
  double beta = 1.0;
  int folds = 5;
  int repeats = 10;
  int n_init = 10;
  int max_iter = 100;
  bool run_cv = false;
  int select_k_max = 0;  // >0 runs select_K over 1..select_k_max
};

std::vector<std::vector<double>> actions_of(
    const std::vector<DiscreteTrajectory>& data) {
  std::vector<std::vector<double>> out;
  for (const auto& d : data) {
    std::vector<double> s;
    for (const auto& tr : d.triplets)
      s.push_back(tr.action / static_cast<double>(kNumBins - 1));
    out.push_back(std::move(s));
  }
  return out;
}

int cmd_fit_hiql(const GlobalArgs& g, const FitArgs& a) {
  const RunConfig cfg = resolve_config(g);
  const Panel panel = load_panel_checked(a.panel_path, a.endowment);
  if (panel.game_length() < 2)
    throw InputError("panel too short for intention inference");
  fs::create_directories(g.out);

  std::vector<DiscreteTrajectory> data;
  for (const auto& t : panel.trajectories) data.push_back(discretize(t));

  FitOptions opts;
  opts.n_init = a.n_init;
  opts.max_em_iter = a.max_iter;

  std::vector<std::string> report_lines{
      "scope,K,train_ll,train_ll_per_decision,bic,n_decisions,chosen_init,"
      "reinitialized"};
  auto add_report = [&](const std::string& scope, int K, const FitReport& r) {
    std::ostringstream ss;
    ss << scope << ',' << K << ',' << fmt_num(r.train_ll) << ','
       << fmt_num(r.train_ll / r.n_decisions) << ',' << fmt_num(r.bic) << ','
       << r.n_decisions << ',' << r.chosen_init << ','
       << (r.reinitialized_intention ? 1 : 0);
    report_lines.push_back(ss.str());
  };

  auto [global_model, global_report] = fit(data, a.k_intentions, cfg.seed, opts);
  global_model.gamma = a.gamma;
  global_model.beta = a.beta;
  if (a.gamma != 0.99 || a.beta != 1.0) global_model.refresh_derived();
  add_report("global", a.k_intentions, global_report);

  std::vector<IntentionPosterior> global_post;
  for (const auto& d : data) global_post.push_back(e_step(global_model, d).posterior);
  if (a.k_intentions == 2)
    align_latents(global_post, actions_of(data), &global_model);
  save_model(global_model, (fs::path(g.out) / "model_global.txt").string());
  save_posteriors(global_post,
                  (fs::path(g.out) / "posteriors_global.csv").string());

  if (!a.assignments_path.empty()) {
    ClusterSolution sol;
    try {
      sol = load_assignments(a.assignments_path);
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
    std::map<std::string, int> label;
    for (std::size_t i = 0; i < sol.uids.size(); ++i) label[sol.uids[i]] = sol.labels[i];
    std::vector<std::vector<DiscreteTrajectory>> cluster_data(
        static_cast<std::size_t>(sol.k));
    for (const auto& d : data) {
      auto it = label.find(d.uid);
      if (it == label.end())
        throw InputError("uid " + d.uid + " missing from assignments");
      cluster_data[static_cast<std::size_t>(it->second)].push_back(d);
    }
    auto fits = cluster_initialized_fit(cluster_data, global_model, opts);
    for (int c = 0; c < sol.k; ++c) {
      auto& [model, rep] = fits[static_cast<std::size_t>(c)];
      add_report("cluster" + std::to_string(c + 1), a.k_intentions, rep);
      std::vector<IntentionPosterior> post;
      for (const auto& d : cluster_data[static_cast<std::size_t>(c)])
        post.push_back(e_step(model, d).posterior);
      if (a.k_intentions == 2)
        align_latents(post, actions_of(cluster_data[static_cast<std::size_t>(c)]),
                      &model);
      const std::string suffix = "cluster" + std::to_string(c + 1);
      save_model(model, (fs::path(g.out) / ("model_" + suffix + ".txt")).string());
      save_posteriors(post,
                      (fs::path(g.out) / ("posteriors_" + suffix + ".csv")).string());
    }
  }

  if (a.run_cv) {
    CvOptions cv;
    cv.folds = a.folds;
    cv.repeats = a.repeats;
    cv.fit = opts;
    const CvFitResult r = cv_fit(data, a.k_intentions, cv, cfg.seed);
    std::vector<std::string> lines{"repeat,fold,train_ll_per_decision,test_ll_per_decision"};
    for (const auto& cell : r.cells) {
      std::ostringstream ss;
      ss << cell.repeat << ',' << cell.fold << ','
         << fmt_num(cell.train_ll_per_decision) << ','
         << fmt_num(cell.test_ll_per_decision);
      lines.push_back(ss.str());
    }
    lines.push_back("mean," + std::string("-,") +
                    fmt_num(r.mean_train_ll_per_decision) + "," +
                    fmt_num(r.mean_test_ll_per_decision));
    write_lines((fs::path(g.out) / "cv.csv").string(), lines);
    save_posteriors(r.posteriors, (fs::path(g.out) / "posteriors_cv.csv").string());
  }

  if (a.select_k_max > 0) {
    CvOptions cv;
    cv.folds = a.folds;
    cv.repeats = a.repeats;
    cv.fit = opts;
    const SelectKResult r = select_K(data, 1, a.select_k_max, cv, cfg.seed);
    std::vector<std::string> lines{"K,mean_test_ll_per_decision,bic,recommended"};
    for (const auto& row : r.rows) {
      std::ostringstream ss;
      ss << row.K << ',' << fmt_num(row.mean_test_ll_per_decision) << ','
         << fmt_num(row.bic) << ',' << (row.K == r.recommended ? 1 : 0);
      lines.push_back(ss.str());
    }
    write_lines((fs::path(g.out) / "select_k.csv").string(), lines);
  }

  write_lines((fs::path(g.out) / "fit_report.csv").string(), report_lines);
  std::vector<std::string> inputs{a.panel_path};
  if (!a.assignments_path.empty()) inputs.push_back(a.assignments_path);
  write_manifest(g, "fit-hiql", inputs,
                 {{"seed", std::to_string(cfg.seed)},
                  {"k_intentions", std::to_string(a.k_intentions)},
                  {"gamma", fmt_num(a.gamma)},
                  {"beta", fmt_num(a.beta)}});
  return 0;
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyArgs {
  std::string fit_dir;
  std::string assignments_path;
  std::string panel_path;
  double endowment = 10.0;
  double stickiness_max = 0.15;
  double switching_min = 0.35;
  double volatility_min = 0.25;
};

int cmd_classify(const GlobalArgs& g, const ClassifyArgs& a) {
  ClusterSolution sol;
  try {
    sol = load_assignments(a.assignments_path);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  fs::create_directories(g.out);

  SwitcherCriteria criteria;
  criteria.stickiness_max = a.stickiness_max;
  criteria.switching_min = a.switching_min;
  criteria.volatility_min = a.volatility_min;

  std::vector<std::vector<IntentionPosterior>> cluster_posteriors;
  std::vector<std::vector<std::vector<double>>> cluster_lambdas;
  for (int c = 0; c < sol.k; ++c) {
    const std::string suffix = "cluster" + std::to_string(c + 1);
    const fs::path model_path = fs::path(a.fit_dir) / ("model_" + suffix + ".txt");
    const fs::path post_path =
        fs::path(a.fit_dir) / ("posteriors_" + suffix + ".csv");
    if (!fs::exists(model_path) || !fs::exists(post_path))
      throw InputError("missing per-cluster fit outputs for " + suffix + " in " +
                       a.fit_dir);
    const HiqlModel model = load_model(model_path.string());
    if (model.K != 2)
      throw InputError("classify requires two-intention models (got K=" +
                       std::to_string(model.K) + ")");
    cluster_lambdas.push_back(model.lambda);
    cluster_posteriors.push_back(load_posteriors(post_path.string()));
  }
  const auto metrics = cluster_metrics(cluster_posteriors, cluster_lambdas, criteria);
  save_cluster_metrics(metrics, (fs::path(g.out) / "metrics.csv").string());

  // Fig. 4-style scatter: stickiness vs switching rate with criterion lines.
  {
    std::vector<double> xs, ys;
    for (const auto& m : metrics) {
      xs.push_back(m.stickiness_mean);
      ys.push_back(m.switching);
    }
    Svg svg(320.0, 260.0, g.deterministic);
    svg.scatter(10.0, 10.0, 300.0, 240.0, xs, ys, criteria.stickiness_max,
                criteria.switching_min, "Stickiness vs switching rate",
                "stickiness", "switching rate");
    svg.save((fs::path(g.out) / "switcher_scatter.svg").string());
  }

  std::vector<std::string> inputs{a.assignments_path};
  if (!a.panel_path.empty()) {
    const Panel panel = load_panel_checked(a.panel_path, a.endowment);
    inputs.push_back(a.panel_path);
    // First-round type shares.
    int fr = 0, cc = 0, fc = 0;
    std::vector<std::string> lines{"uid,first_round_type"};
    for (const auto& t : panel.trajectories) {
      const FirstRoundType type = classify_first_round(t.actions.front());
      lines.push_back(t.uid + "," + first_round_type_name(type));
      (type == FirstRoundType::FreeRider
           ? fr
           : type == FirstRoundType::ConditionalCooperator ? cc : fc)++;
    }
    const double n = panel.size();
    lines.push_back("share_free_rider," + fmt_num(fr / n));
    lines.push_back("share_conditional_cooperator," + fmt_num(cc / n));
    lines.push_back("share_full_cooperator," + fmt_num(fc / n));
    write_lines((fs::path(g.out) / "first_round.csv").string(), lines);

    const auto resp = responsiveness(panel, sol);
    std::vector<std::string> rlines{"cluster,responsiveness,degenerate"};
    for (std::size_t c = 0; c < resp.size(); ++c)
      rlines.push_back(std::to_string(c + 1) + "," + fmt_num(resp[c].r) + "," +
                       (resp[c].degenerate ? "1" : "0"));
    write_lines((fs::path(g.out) / "responsiveness.csv").string(), rlines);
  }

  write_manifest(g, "classify", inputs,
                 {{"fit_dir", a.fit_dir},
                  {"stickiness_max", fmt_num(criteria.stickiness_max)},
                  {"switching_min", fmt_num(criteria.switching_min)},
                  {"volatility_min", fmt_num(criteria.volatility_min)}});
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string panel_path;
  std::string assignments_path;
  std::string fit_dir;
  double endowment = 10.0;
  std::string dims = "joint";
};

int cmd_report(const GlobalArgs& g, const ReportArgs& a) {
  const Panel panel = load_panel_checked(a.panel_path, a.endowment);
  ClusterSolution sol;
  try {
    sol = load_assignments(a.assignments_path);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  if (static_cast<int>(sol.uids.size()) != panel.size())
    throw InputError("assignments do not cover the panel");
  const DtwDims dims = parse_dims(a.dims);
  fs::create_directories(g.out);

  const bool have_fit = !a.fit_dir.empty();
  const double col_w = 200.0, cell_h = 150.0, margin = 10.0;
  const int rows = have_fit ? 4 : 2;
  Svg svg(margin * 2 + col_w * sol.k, margin * 2 + cell_h * rows + 20.0,
          g.deterministic);
  svg.text(margin, margin + 10.0, "Cluster master panel", 13.0, "start",
           "#111111");

  const auto members = cluster_members(sol);
  for (int c = 0; c < sol.k; ++c) {
    const double x = margin + c * col_w;
    const std::string name = "cluster" + std::to_string(c + 1);

    // Row 1: action heatmap, rows by descending mean action.
    std::vector<std::vector<double>> action_rows;
    std::vector<Trajectory> mt;
    for (int i : heatmap_order(panel, members[static_cast<std::size_t>(c)]))
      action_rows.push_back(panel.trajectories[static_cast<std::size_t>(i)].actions);
    for (int i : members[static_cast<std::size_t>(c)])
      mt.push_back(panel.trajectories[static_cast<std::size_t>(i)]);
    double y = margin + 20.0;
    svg.heatmap(x + 5.0, y, col_w - 10.0, cell_h - 10.0, action_rows, name);

    // Row 2: action barycenter with IQR band.
    const Barycenter b = dba_barycenter(mt, dims);
    y += cell_h;
    svg.band_plot(x + 5.0, y, col_w - 10.0, cell_h - 10.0, b.actions,
                  b.action_iqr_low, b.action_iqr_high, "barycenter " + name);

    if (have_fit) {
      const fs::path model_path = fs::path(a.fit_dir) / ("model_" + name + ".txt");
      const fs::path post_path =
          fs::path(a.fit_dir) / ("posteriors_" + name + ".csv");
      if (!fs::exists(model_path) || !fs::exists(post_path))
        throw InputError("missing fit outputs for " + name + " in " + a.fit_dir);
      const HiqlModel model = load_model(model_path.string());
      const auto posts = load_posteriors(post_path.string());

      // Row 3: DBA barycenter of the intention-1 posterior trajectories.
      std::vector<Trajectory> pt;
      for (const auto& p : posts) {
        Trajectory t;
        t.uid = p.uid;
        for (const auto& row : p.probs) {
          t.actions.push_back(row.front());
          t.states.push_back(row.front());
        }
        pt.push_back(std::move(t));
      }
      const Barycenter pb = dba_barycenter(pt, DtwDims::ActionOnly);
      y += cell_h;
      svg.band_plot(x + 5.0, y, col_w - 10.0, cell_h - 10.0, pb.actions,
                    pb.action_iqr_low, pb.action_iqr_high,
                    "intention 1 posterior " + name, "#762a83");

      // Row 4: Lambda transition diagram (two-intention models only).
      y += cell_h;
      if (model.K == 2)
        svg.transition_diagram(x + 5.0, y, col_w - 10.0, cell_h - 10.0,
                               model.lambda, "Lambda " + name);
      else
        svg.text(x + 5.0, y + 20.0, "Lambda (K=" + std::to_string(model.K) + ")",
                 10.0);
    }
  }
  svg.save((fs::path(g.out) / "master_panel.svg").string());

  std::vector<std::string> inputs{a.panel_path, a.assignments_path};
  write_manifest(g, "report", inputs, {{"fit_dir", a.fit_dir}, {"dims", a.dims}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavioral trajectory clustering and intention inference"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "Flat key=value run configuration");
  app.add_option("--seed", g.seed, "Seed override")->each([&](const std::string&) {
    g.seed_set = true;
  });
  app.add_option("--threads", g.threads, "Worker threads (0 = auto)");
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--deterministic", g.deterministic,
               "Suppress timestamps in SVG output");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a labeled synthetic panel");
  c_sim->add_option("--census", sim.census, "archetype=count, comma separated");
  c_sim->add_option("--rounds", sim.rounds, "Game length");
  c_sim->add_option("--group-size", sim.group_size, "Players per group");
  c_sim->add_option("--endowment", sim.endowment, "Tokens per round");
  c_sim->add_option("--markov-p", sim.markov_p, "Markov switcher flip probability");
  c_sim->add_option("--noise-sd", sim.noise_sd, "Action noise SD");

  ClusterArgs cl;
  auto* c_cl = app.add_subcommand("cluster", "DTW clustering pipeline");
  c_cl->add_option("--panel", cl.panel_path, "Panel CSV")->required();
  c_cl->add_option("--endowment", cl.endowment, "Tokens per round");
  c_cl->add_option("--dims", cl.dims, "action|state|joint");
  c_cl->add_option("--distance", cl.distance, "dtw|euclidean");
  c_cl->add_option("--method", cl.method,
                   "spectral|kmedoids|agglomerative|dba-kmeans");
  c_cl->add_option("--k", cl.k, "Cluster count (0 = select via CVI)");
  c_cl->add_option("--k-min", cl.k_min, "CVI grid lower bound");
  c_cl->add_option("--k-max", cl.k_max, "CVI grid upper bound");
  c_cl->add_option("--min-cluster-size", cl.min_cluster_size,
                   "Size floor for select_k");

  FitArgs ft;
  auto* c_ft = app.add_subcommand("fit-hiql", "Intention model fitting");
  c_ft->add_option("--panel", ft.panel_path, "Panel CSV")->required();
  c_ft->add_option("--assignments", ft.assignments_path,
                   "Cluster assignments for per-cluster fits");
  c_ft->add_option("--endowment", ft.endowment, "Tokens per round");
  c_ft->add_option("--k-intentions", ft.k_intentions, "Number of intentions");
  c_ft->add_option("--gamma", ft.gamma, "Discount factor");
  c_ft->add_option("--beta", ft.beta, "Boltzmann temperature");
  c_ft->add_option("--folds", ft.folds, "CV folds");
  c_ft->add_option("--repeats", ft.repeats, "CV repeats");
  c_ft->add_option("--n-init", ft.n_init, "EM restarts");
  c_ft->add_option("--max-iter", ft.max_iter, "EM iteration cap");
  c_ft->add_flag("--cv", ft.run_cv, "Run repeated stratified cross-validation");
  c_ft->add_option("--select-k-max", ft.select_k_max,
                   "Run select_K over 1..N intentions");

  ClassifyArgs cf;
  auto* c_cf = app.add_subcommand("classify", "Behavioral type metrics");
  c_cf->add_option("--fit-dir", cf.fit_dir, "fit-hiql output directory")->required();
  c_cf->add_option("--assignments", cf.assignments_path, "Cluster assignments")
      ->required();
  c_cf->add_option("--panel", cf.panel_path, "Panel CSV (first-round types)");
  c_cf->add_option("--endowment", cf.endowment, "Tokens per round");
  c_cf->add_option("--stickiness-max", cf.stickiness_max, "Switcher criterion");
  c_cf->add_option("--switching-min", cf.switching_min, "Switcher criterion");
  c_cf->add_option("--volatility-min", cf.volatility_min, "Switcher criterion");

  ReportArgs rp;
  auto* c_rp = app.add_subcommand("report", "Master panel figure");
  c_rp->add_option("--panel", rp.panel_path, "Panel CSV")->required();
  c_rp->add_option("--assignments", rp.assignments_path, "Cluster assignments")
      ->required();
  c_rp->add_option("--fit-dir", rp.fit_dir, "fit-hiql output directory");
  c_rp->add_option("--endowment", rp.endowment, "Tokens per round");
  c_rp->add_option("--dims", rp.dims, "action|state|joint");

  // Global flags may appear after the subcommand name.
  for (auto* sub : {c_sim, c_cl, c_ft, c_cf, c_rp}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (c_sim->parsed()) return cmd_simulate(g, sim);
    if (c_cl->parsed()) return cmd_cluster(g, cl);
    if (c_ft->parsed()) return cmd_fit_hiql(g, ft);
    if (c_cf->parsed()) return cmd_classify(g, cf);
    if (c_rp->parsed()) return cmd_report(g, rp);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 1;
}
