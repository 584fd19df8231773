#include "bclust/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bclust/baselines.hpp"
#include "bclust/dataset.hpp"
#include "bclust/features.hpp"
#include "bclust/metrics.hpp"
#include "bclust/parallel.hpp"
#include "bclust/pipeline.hpp"
#include "bclust/report.hpp"
#include "bclust/rng.hpp"

namespace bclust {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// JSON config files: {"threads": 2, "cluster": {"z": 100000, ...}} with one
// nested object per subcommand. Command-line flags override file values.

class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return dump_app(app, default_also).dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::parse_error& e) {
      throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static json dump_app(const CLI::App* app, bool default_also) {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string& name = opt->get_lnames()[0];
      if (opt->get_type_size() != 0) {
        if (opt->count() == 1) {
          j[name] = opt->results().at(0);
        } else if (opt->count() > 1) {
          j[name] = opt->results();
        } else if (default_also && !opt->get_default_str().empty()) {
          j[name] = opt->get_default_str();
        }
      } else if (opt->count() > 0) {
        j[name] = true;
      } else if (default_also) {
        j[name] = false;
      }
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      j[sub->get_name()] = dump_app(sub, default_also);
    }
    return j;
  }

  static void collect(const json& j, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& items) {
    if (!j.is_object()) {
      throw CLI::ConversionError("config: top-level values must be JSON objects");
    }
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        collect(value, nested, items);
        continue;
      }
      CLI::ConfigItem item;
      item.name = key;
      item.parents = parents;
      if (value.is_boolean()) {
        item.inputs = {value.get<bool>() ? "true" : "false"};
      } else if (value.is_array()) {
        for (const auto& v : value) {
          item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
      } else if (value.is_string()) {
        item.inputs = {value.get<std::string>()};
      } else {
        item.inputs = {value.dump()};
      }
      items.push_back(std::move(item));
    }
  }
};

// ---------------------------------------------------------------------------
// Shared helpers

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

json base_report(const std::string& command, const json& config) {
  json report;
  report["version"] = kVersion;
  report["command"] = command;
  report["config"] = config;
  return report;
}

/// One uniformly sampled action per trajectory, rows aligned with the
/// dataset order.
Matrix sample_raw_actions(const Dataset& dataset, std::uint64_t rng_seed) {
  Matrix out(dataset.size(), dataset.action_dim);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    Rng rng(derive_seed(rng_seed, 0x5a, i));
    const Trajectory& traj = dataset.trajectories[i];
    const auto& action = traj.transitions[rng.uniform_index(traj.length())].action;
    std::copy(action.begin(), action.end(), out.row(i).begin());
  }
  return out;
}

/// Up to `count` actions from one label group. Block mode keeps whole
/// trajectories together (preserving within-trajectory structure); otherwise
/// transitions are drawn without replacement across the group.
Matrix sample_group_actions(const Dataset& dataset, int label, std::size_t count,
                            bool block_mode, std::uint64_t rng_seed) {
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.trajectories[i].label == label) members.push_back(i);
  }
  Rng rng(derive_seed(rng_seed, 0x6b, static_cast<std::uint64_t>(label)));

  std::vector<const std::vector<double>*> actions;
  if (block_mode) {
    rng.shuffle(members);
    for (std::size_t idx : members) {
      for (const Transition& tr : dataset.trajectories[idx].transitions) {
        if (actions.size() == count) break;
        actions.push_back(&tr.action);
      }
      if (actions.size() == count) break;
    }
  } else {
    std::vector<const std::vector<double>*> pool;
    for (std::size_t idx : members) {
      for (const Transition& tr : dataset.trajectories[idx].transitions) {
        pool.push_back(&tr.action);
      }
    }
    rng.shuffle(pool);
    pool.resize(std::min(count, pool.size()));
    actions = std::move(pool);
  }

  Matrix out(actions.size(), dataset.action_dim);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    std::copy(actions[i]->begin(), actions[i]->end(), out.row(i).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommand parameter records (bound to CLI11 options)

struct SynthArgs {
  std::string output;
  SynthConfig cfg;
  std::string feature_map = "tanh";
  json config_echo(int threads) const {
    return {{"threads", threads},
            {"synth",
             {{"output", output},
              {"policies", cfg.n_policies},
              {"per-policy", cfg.trajectories_per_policy},
              {"len", cfg.traj_len},
              {"state-dim", cfg.state_dim},
              {"action-dim", cfg.action_dim},
              {"separation", cfg.separation},
              {"noise", cfg.action_noise_std},
              {"weight-scale", cfg.weight_scale},
              {"shared-weights", cfg.shared_weights},
              {"feature-map", feature_map},
              {"seed", cfg.rng_seed}}}};
  }
};

struct PerturbArgs {
  std::string input, output, mode;
  PerturbSpec spec;
  std::uint64_t seed = 0;
};

struct ClusterArgs {
  std::string input, outdir;
  PipelineConfig cfg;
  std::string kde_min_rule = "largest-x";
  std::uint64_t seed = 0;
  bool write_clusters = false;
  json config_echo(int threads) const {
    return {{"threads", threads},
            {"cluster",
             {{"input", input},
              {"outdir", outdir},
              {"z", cfg.seed.z},
              {"g", cfg.seed.g},
              {"g2-fraction", cfg.seed.g2_fraction},
              {"members", cfg.pu.n_members},
              {"hidden", cfg.pu.hyper.hidden_sizes},
              {"lr", cfg.pu.hyper.learning_rate},
              {"epochs", cfg.pu.hyper.epochs},
              {"batch", cfg.pu.hyper.batch_size},
              {"max-rounds", cfg.pu.max_rounds},
              {"neg-ratio", cfg.pu.negatives_per_positive},
              {"kde-grid", cfg.pu.kde_grid_size},
              {"kde-min-rule", kde_min_rule},
              {"max-positive-pairs", cfg.pu.max_positive_pairs},
              {"last-cluster-fraction", cfg.last_cluster_fraction},
              {"max-clusters", cfg.max_clusters},
              {"write-clusters", write_clusters},
              {"seed", seed}}}};
  }
};

// ---------------------------------------------------------------------------
// Subcommand implementations

int run_synth(const SynthArgs& args, int threads) {
  SynthConfig cfg = args.cfg;
  cfg.feature_map = args.feature_map == "identity" ? FeatureMap::kIdentity : FeatureMap::kTanh;
  const Dataset ds = synthesize(cfg);
  save_jsonl(ds, args.output);
  json summary = base_report("synth", args.config_echo(threads));
  summary["n_trajectories"] = ds.size();
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_perturb(const PerturbArgs& args) {
  const Dataset ds = load_jsonl(args.input);
  PerturbSpec spec = args.spec;
  spec.mode = args.mode == "imbalance" ? PerturbSpec::Mode::kImbalance : PerturbSpec::Mode::kNoise;
  const Dataset out = perturb(ds, spec, args.seed);
  save_jsonl(out, args.output);
  std::cout << "perturbed " << ds.size() << " -> " << out.size() << " trajectories\n";
  return 0;
}

int run_cluster(ClusterArgs& args, int threads) {
  const Dataset ds = load_jsonl(args.input);
  ensure_dir(args.outdir);

  PipelineConfig cfg = args.cfg;
  cfg.pu.kde_min_rule = args.kde_min_rule == "largest-density" ? KdeMinRule::kLargestDensity
                                                               : KdeMinRule::kLargestX;
  cfg.seed.rng_seed = args.seed;
  cfg.pu.rng_seed = derive_seed(args.seed, 0xC1);
  cfg.pu.hyper.rng_seed = derive_seed(args.seed, 0xC2);

  const ClusterAssignment assignment = cluster(ds, cfg);
  write_assignment_csv(fs::path(args.outdir) / "assignment.csv", assignment.trajectory_ids,
                       assignment.cluster_ids);

  json report = base_report("cluster", args.config_echo(threads));
  report["n_trajectories"] = ds.size();
  report["n_clusters"] = assignment.n_clusters();
  report["max_clusters_reached"] = assignment.max_clusters_reached;
  json iterations = json::array();
  for (const ClusterIterationInfo& info : assignment.iterations) {
    iterations.push_back({{"cluster", info.cluster_id},
                          {"remaining", info.remaining},
                          {"seed_size", info.seed_size},
                          {"rounds", info.rounds},
                          {"member_count", info.member_count},
                          {"low_mode_count", info.low_mode_count},
                          {"threshold_none", info.threshold_none},
                          {"seed_retained", info.seed_retained},
                          {"last", info.last}});
  }
  report["iterations"] = std::move(iterations);
  std::vector<int> sizes(assignment.n_clusters(), 0);
  for (int id : assignment.cluster_ids) ++sizes[id];
  report["cluster_sizes"] = sizes;
  if (ds.has_labels()) {
    report["metrics"] = {{"ari", ari(assignment.cluster_ids, ds.labels())}};
  }
  write_text(fs::path(args.outdir) / "report.json", report.dump(2) + "\n");

  if (args.write_clusters) {
    for (int c = 0; c < assignment.n_clusters(); ++c) {
      Dataset sub;
      sub.state_dim = ds.state_dim;
      sub.action_dim = ds.action_dim;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (assignment.cluster_ids[i] == c) sub.trajectories.push_back(ds.trajectories[i]);
      }
      save_jsonl(sub, fs::path(args.outdir) / ("cluster_" + std::to_string(c) + ".jsonl"));
    }
  }
  std::cout << "clusters: " << assignment.n_clusters() << '\n';
  return 0;
}

int run_eval(const std::string& pred_path, const std::string& truth_path) {
  const auto pred = read_assignment_csv(pred_path);
  const auto truth = read_assignment_csv(truth_path);
  std::map<std::string, int> truth_by_id;
  for (const auto& [id, label] : truth) {
    if (!truth_by_id.emplace(id, label).second) {
      throw DataError("eval: duplicate trajectory id '" + id + "' in " + truth_path);
    }
  }
  if (pred.size() != truth.size()) {
    throw DataError("eval: files list different trajectory counts");
  }
  std::vector<int> a, b;
  a.reserve(pred.size());
  b.reserve(pred.size());
  for (const auto& [id, label] : pred) {
    const auto it = truth_by_id.find(id);
    if (it == truth_by_id.end()) {
      throw DataError("eval: trajectory '" + id + "' missing from " + truth_path);
    }
    a.push_back(label);
    b.push_back(it->second);
  }
  std::cout << "ari " << format_number(ari(a, b)) << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Cluster multi-behavior trajectory datasets into uni-behavior subsets"};
  app.set_version_flag("--version", std::string(kVersion));
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; command-line flags take precedence");
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0 = hardware)")
      ->envname("BEHAVIOR_CLUST_THREADS");

  // --- synth -----------------------------------------------------------
  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Generate a labeled multi-policy dataset");
  synth->add_option("-o,--output", synth_args.output, "Output JSONL path")->required();
  synth->add_option("--policies", synth_args.cfg.n_policies, "Number of behavior policies");
  synth->add_option("--per-policy", synth_args.cfg.trajectories_per_policy,
                    "Trajectories per policy");
  synth->add_option("--len", synth_args.cfg.traj_len, "Transitions per trajectory");
  synth->add_option("--state-dim", synth_args.cfg.state_dim, "State dimension");
  synth->add_option("--action-dim", synth_args.cfg.action_dim, "Action dimension");
  synth->add_option("--separation", synth_args.cfg.separation, "Policy bias separation scale");
  synth->add_option("--noise", synth_args.cfg.action_noise_std, "Action noise std");
  synth->add_option("--weight-scale", synth_args.cfg.weight_scale, "State-feedback weight scale");
  synth->add_flag("--shared-weights", synth_args.cfg.shared_weights,
                  "All policies share one weight matrix");
  synth->add_option("--feature-map", synth_args.feature_map, "State features: tanh or identity")
      ->check(CLI::IsMember({"tanh", "identity"}));
  synth->add_option("--seed", synth_args.cfg.rng_seed, "RNG seed");

  // --- perturb ---------------------------------------------------------
  PerturbArgs perturb_args;
  CLI::App* pert = app.add_subcommand("perturb", "Subsample label groups or add bounded noise");
  pert->add_option("-i,--input", perturb_args.input, "Input JSONL path")->required();
  pert->add_option("-o,--output", perturb_args.output, "Output JSONL path")->required();
  pert->add_option("--mode", perturb_args.mode, "imbalance or noise")
      ->required()
      ->check(CLI::IsMember({"imbalance", "noise"}));
  pert->add_option("--ratios", perturb_args.spec.imbalance_ratios,
                   "Relative group sizes, one per label");
  pert->add_option("--uniform-share", perturb_args.spec.noise_fraction_uniform,
                   "Share of trajectories given bounded uniform (vs Gaussian) noise");
  pert->add_option("--noise-lo", perturb_args.spec.noise_scale_lo,
                   "Lower noise scale: uniform width or Gaussian std as a fraction of extent");
  pert->add_option("--noise-hi", perturb_args.spec.noise_scale_hi,
                   "Upper noise scale: uniform width or Gaussian std as a fraction of extent");
  pert->add_option("--seed", perturb_args.seed, "RNG seed");

  // --- cluster ---------------------------------------------------------
  ClusterArgs cluster_args;
  CLI::App* clus = app.add_subcommand("cluster", "Extract uni-behavior clusters iteratively");
  clus->add_option("-i,--input", cluster_args.input, "Input JSONL path")->required();
  clus->add_option("-o,--outdir", cluster_args.outdir, "Output directory")->required();
  clus->add_option("--z", cluster_args.cfg.seed.z, "Monte-Carlo subset draws");
  clus->add_option("--g", cluster_args.cfg.seed.g, "Seed subset size");
  clus->add_option("--g2-fraction", cluster_args.cfg.seed.g2_fraction,
                   "Seed expansion size as a fraction of the remaining set");
  clus->add_option("--members", cluster_args.cfg.pu.n_members, "Ensemble members");
  clus->add_option("--hidden", cluster_args.cfg.pu.hyper.hidden_sizes, "Hidden layer sizes");
  clus->add_option("--lr", cluster_args.cfg.pu.hyper.learning_rate, "Learning rate");
  clus->add_option("--epochs", cluster_args.cfg.pu.hyper.epochs, "Training epochs");
  clus->add_option("--batch", cluster_args.cfg.pu.hyper.batch_size, "Mini-batch size");
  clus->add_option("--max-rounds", cluster_args.cfg.pu.max_rounds,
                   "Filter iteration cap per cluster");
  clus->add_option("--neg-ratio", cluster_args.cfg.pu.negatives_per_positive,
                   "Negative pairs per positive pair");
  clus->add_option("--kde-grid", cluster_args.cfg.pu.kde_grid_size, "KDE grid size");
  clus->add_option("--kde-min-rule", cluster_args.kde_min_rule,
                   "Threshold at the largest-x or largest-density KDE minimum")
      ->check(CLI::IsMember({"largest-x", "largest-density"}));
  clus->add_option("--max-positive-pairs", cluster_args.cfg.pu.max_positive_pairs,
                   "Positive-pair cap per round (0 = unlimited)");
  clus->add_option("--last-cluster-fraction", cluster_args.cfg.last_cluster_fraction,
                   "Low-mode fraction that marks the final cluster");
  clus->add_option("--max-clusters", cluster_args.cfg.max_clusters, "Cluster count cap");
  clus->add_flag("--write-clusters", cluster_args.write_clusters,
                 "Write each cluster as its own JSONL file");
  clus->add_option("--seed", cluster_args.seed, "RNG seed");

  // --- baseline --------------------------------------------------------
  CLI::App* base = app.add_subcommand("baseline", "Classical clustering on aggregated actions");
  base->require_subcommand(1);

  struct {
    std::string input, outdir;
    int k = 6, restarts = 10, max_iter = 100;
    std::uint64_t seed = 0;
  } km_args;
  CLI::App* km = base->add_subcommand("kmeans", "Lloyd k-means with k-means++ starts");
  km->add_option("-i,--input", km_args.input, "Input JSONL path")->required();
  km->add_option("-o,--outdir", km_args.outdir, "Output directory")->required();
  km->add_option("-k,--clusters", km_args.k, "Cluster count");
  km->add_option("--restarts", km_args.restarts, "Independent restarts (best SSE wins)");
  km->add_option("--max-iter", km_args.max_iter, "Iteration cap");
  km->add_option("--seed", km_args.seed, "RNG seed");

  struct {
    std::string input, outdir;
    double eps = 0.5;
    int min_pts = 5;
    bool grid = false;
  } db_args;
  CLI::App* db = base->add_subcommand("dbscan", "Density-reachability clustering");
  db->add_option("-i,--input", db_args.input, "Input JSONL path")->required();
  db->add_option("-o,--outdir", db_args.outdir, "Output directory")->required();
  db->add_option("--eps", db_args.eps, "Neighborhood radius");
  db->add_option("--min-pts", db_args.min_pts, "Minimum neighborhood size");
  db->add_flag("--grid", db_args.grid,
               "Grid-search eps in [0.1,2] x min_pts 1..20 against the labels");

  struct {
    std::string input, outdir;
    int k_min = 1, k_max = 12, restarts = 10, max_iter = 100;
    std::uint64_t seed = 0;
  } elbow_args;
  CLI::App* elb = base->add_subcommand("elbow", "SSE-vs-k curve for the elbow method");
  elb->add_option("-i,--input", elbow_args.input, "Input JSONL path")->required();
  elb->add_option("-o,--outdir", elbow_args.outdir, "Output directory")->required();
  elb->add_option("--k-min", elbow_args.k_min, "Smallest k");
  elb->add_option("--k-max", elbow_args.k_max, "Largest k");
  elb->add_option("--restarts", elbow_args.restarts, "Restarts per k");
  elb->add_option("--max-iter", elbow_args.max_iter, "Iteration cap");
  elb->add_option("--seed", elbow_args.seed, "RNG seed");

  // --- eval ------------------------------------------------------------
  struct {
    std::string pred, truth;
  } eval_args;
  CLI::App* ev = app.add_subcommand("eval", "Score one assignment file against another");
  ev->add_option("--pred", eval_args.pred, "Predicted assignment CSV")->required();
  ev->add_option("--truth", eval_args.truth, "Reference assignment CSV")->required();

  // --- analyze ---------------------------------------------------------
  CLI::App* ana = app.add_subcommand("analyze", "Distributional analytics and experiments");
  ana->require_subcommand(1);

  struct {
    std::string input, output;
    std::size_t samples = 1000;
    bool per_transition = false;
    std::vector<double> percentiles{1, 2, 5, 10, 25, 50, 75, 100};
    std::uint64_t seed = 0;
  } obs1_args;
  CLI::App* obs1 = ana->add_subcommand(
      "obs1", "Within- vs cross-policy action distance ratio by percentile");
  obs1->add_option("-i,--input", obs1_args.input, "Input JSONL path (labels required)")
      ->required();
  obs1->add_option("-o,--output", obs1_args.output, "Output CSV path")->required();
  obs1->add_option("--samples-per-policy", obs1_args.samples, "Actions sampled per policy");
  obs1->add_flag("--per-transition", obs1_args.per_transition,
                 "Sample transitions independently instead of whole trajectories");
  obs1->add_option("--percentiles", obs1_args.percentiles, "Percentiles to evaluate");
  obs1->add_option("--seed", obs1_args.seed, "RNG seed");

  struct {
    std::string input, output;
    std::vector<int> lengths{25, 50, 100, 200, 400};
  } wlln_args;
  CLI::App* wlln = ana->add_subcommand(
      "wlln", "Convergence of trajectory action means with trajectory length");
  wlln->add_option("-i,--input", wlln_args.input, "Input JSONL path (labels required)")
      ->required();
  wlln->add_option("-o,--output", wlln_args.output, "Output CSV path")->required();
  wlln->add_option("--lengths", wlln_args.lengths, "Truncation lengths");

  struct {
    std::string input, output;
    std::uint64_t seed = 0;
  } trend_args;
  CLI::App* trend = ana->add_subcommand(
      "trend", "Cluster-quality indices on aggregated vs raw sampled actions");
  trend->add_option("-i,--input", trend_args.input, "Input JSONL path (labels required)")
      ->required();
  trend->add_option("-o,--output", trend_args.output, "Output JSON path")->required();
  trend->add_option("--seed", trend_args.seed, "RNG seed for the raw-action sample");

  struct {
    std::string input, output;
    std::vector<int> g_values{2, 4, 6, 12, 24};
    int repeats = 100;
    std::uint64_t z = 100000;
    std::uint64_t seed = 0;
  } purity_args;
  CLI::App* purity = ana->add_subcommand(
      "seed-purity", "Success rate of uni-label seed subsets across subset sizes");
  purity->add_option("-i,--input", purity_args.input, "Input JSONL path (labels required)")
      ->required();
  purity->add_option("-o,--output", purity_args.output, "Output CSV path")->required();
  purity->add_option("--g-values", purity_args.g_values, "Subset sizes to test");
  purity->add_option("--repeats", purity_args.repeats, "Runs per subset size");
  purity->add_option("--z", purity_args.z, "Monte-Carlo draws per run");
  purity->add_option("--seed", purity_args.seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (threads < 0) throw DataError("--threads must be non-negative");
    if (threads > 0) set_max_threads(threads);

    if (synth->parsed()) return run_synth(synth_args, threads);
    if (pert->parsed()) return run_perturb(perturb_args);
    if (clus->parsed()) return run_cluster(cluster_args, threads);

    if (km->parsed()) {
      const Dataset ds = load_jsonl(km_args.input);
      ensure_dir(km_args.outdir);
      const TaatMatrix features = taat_matrix(ds);
      KmeansResult best;
      best.sse = std::numeric_limits<double>::infinity();
      for (int r = 0; r < km_args.restarts; ++r) {
        KmeansResult run = kmeans(features.rows, km_args.k, km_args.max_iter,
                                  derive_seed(km_args.seed, 0xD0, static_cast<std::uint64_t>(r)));
        if (run.sse < best.sse) best = std::move(run);
      }
      write_assignment_csv(fs::path(km_args.outdir) / "assignment.csv", features.trajectory_ids,
                           best.labels);
      json report = base_report(
          "baseline kmeans",
          {{"threads", threads},
           {"baseline",
            {{"kmeans",
              {{"input", km_args.input},
               {"outdir", km_args.outdir},
               {"clusters", km_args.k},
               {"restarts", km_args.restarts},
               {"max-iter", km_args.max_iter},
               {"seed", km_args.seed}}}}}});
      report["sse"] = best.sse;
      report["iterations"] = best.iterations;
      if (ds.has_labels()) report["metrics"] = {{"ari", ari(best.labels, ds.labels())}};
      write_text(fs::path(km_args.outdir) / "report.json", report.dump(2) + "\n");
      std::cout << "sse " << format_number(best.sse) << '\n';
      return 0;
    }

    if (db->parsed()) {
      const Dataset ds = load_jsonl(db_args.input);
      ensure_dir(db_args.outdir);
      const TaatMatrix features = taat_matrix(ds);
      json report = base_report("baseline dbscan",
                                {{"threads", threads},
                                 {"baseline",
                                  {{"dbscan",
                                    {{"input", db_args.input},
                                     {"outdir", db_args.outdir},
                                     {"eps", db_args.eps},
                                     {"min-pts", db_args.min_pts},
                                     {"grid", db_args.grid}}}}}});
      std::vector<int> labels;
      if (db_args.grid) {
        if (!ds.has_labels()) throw DataError("baseline dbscan --grid requires labels");
        const DbscanGridResult grid = dbscan_grid_search(features.rows, ds.labels());
        labels = dbscan(features.rows, grid.best_params);
        write_grid_csv(fs::path(db_args.outdir) / "grid.csv", grid.cells);
        report["grid"] = {{"evaluated", grid.cells.size()},
                          {"best_eps", grid.best_params.eps},
                          {"best_min_pts", grid.best_params.min_pts},
                          {"best_ari", grid.best_ari}};
      } else {
        labels = dbscan(features.rows, {db_args.eps, db_args.min_pts});
      }
      write_assignment_csv(fs::path(db_args.outdir) / "assignment.csv", features.trajectory_ids,
                           labels);
      report["n_noise"] = std::count(labels.begin(), labels.end(), -1);
      if (ds.has_labels()) report["metrics"] = {{"ari", ari(labels, ds.labels())}};
      write_text(fs::path(db_args.outdir) / "report.json", report.dump(2) + "\n");
      std::cout << "noise " << std::count(labels.begin(), labels.end(), -1) << '\n';
      return 0;
    }

    if (elb->parsed()) {
      const Dataset ds = load_jsonl(elbow_args.input);
      ensure_dir(elbow_args.outdir);
      const TaatMatrix features = taat_matrix(ds);
      std::vector<int> ks;
      for (int k = elbow_args.k_min; k <= elbow_args.k_max; ++k) ks.push_back(k);
      const std::vector<ElbowPoint> curve =
          elbow_curve(features.rows, ks, elbow_args.restarts, elbow_args.max_iter,
                      elbow_args.seed);
      write_elbow_csv(fs::path(elbow_args.outdir) / "elbow.csv", curve);
      json report = base_report("baseline elbow",
                                {{"threads", threads},
                                 {"baseline",
                                  {{"elbow",
                                    {{"input", elbow_args.input},
                                     {"outdir", elbow_args.outdir},
                                     {"k-min", elbow_args.k_min},
                                     {"k-max", elbow_args.k_max},
                                     {"restarts", elbow_args.restarts},
                                     {"max-iter", elbow_args.max_iter},
                                     {"seed", elbow_args.seed}}}}}});
      json points = json::array();
      for (const ElbowPoint& p : curve) points.push_back({{"k", p.k}, {"sse", p.sse}});
      report["curve"] = std::move(points);
      write_text(fs::path(elbow_args.outdir) / "report.json", report.dump(2) + "\n");
      std::cout << "elbow points: " << curve.size() << '\n';
      return 0;
    }

    if (ev->parsed()) return run_eval(eval_args.pred, eval_args.truth);

    if (obs1->parsed()) {
      const Dataset ds = load_jsonl(obs1_args.input);
      if (!ds.has_labels()) throw DataError("analyze obs1 requires labels");
      std::vector<int> labels = ds.labels();
      std::sort(labels.begin(), labels.end());
      labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
      if (labels.size() < 2) throw DataError("analyze obs1 needs at least 2 label groups");

      std::map<int, Matrix> samples;
      for (int label : labels) {
        samples[label] = sample_group_actions(ds, label, obs1_args.samples,
                                              !obs1_args.per_transition, obs1_args.seed);
      }
      std::vector<double> mean_ratio(obs1_args.percentiles.size(), 0.0);
      std::size_t pairs = 0;
      for (int a : labels) {
        for (int b : labels) {
          if (a == b) continue;
          const PercentileRatioCurve curve =
              percentile_ratio(samples[a], samples[b], obs1_args.percentiles);
          for (std::size_t i = 0; i < curve.ratios.size(); ++i) mean_ratio[i] += curve.ratios[i];
          ++pairs;
        }
      }
      PercentileRatioCurve mean_curve;
      mean_curve.percentiles = obs1_args.percentiles;
      for (double r : mean_ratio) mean_curve.ratios.push_back(r / pairs);
      write_ratio_csv(obs1_args.output, mean_curve);
      std::cout << "pairs averaged: " << pairs << '\n';
      return 0;
    }

    if (wlln->parsed()) {
      const Dataset ds = load_jsonl(wlln_args.input);
      write_wlln_csv(wlln_args.output, wlln_curve(ds, wlln_args.lengths));
      std::cout << "groups: " << wlln_curve(ds, wlln_args.lengths).size() << '\n';
      return 0;
    }

    if (trend->parsed()) {
      const Dataset ds = load_jsonl(trend_args.input);
      if (!ds.has_labels()) throw DataError("analyze trend requires labels");
      const std::vector<int> labels = ds.labels();
      const TaatMatrix features = taat_matrix(ds);
      const TrendMetrics agg = clustering_trend_metrics(features, labels);
      const Matrix raw = sample_raw_actions(ds, trend_args.seed);

      json report = base_report("analyze trend", {{"threads", threads},
                                                  {"analyze",
                                                   {{"trend",
                                                     {{"input", trend_args.input},
                                                      {"output", trend_args.output},
                                                      {"seed", trend_args.seed}}}}}});
      report["aggregated"] = {{"silhouette", agg.silhouette},
                              {"calinski_harabasz", agg.calinski_harabasz},
                              {"davies_bouldin", agg.davies_bouldin}};
      report["raw_sample"] = {{"silhouette", silhouette(raw, labels)},
                              {"calinski_harabasz", calinski_harabasz(raw, labels)},
                              {"davies_bouldin", davies_bouldin(raw, labels)}};
      write_text(trend_args.output, report.dump(2) + "\n");
      std::cout << "trend report written\n";
      return 0;
    }

    if (purity->parsed()) {
      const Dataset ds = load_jsonl(purity_args.input);
      const std::vector<PurityRow> table = seed_purity_experiment(
          ds, purity_args.g_values, purity_args.repeats, purity_args.z, purity_args.seed);
      write_purity_csv(purity_args.output, table);
      std::cout << "rows: " << table.size() << '\n';
      return 0;
    }

    return 1;  // unreachable with require_subcommand
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace bclust
