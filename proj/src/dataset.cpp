#include "bclust/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "bclust/rng.hpp"

namespace bclust {

using nlohmann::json;

namespace {

// rng stream ids for synthesize/perturb so sub-draws stay independent
enum : std::uint64_t {
  kStreamDynamics = 1,
  kStreamBiases = 2,
  kStreamWeights = 3,
  kStreamRollout = 4,
  kStreamImbalance = 5,
  kStreamNoiseSplit = 6,
  kStreamNoise = 7,
};

}  // namespace

bool Dataset::has_labels() const {
  if (trajectories.empty()) return false;
  return std::all_of(trajectories.begin(), trajectories.end(),
                     [](const Trajectory& t) { return t.label.has_value(); });
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(trajectories.size());
  for (const Trajectory& t : trajectories) {
    if (!t.label) throw DataError("trajectory '" + t.id + "' has no ground-truth label");
    out.push_back(*t.label);
  }
  return out;
}

void Dataset::validate() const {
  if (state_dim <= 0 || action_dim <= 0) {
    throw DataError("state_dim and action_dim must be positive");
  }
  std::set<std::string> seen;
  for (const Trajectory& traj : trajectories) {
    if (!seen.insert(traj.id).second) {
      throw DataError("duplicate trajectory id '" + traj.id + "'");
    }
    if (traj.transitions.empty()) {
      throw DataError("trajectory '" + traj.id + "' is empty");
    }
    if (traj.label && *traj.label < 0) {
      throw DataError("trajectory '" + traj.id + "' has a negative label");
    }
    for (std::size_t i = 0; i < traj.transitions.size(); ++i) {
      const Transition& tr = traj.transitions[i];
      if (static_cast<int>(tr.state.size()) != state_dim) {
        throw DataError("trajectory '" + traj.id + "': state_dim mismatch");
      }
      if (static_cast<int>(tr.action.size()) != action_dim) {
        throw DataError("trajectory '" + traj.id + "': action_dim mismatch");
      }
      if (!all_finite(tr.state) || !all_finite(tr.action) || !std::isfinite(tr.reward)) {
        throw DataError("trajectory '" + traj.id + "': non-finite value");
      }
      if (tr.terminal && i + 1 != traj.transitions.size()) {
        throw DataError("trajectory '" + traj.id + "': terminal before final transition");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// JSONL persistence (trajset-v1)

namespace {

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw DataError("line " + std::to_string(line_no) + ": " + what);
}

std::vector<double> parse_vector(const json& j, std::size_t line_no, const char* field,
                                 int expect_dim, const char* mismatch) {
  if (!j.is_array()) line_error(line_no, std::string(field) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) line_error(line_no, std::string(field) + " holds a non-numeric value");
    out.push_back(x.get<double>());
  }
  if (static_cast<int>(out.size()) != expect_dim) line_error(line_no, mismatch);
  if (!all_finite(out)) line_error(line_no, std::string(field) + " holds a non-finite value");
  return out;
}

}  // namespace

Dataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("'" + path.string() + "' is empty");
  line_no = 1;

  json meta;
  try {
    meta = json::parse(line);
  } catch (const json::exception& e) {
    line_error(line_no, std::string("malformed JSON (") + e.what() + ")");
  }
  if (!meta.is_object() || meta.value("schema", "") != "trajset-v1") {
    line_error(line_no, "metadata record must declare schema \"trajset-v1\"");
  }
  Dataset ds;
  ds.state_dim = meta.value("state_dim", 0);
  ds.action_dim = meta.value("action_dim", 0);
  if (ds.state_dim <= 0 || ds.action_dim <= 0) {
    line_error(line_no, "state_dim and action_dim must be positive integers");
  }

  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      line_error(line_no, std::string("malformed JSON (") + e.what() + ")");
    }
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string()) {
      line_error(line_no, "trajectory record needs a string \"id\"");
    }
    Trajectory traj;
    traj.id = rec["id"].get<std::string>();
    if (!seen_ids.insert(traj.id).second) {
      line_error(line_no, "duplicate trajectory id '" + traj.id + "'");
    }
    for (const char* field : {"states", "actions", "rewards", "terminals"}) {
      if (!rec.contains(field) || !rec[field].is_array()) {
        line_error(line_no, std::string("missing array field \"") + field + "\"");
      }
    }
    const auto& states = rec["states"];
    const auto& actions = rec["actions"];
    const auto& rewards = rec["rewards"];
    const auto& terminals = rec["terminals"];
    const std::size_t len = states.size();
    if (len == 0) line_error(line_no, "trajectory has no transitions");
    if (actions.size() != len || rewards.size() != len || terminals.size() != len) {
      line_error(line_no, "states/actions/rewards/terminals lengths differ");
    }
    traj.transitions.reserve(len);
    for (std::size_t t = 0; t < len; ++t) {
      Transition tr;
      tr.state = parse_vector(states[t], line_no, "states", ds.state_dim, "state_dim mismatch");
      tr.action =
          parse_vector(actions[t], line_no, "actions", ds.action_dim, "action_dim mismatch");
      if (!rewards[t].is_number()) line_error(line_no, "rewards holds a non-numeric value");
      tr.reward = rewards[t].get<double>();
      if (!std::isfinite(tr.reward)) line_error(line_no, "rewards holds a non-finite value");
      if (!terminals[t].is_boolean()) line_error(line_no, "terminals holds a non-boolean value");
      tr.terminal = terminals[t].get<bool>();
      if (tr.terminal && t + 1 != len) line_error(line_no, "terminal before final transition");
      traj.transitions.push_back(std::move(tr));
    }
    if (rec.contains("label") && !rec["label"].is_null()) {
      if (!rec["label"].is_number_integer() || rec["label"].get<long long>() < 0) {
        line_error(line_no, "label must be null or a non-negative integer");
      }
      traj.label = rec["label"].get<int>();
    }
    ds.trajectories.push_back(std::move(traj));
  }
  return ds;
}

void save_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  dataset.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  json meta = {{"schema", "trajset-v1"},
               {"state_dim", dataset.state_dim},
               {"action_dim", dataset.action_dim}};
  out << meta.dump() << '\n';
  for (const Trajectory& traj : dataset.trajectories) {
    json rec;
    rec["id"] = traj.id;
    json states = json::array(), actions = json::array();
    json rewards = json::array(), terminals = json::array();
    for (const Transition& tr : traj.transitions) {
      states.push_back(tr.state);
      actions.push_back(tr.action);
      rewards.push_back(tr.reward);
      terminals.push_back(tr.terminal);
    }
    rec["states"] = std::move(states);
    rec["actions"] = std::move(actions);
    rec["rewards"] = std::move(rewards);
    rec["terminals"] = std::move(terminals);
    rec["label"] = traj.label ? json(*traj.label) : json(nullptr);
    out << rec.dump() << '\n';
  }
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

// ---------------------------------------------------------------------------
// Synthetic generation

std::vector<double> BehaviorPolicy::expected_action(std::span<const double> state) const {
  std::vector<double> feat(state.begin(), state.end());
  if (feature_map == FeatureMap::kTanh) {
    for (double& x : feat) x = std::tanh(x);
  }
  std::vector<double> out(bias);
  for (std::size_t i = 0; i < weights.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < weights.cols(); ++j) acc += weights(i, j) * feat[j];
    out[i] += acc;
  }
  return out;
}

namespace {

// Generator internals. Policies share one stable state recurrence
// s' = -m s + B a + noise whose sign alternation makes consecutive feature
// vectors anti-correlated: per-trajectory action means cancel the
// state-driven part almost completely, while single actions stay widely
// spread. The high modulus keeps same-parity states within a trajectory
// strongly correlated, so actions a few steps apart are far closer than any
// cross-trajectory pair. Small action coupling imprints each policy on the
// state distribution without destabilizing the loop.
constexpr double kDynModulus = 0.98;     // state recurrence is -modulus * I
constexpr double kDynNoiseStd = 0.13;    // process noise std
constexpr double kActionCoupling = 0.01; // scale of the action-to-state matrix
// Bias radius per unit of separation. Sized so that per-policy aggregated
// action centroids stay several within-policy deviations apart even after
// extent-scaled measurement noise (up to 20% of each dimension's range)
// inflates the within spread, while per-step action clouds still overlap
// almost completely across policies.
constexpr double kBiasRadiusScale = 1.26;
constexpr int kBurnInSteps = 20;         // discarded steps before recording

Matrix random_matrix(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

void matvec(const Matrix& m, std::span<const double> v, std::span<double> out) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    const auto row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
}

// Up to `rows` mutually orthonormal unit vectors in R^cols via Gram-Schmidt;
// rows beyond the span dimension are only unit-normalized.
Matrix orthonormal_rows(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> v(cols);
    double len = 0.0;
    do {
      for (double& x : v) x = rng.normal();
      for (std::size_t r = 0; r < std::min(i, cols); ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < cols; ++j) dot += v[j] * m(r, j);
        for (std::size_t j = 0; j < cols; ++j) v[j] -= dot * m(r, j);
      }
      len = 0.0;
      for (double x : v) len += x * x;
      len = std::sqrt(len);
    } while (len < 1e-8);  // re-draw a dependent vector
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = v[j] / len;
  }
  return m;
}

// Weight rows are an orthonormal frame scaled uniformly: equal singular
// values keep within-policy action spread full-rank in action space instead
// of collapsing onto a dominant direction.
Matrix make_weights(const SynthConfig& cfg, Rng& rng) {
  Matrix w = orthonormal_rows(cfg.action_dim, cfg.state_dim, rng);
  for (double& x : w.data()) x *= cfg.weight_scale;
  return w;
}

std::vector<std::vector<double>> make_biases(const SynthConfig& cfg, Rng& rng) {
  const int d = cfg.action_dim;
  const Matrix basis = orthonormal_rows(d, d, rng);
  const double radius = kBiasRadiusScale * cfg.separation;
  std::vector<std::vector<double>> biases;
  biases.reserve(cfg.n_policies);
  for (int p = 0; p < cfg.n_policies; ++p) {
    std::vector<double> b(d, 0.0);
    if (p < 2 * d) {
      // +/- rotated axes: pairwise distances are sqrt(2) or 2 times the radius
      const double sign = p < d ? 1.0 : -1.0;
      const auto dir = basis.row(p % d);
      for (int j = 0; j < d; ++j) b[j] = sign * radius * dir[j];
    } else {
      // overflow policies go on progressively larger shells
      const double shell = radius * (1.0 + 0.3 * (p - 2 * d + 1));
      double len = 0.0;
      for (double& x : b) {
        x = rng.normal();
        len += x * x;
      }
      len = std::sqrt(len);
      for (double& x : b) x = len > 0 ? shell * x / len : shell;
    }
    biases.push_back(std::move(b));
  }
  return biases;
}

}  // namespace

std::vector<BehaviorPolicy> synthesize_policies(const SynthConfig& cfg) {
  if (cfg.n_policies <= 0 || cfg.state_dim <= 0 || cfg.action_dim <= 0) {
    throw DataError("synthesize: counts must be positive");
  }
  if (cfg.separation < 0 || cfg.action_noise_std < 0 || cfg.weight_scale < 0) {
    throw DataError("synthesize: scales must be non-negative");
  }
  Rng bias_rng(derive_seed(cfg.rng_seed, kStreamBiases));
  const auto biases = make_biases(cfg, bias_rng);

  Rng weight_rng(derive_seed(cfg.rng_seed, kStreamWeights));
  const Matrix shared = make_weights(cfg, weight_rng);

  std::vector<BehaviorPolicy> policies;
  policies.reserve(cfg.n_policies);
  for (int p = 0; p < cfg.n_policies; ++p) {
    BehaviorPolicy pol;
    pol.policy_id = p;
    pol.weights = cfg.shared_weights ? shared : make_weights(cfg, weight_rng);
    pol.bias = biases[p];
    pol.action_noise_std = cfg.action_noise_std;
    pol.feature_map = cfg.feature_map;
    policies.push_back(std::move(pol));
  }
  return policies;
}

Dataset synthesize(const SynthConfig& cfg) {
  if (cfg.trajectories_per_policy <= 0 || cfg.traj_len <= 0) {
    throw DataError("synthesize: counts must be positive");
  }
  const auto policies = synthesize_policies(cfg);

  Rng dyn_rng(derive_seed(cfg.rng_seed, kStreamDynamics));
  Matrix dyn_a(cfg.state_dim, cfg.state_dim);
  for (int i = 0; i < cfg.state_dim; ++i) dyn_a(i, i) = -kDynModulus;
  Matrix dyn_b = random_matrix(cfg.state_dim, cfg.action_dim,
                               kActionCoupling / std::sqrt(static_cast<double>(cfg.action_dim)),
                               dyn_rng);

  Dataset ds;
  ds.state_dim = cfg.state_dim;
  ds.action_dim = cfg.action_dim;
  ds.trajectories.reserve(static_cast<std::size_t>(cfg.n_policies) * cfg.trajectories_per_policy);

  std::vector<double> state(cfg.state_dim), next(cfg.state_dim), feat(cfg.state_dim);
  std::vector<double> coupled(cfg.state_dim);
  for (int p = 0; p < cfg.n_policies; ++p) {
    const BehaviorPolicy& pol = policies[p];
    for (int t = 0; t < cfg.trajectories_per_policy; ++t) {
      const std::uint64_t traj_index =
          static_cast<std::uint64_t>(p) * cfg.trajectories_per_policy + t;
      Rng rng(derive_seed(cfg.rng_seed, kStreamRollout, traj_index));

      Trajectory traj;
      traj.id = "p" + std::to_string(p) + "_t" + std::to_string(t);
      traj.label = p;
      traj.transitions.reserve(cfg.traj_len);

      for (double& x : state) x = rng.normal();
      // Burn-in reaches the closed loop's stationary regime before recording,
      // so action spread does not vary with position along the trajectory.
      for (int step = -kBurnInSteps; step < cfg.traj_len; ++step) {
        for (int j = 0; j < cfg.state_dim; ++j) {
          feat[j] = cfg.feature_map == FeatureMap::kTanh ? std::tanh(state[j]) : state[j];
        }
        Transition tr;
        tr.state = state;
        tr.action.resize(cfg.action_dim);
        for (int i = 0; i < cfg.action_dim; ++i) {
          double acc = pol.bias[i];
          for (int j = 0; j < cfg.state_dim; ++j) acc += pol.weights(i, j) * feat[j];
          tr.action[i] = acc + cfg.action_noise_std * rng.normal();
        }
        double sq = 0.0;
        for (double a : tr.action) sq += a * a;
        tr.reward = -sq;
        tr.terminal = (step + 1 == cfg.traj_len);

        matvec(dyn_a, state, next);
        matvec(dyn_b, tr.action, coupled);
        for (int j = 0; j < cfg.state_dim; ++j) {
          next[j] += coupled[j] + kDynNoiseStd * rng.normal();
        }
        if (step >= 0) traj.transitions.push_back(std::move(tr));
        state = next;
      }
      ds.trajectories.push_back(std::move(traj));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Perturbations

namespace {

Dataset perturb_imbalance(const Dataset& ds, const PerturbSpec& spec, std::uint64_t seed) {
  if (!ds.has_labels()) throw DataError("imbalance perturbation requires ground-truth labels");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < ds.size(); ++i) groups[*ds.trajectories[i].label].push_back(i);
  if (groups.size() != spec.imbalance_ratios.size()) {
    throw DataError("ratios/labels mismatch: " + std::to_string(spec.imbalance_ratios.size()) +
                    " ratios for " + std::to_string(groups.size()) + " label groups");
  }
  for (int r : spec.imbalance_ratios) {
    if (r <= 0) throw DataError("imbalance ratios must be positive");
  }
  std::size_t n_max = 0;
  for (const auto& [label, members] : groups) n_max = std::max(n_max, members.size());
  const int r_max = *std::max_element(spec.imbalance_ratios.begin(), spec.imbalance_ratios.end());

  std::vector<bool> keep(ds.size(), false);
  std::size_t gi = 0;
  for (auto& [label, members] : groups) {
    const double share = static_cast<double>(spec.imbalance_ratios[gi]) / r_max;
    const auto target = std::min<std::size_t>(
        members.size(), static_cast<std::size_t>(std::llround(share * n_max)));
    Rng rng(derive_seed(seed, kStreamImbalance, gi));
    rng.shuffle(members);
    for (std::size_t k = 0; k < target; ++k) keep[members[k]] = true;
    ++gi;
  }

  Dataset out;
  out.state_dim = ds.state_dim;
  out.action_dim = ds.action_dim;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (keep[i]) out.trajectories.push_back(ds.trajectories[i]);
  }
  return out;
}

Dataset perturb_noise(const Dataset& ds, const PerturbSpec& spec, std::uint64_t seed) {
  if (spec.noise_scale_lo < 0 || spec.noise_scale_hi > 1 ||
      spec.noise_scale_lo > spec.noise_scale_hi) {
    throw DataError("noise_scale_range must satisfy 0 <= lo <= hi <= 1");
  }
  if (spec.noise_fraction_uniform < 0 || spec.noise_fraction_uniform > 1) {
    throw DataError("noise_fraction_uniform must lie in [0,1]");
  }
  const SpaceBounds bounds = space_bounds(ds);
  std::vector<double> state_extent(ds.state_dim), action_extent(ds.action_dim);
  for (int j = 0; j < ds.state_dim; ++j) state_extent[j] = bounds.state_hi[j] - bounds.state_lo[j];
  for (int j = 0; j < ds.action_dim; ++j)
    action_extent[j] = bounds.action_hi[j] - bounds.action_lo[j];

  // pick which trajectories receive uniform (vs Gaussian) noise
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(derive_seed(seed, kStreamNoiseSplit));
  split_rng.shuffle(order);
  const auto n_uniform =
      static_cast<std::size_t>(std::llround(spec.noise_fraction_uniform * ds.size()));
  std::vector<bool> is_uniform(ds.size(), false);
  for (std::size_t k = 0; k < n_uniform && k < order.size(); ++k) is_uniform[order[k]] = true;

  Dataset out = ds;
  for (std::size_t i = 0; i < out.size(); ++i) {
    Rng rng(derive_seed(seed, kStreamNoise, i));
    const double scale = rng.uniform(spec.noise_scale_lo, spec.noise_scale_hi);
    for (Transition& tr : out.trajectories[i].transitions) {
      // The scale fraction measures the uniform interval's full width (so
      // draws span +/- half of it) and the Gaussian std directly.
      for (int j = 0; j < ds.state_dim; ++j) {
        const double amp = scale * state_extent[j];
        tr.state[j] += is_uniform[i] ? rng.uniform(-0.5 * amp, 0.5 * amp) : rng.normal(0.0, amp);
      }
      for (int j = 0; j < ds.action_dim; ++j) {
        const double amp = scale * action_extent[j];
        tr.action[j] += is_uniform[i] ? rng.uniform(-0.5 * amp, 0.5 * amp) : rng.normal(0.0, amp);
      }
    }
  }
  return out;
}

}  // namespace

Dataset perturb(const Dataset& dataset, const PerturbSpec& spec, std::uint64_t rng_seed) {
  if (spec.mode == PerturbSpec::Mode::kImbalance) {
    return perturb_imbalance(dataset, spec, rng_seed);
  }
  return perturb_noise(dataset, spec, rng_seed);
}

SpaceBounds space_bounds(const Dataset& dataset) {
  if (dataset.trajectories.empty()) throw DataError("space_bounds: empty dataset");
  SpaceBounds b;
  b.state_lo.assign(dataset.state_dim, std::numeric_limits<double>::infinity());
  b.state_hi.assign(dataset.state_dim, -std::numeric_limits<double>::infinity());
  b.action_lo.assign(dataset.action_dim, std::numeric_limits<double>::infinity());
  b.action_hi.assign(dataset.action_dim, -std::numeric_limits<double>::infinity());
  for (const Trajectory& traj : dataset.trajectories) {
    for (const Transition& tr : traj.transitions) {
      for (int j = 0; j < dataset.state_dim; ++j) {
        b.state_lo[j] = std::min(b.state_lo[j], tr.state[j]);
        b.state_hi[j] = std::max(b.state_hi[j], tr.state[j]);
      }
      for (int j = 0; j < dataset.action_dim; ++j) {
        b.action_lo[j] = std::min(b.action_lo[j], tr.action[j]);
        b.action_hi[j] = std::max(b.action_hi[j], tr.action[j]);
      }
    }
  }
  return b;
}

}  // namespace bclust
