#include "mrfl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mrfl/errors.hpp"
#include "mrfl/estimation.hpp"
#include "mrfl/inference.hpp"
#include "mrfl/rng.hpp"

namespace mrfl {

namespace {

constexpr int kMaxRedraws = 1000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void all_subsets(int n, int size, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == size) {
    out.push_back(cur);
    return;
  }
  for (int v = start; v < n; ++v) {
    cur.push_back(v);
    all_subsets(n, size, v + 1, cur, out);
    cur.pop_back();
  }
}

bool is_subset(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

CliqueTensor draw_tensor(const std::vector<int>& vertices, const std::vector<int>& shape,
                         double alpha, double beta, bool need_alpha, Rng& rng) {
  CliqueTensor t = CliqueTensor::zeros(vertices, shape);
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = beta * (2.0 * uniform01(rng) - 1.0);
    CliqueTensor c = centered_part(t);
    const double mx = c.max_abs();
    if (mx <= beta && (!need_alpha || mx >= alpha) && mx > kPruneTol) return c;
  }
  std::ostringstream msg;
  msg << "generate_model: no admissible tensor on {";
  for (std::size_t i = 0; i < vertices.size(); ++i) msg << (i ? "," : "") << vertices[i];
  msg << "} after " << kMaxRedraws << " draws";
  throw InfeasibleSpec(msg.str());
}

}  // namespace

nlohmann::json to_json(const GeneratorSpec& s) {
  return {{"n", s.n},         {"r", s.r},
          {"D", s.D},         {"K", s.K},
          {"alpha", s.alpha}, {"beta", s.beta},
          {"hyperedge_density", s.hyperedge_density},
          {"seed", s.seed},   {"unary", s.unary},
          {"random_arities", s.random_arities}};
}

GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  GeneratorSpec s;
  s.n = j.value("n", s.n);
  s.r = j.value("r", s.r);
  s.D = j.value("D", s.D);
  s.K = j.value("K", s.K);
  s.alpha = j.value("alpha", s.alpha);
  s.beta = j.value("beta", s.beta);
  s.hyperedge_density = j.value("hyperedge_density", s.hyperedge_density);
  s.seed = j.value("seed", s.seed);
  s.unary = j.value("unary", s.unary);
  s.random_arities = j.value("random_arities", s.random_arities);
  return s;
}

MarkovRandomField generate_model(const GeneratorSpec& spec) {
  if (spec.n < 1 || spec.r < 1 || spec.D < 0 || spec.K < 2) {
    throw std::invalid_argument("generate_model: need n >= 1, r >= 1, D >= 0, K >= 2");
  }
  if (!(spec.alpha > 0.0) || !(spec.beta > 0.0)) {
    throw std::invalid_argument("generate_model: alpha and beta must be positive");
  }
  if (!(spec.hyperedge_density > 0.0) || spec.hyperedge_density > 1.0) {
    throw std::invalid_argument("generate_model: hyperedge_density must lie in (0, 1]");
  }
  if (spec.alpha > spec.beta) {
    throw InfeasibleSpec("generate_model: alpha > beta, no entry can satisfy both bounds");
  }
  Rng rng = make_rng(spec.seed, Stream::kGenerate);
  const int n = spec.n;

  std::vector<int> arities(static_cast<std::size_t>(n), spec.K);
  if (spec.random_arities) {
    for (auto& k : arities) k = 2 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(spec.K - 1)));
  }

  std::vector<std::vector<int>> candidates;
  for (int size = 2; size <= std::min(spec.r, n); ++size) {
    std::vector<int> cur;
    all_subsets(n, size, 0, cur, candidates);
  }
  for (std::size_t i = candidates.size(); i > 1; --i) {
    std::swap(candidates[i - 1], candidates[uniform_index(rng, i)]);
  }

  std::vector<std::vector<char>> adj(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> chosen;
  for (const auto& h : candidates) {
    if (uniform01(rng) >= spec.hyperedge_density) continue;
    bool redundant = false;
    for (const auto& c : chosen) redundant = redundant || is_subset(h, c);
    if (redundant) continue;
    std::vector<int> gain(h.size(), 0);
    for (std::size_t a = 0; a < h.size(); ++a) {
      for (std::size_t b = 0; b < h.size(); ++b) {
        if (a != b && !adj[static_cast<std::size_t>(h[a])][static_cast<std::size_t>(h[b])]) ++gain[a];
      }
    }
    bool fits = true;
    for (std::size_t a = 0; a < h.size(); ++a) fits = fits && degree[static_cast<std::size_t>(h[a])] + gain[a] <= spec.D;
    if (!fits) continue;
    for (std::size_t a = 0; a < h.size(); ++a) {
      degree[static_cast<std::size_t>(h[a])] += gain[a];
      for (std::size_t b = 0; b < h.size(); ++b) {
        if (a != b) adj[static_cast<std::size_t>(h[a])][static_cast<std::size_t>(h[b])] = 1;
      }
    }
    chosen.push_back(h);
  }

  // A chosen hyperedge is maximal unless a later, larger one swallowed it.
  // Unary tensors are maximal exactly at isolated nodes.
  std::vector<CliqueTensor> tensors;
  for (const auto& h : chosen) {
    bool maximal = true;
    for (const auto& c : chosen) maximal = maximal && (c.size() <= h.size() || !is_subset(h, c));
    std::vector<int> shape;
    for (int v : h) shape.push_back(arities[static_cast<std::size_t>(v)]);
    tensors.push_back(draw_tensor(h, shape, spec.alpha, spec.beta, maximal, rng));
  }
  if (spec.unary) {
    for (int v = 0; v < n; ++v) {
      const bool isolated = degree[static_cast<std::size_t>(v)] == 0;
      tensors.push_back(draw_tensor({v}, {arities[static_cast<std::size_t>(v)]}, spec.alpha, spec.beta,
                                    isolated, rng));
    }
  }

  MarkovRandomField model(arities, spec.r, std::move(tensors));
  const NonDegeneracyReport report = validate_nondegeneracy(model, spec.alpha, spec.beta);
  if (!report.passed()) {
    throw InvariantViolation("generate_model: generated model fails the non-degeneracy check");
  }
  if (clique_graph(model).max_degree > spec.D) {
    throw InvariantViolation("generate_model: degree cap exceeded");
  }
  return model;
}

EdgeScore score_edges(const EdgeSet& truth, const EdgeSet& learned) {
  EdgeScore s;
  std::size_t hits = 0;
  for (const auto& e : learned) hits += truth.count(e);
  if (learned.empty()) {
    s.precision_undefined = true;
    s.precision = 1.0;
  } else {
    s.precision = static_cast<double>(hits) / static_cast<double>(learned.size());
  }
  if (truth.empty()) {
    s.recall_undefined = true;
    s.recall = 1.0;
  } else {
    s.recall = static_cast<double>(hits) / static_cast<double>(truth.size());
  }
  s.exact_match = truth == learned;
  return s;
}

EdgeSet true_edges(const MarkovRandomField& model) {
  const CliqueGraph g = clique_graph(model);
  return EdgeSet(g.edges.begin(), g.edges.end());
}

SampleSet draw_samples(const MarkovRandomField& model, std::size_t m, std::uint64_t seed,
                       std::size_t burn_in, std::size_t thinning) {
  if (model.configuration_count() <= kMaxJointConfigs) {
    return sample_exact(exact_joint(model), m, seed);
  }
  return gibbs_sample(model, m, burn_in, thinning, seed);
}

double ExperimentReport::exact_rate() const {
  if (trials.empty()) return 0.0;
  double hits = 0.0;
  for (const auto& t : trials) hits += t.score.exact_match ? 1.0 : 0.0;
  return hits / static_cast<double>(trials.size());
}

double ExperimentReport::mean_precision() const {
  double s = 0.0;
  for (const auto& t : trials) s += t.score.precision;
  return trials.empty() ? 0.0 : s / static_cast<double>(trials.size());
}

double ExperimentReport::mean_recall() const {
  double s = 0.0;
  for (const auto& t : trials) s += t.score.recall;
  return trials.empty() ? 0.0 : s / static_cast<double>(trials.size());
}

double ExperimentReport::mean_learn_seconds() const {
  double s = 0.0;
  for (const auto& t : trials) s += t.learn_seconds;
  return trials.empty() ? 0.0 : s / static_cast<double>(trials.size());
}

namespace {

TrialResult run_trial(const GeneratorSpec& base_spec, const LearnConfig& base,
                      const ExperimentOptions& opt, std::uint64_t trial_seed) {
  TrialResult out;
  out.seed = trial_seed;
  GeneratorSpec spec = base_spec;
  spec.seed = derive_seed(trial_seed, Stream::kGenerate);
  const MarkovRandomField model = generate_model(spec);
  const DerivedConstants dc = compute_gamma_delta(model);

  LearnConfig cfg = make_learn_config(dc, spec.r, spec.alpha, spec.beta, base.omega);
  cfg.mode = opt.mode;
  cfg.override_tau = base.override_tau;
  cfg.override_L = base.override_L;
  cfg.prune_sets = base.prune_sets;
  cfg.coverage_floor = base.coverage_floor;
  out.tau = cfg.effective_tau();
  out.L = cfg.effective_L();

  if (std::isfinite(cfg.tau) && cfg.tau > 0.0) {
    out.theoretical_m_log10 =
        opt.mode == LearnMode::kErased
            ? required_samples_erased_log10(cfg.L, cfg.tau, cfg.omega, spec.n, cfg.K, spec.r,
                                            cfg.delta, opt.reveal_prob)
            : required_samples_full_log10(cfg.L, cfg.tau / 2.0, cfg.omega, spec.n, cfg.K, spec.r,
                                          cfg.delta);
  } else {
    out.theoretical_m_log10 = 0.0;
  }

  const EdgeSet truth = true_edges(model);
  GraphResult learned;
  auto t0 = Clock::now();
  if (opt.mode == LearnMode::kQueried) {
    const JointTable joint = exact_joint(model);
    std::vector<double> cdf(joint.size());
    std::partial_sum(joint.probs().begin(), joint.probs().end(), cdf.begin());
    auto rng = std::make_shared<Rng>(make_rng(trial_seed, Stream::kQuery));
    SampleSource source = [cdf = std::move(cdf), rng, &joint](std::span<int> row) {
      const double u = uniform01(*rng) * cdf.back();
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      if (it == cdf.end()) --it;
      joint.decode(static_cast<std::size_t>(it - cdf.begin()), row);
    };
    const double cap_real = std::floor(out.L) + spec.r;
    const auto capacity = static_cast<std::size_t>(std::min(cap_real, static_cast<double>(spec.n)));
    QueryOracle oracle(spec.n, model.arities(), capacity, source);
    out.sample_seconds = 0.0;
    t0 = Clock::now();
    const std::size_t batch = opt.m_batch ? opt.m_batch : opt.m;
    QueriedGraphResult q = learn_graph_queried(oracle, cfg, batch);
    out.learn_seconds = seconds_since(t0);
    out.effective_m = q.accounting.samples_consumed;
    learned = std::move(q.graph);
  } else {
    SampleSet samples = draw_samples(model, opt.m, derive_seed(trial_seed, Stream::kSample),
                                     opt.gibbs_burn_in, opt.gibbs_thinning);
    if (opt.mode == LearnMode::kErased) {
      samples = erase(samples, opt.reveal_prob, derive_seed(trial_seed, Stream::kErase));
    }
    out.sample_seconds = seconds_since(t0);
    out.effective_m = samples.rows();
    t0 = Clock::now();
    learned = opt.mode == LearnMode::kErased ? learn_graph_erased(samples, cfg) : learn_graph(samples, cfg);
    out.learn_seconds = seconds_since(t0);
  }
  out.score = score_edges(truth, learned.edges);
  out.true_edge_count = truth.size();
  out.learned_edge_count = learned.edges.size();
  out.warnings = learned.warnings.size();
  return out;
}

}  // namespace

ExperimentReport run_experiment(const GeneratorSpec& spec, const LearnConfig& config,
                                std::size_t trials, const ExperimentOptions& options,
                                std::uint64_t seed) {
  if (trials == 0) throw std::invalid_argument("run_experiment: trials must be >= 1");
  if (options.m == 0 && options.mode != LearnMode::kQueried) {
    throw std::invalid_argument("run_experiment: m must be >= 1");
  }
  if (options.mode == LearnMode::kErased && !(options.reveal_prob > 0.0 && options.reveal_prob <= 1.0)) {
    throw std::invalid_argument("run_experiment: reveal_prob must lie in (0, 1]");
  }
  ExperimentReport report;
  report.spec = spec;
  report.config = config;
  report.config.mode = options.mode;
  report.options = options;
  report.seed = seed;
  report.trials.resize(trials);

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, trials));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t t = next++; t < trials; t = next++) {
      try {
        report.trials[t] = run_trial(spec, config, options, derive_seed(seed, Stream::kTrial, t));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return report;
}

nlohmann::json to_json(const EdgeScore& s) {
  return {{"precision", s.precision},
          {"recall", s.recall},
          {"exact_match", s.exact_match},
          {"precision_undefined", s.precision_undefined},
          {"recall_undefined", s.recall_undefined}};
}

nlohmann::json to_json(const ExperimentReport& r, bool include_timing) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials) {
    nlohmann::json j = {{"seed", t.seed},
                        {"score", to_json(t.score)},
                        {"true_edges", t.true_edge_count},
                        {"learned_edges", t.learned_edge_count},
                        {"warnings", t.warnings},
                        {"effective_m", t.effective_m},
                        {"tau", t.tau},
                        {"L", t.L},
                        {"theoretical_m_log10", t.theoretical_m_log10}};
    if (include_timing) {
      j["sample_seconds"] = t.sample_seconds;
      j["learn_seconds"] = t.learn_seconds;
    }
    trials.push_back(std::move(j));
  }
  nlohmann::json j = {{"generator", to_json(r.spec)},
                      {"learn_config", to_json(r.config)},
                      {"mode", to_string(r.options.mode)},
                      {"m", r.options.m},
                      {"reveal_prob", r.options.reveal_prob},
                      {"m_batch", r.options.m_batch},
                      {"seed", r.seed},
                      {"trials", trials},
                      {"summary",
                       {{"exact_rate", r.exact_rate()},
                        {"mean_precision", r.mean_precision()},
                        {"mean_recall", r.mean_recall()}}}};
  if (include_timing) j["summary"]["mean_learn_seconds"] = r.mean_learn_seconds();
  return j;
}

}  // namespace mrfl
