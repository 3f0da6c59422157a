#include "mrfl/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mrfl/errors.hpp"

namespace mrfl {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

std::string join(std::span<const int> v) {
  std::string s = "{";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + "}";
}

// Calls fn(subset) for every subset of `pool` (sorted) with size in [1, max_size],
// by increasing size, lexicographic within a size.
template <typename Fn>
void for_each_subset(const std::vector<int>& pool, int max_size, Fn&& fn) {
  std::vector<int> pick;
  for (int size = 1; size <= max_size && size <= static_cast<int>(pool.size()); ++size) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(size));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    while (true) {
      pick.clear();
      for (auto i : idx) pick.push_back(pool[i]);
      fn(std::as_const(pick));
      int pos = size - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] ==
                             pool.size() - static_cast<std::size_t>(size - pos)) {
        --pos;
      }
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
      for (std::size_t i = static_cast<std::size_t>(pos) + 1; i < idx.size(); ++i) idx[i] = idx[i - 1] + 1;
    }
  }
}

std::vector<int> without(const std::vector<int>& set, std::span<const int> drop) {
  std::vector<int> out;
  std::set_difference(set.begin(), set.end(), drop.begin(), drop.end(), std::back_inserter(out));
  return out;
}

void note_coverage(NeighborhoodResult& result, int u, std::span<const int> I,
                   std::span<const int> S, const NuAnswer& a) {
  if (a.coverage_ok) return;
  std::ostringstream msg;
  msg << "coverage: nu(u=" << u << ", I=" << join(I) << ", S=" << join(S) << ") backed by "
      << a.effective_m << " complete rows; read as 0";
  result.warnings.push_back(msg.str());
}

}  // namespace

const char* to_string(LearnMode mode) {
  switch (mode) {
    case LearnMode::kFull:
      return "full";
    case LearnMode::kErased:
      return "erased";
    case LearnMode::kQueried:
      return "queried";
  }
  return "full";
}

LearnMode learn_mode_from_string(const std::string& s) {
  if (s == "full") return LearnMode::kFull;
  if (s == "erased") return LearnMode::kErased;
  if (s == "queried") return LearnMode::kQueried;
  throw std::invalid_argument("unknown learn mode: " + s);
}

TheoreticalConstants theoretical_constants(double gamma, int K, double alpha, int r, int D,
                                           double delta) {
  if (!(gamma > 0.0) || K < 1 || !(alpha > 0.0) || r < 1 || D < 1 || !(delta > 0.0)) {
    throw std::invalid_argument("theoretical_constants: all parameters must be positive");
  }
  const double denom = std::pow(r, 2.0 * r) * std::pow(K, r + 1.0) *
                       binomial(D, std::min(D, r - 1)) * gamma *
                       std::exp(2.0 * gamma);
  TheoreticalConstants c;
  c.C = 4.0 * alpha * alpha * std::pow(delta, r - 1.0) / denom;
  c.C_prime = 4.0 * alpha * alpha * std::pow(delta, r + D - 1.0) / denom;
  return c;
}

LearnConfig make_learn_config(const DerivedConstants& constants, int r, double alpha, double beta,
                              double omega) {
  LearnConfig cfg;
  cfg.r = r;
  cfg.D = std::max(constants.max_degree, 1);
  cfg.K = constants.max_arity;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.gamma = constants.gamma;
  cfg.delta = constants.delta;
  cfg.omega = omega;
  if (constants.gamma > 0.0) {
    const auto c = theoretical_constants(constants.gamma, cfg.K, alpha, r, cfg.D, constants.delta);
    cfg.tau = c.C_prime / 2.0;
    cfg.L = 8.0 / (cfg.tau * cfg.tau) * std::log(static_cast<double>(cfg.K));
  } else {
    // No interactions at all: C' is unbounded, nothing can be detected anyway.
    cfg.tau = std::numeric_limits<double>::infinity();
    cfg.L = 0.0;
  }
  return cfg;
}

nlohmann::json to_json(const LearnConfig& c) {
  nlohmann::json j = {{"r", c.r},
                      {"D", c.D},
                      {"K", c.K},
                      {"alpha", c.alpha},
                      {"beta", c.beta},
                      {"gamma", c.gamma},
                      {"delta", c.delta},
                      {"theoretical_tau", c.tau},
                      {"theoretical_L", c.L},
                      {"effective_tau", c.effective_tau()},
                      {"effective_L", c.effective_L()},
                      {"omega", c.omega},
                      {"mode", to_string(c.mode)},
                      {"prune_sets", c.prune_sets},
                      {"coverage_floor", c.coverage_floor}};
  return j;
}

void NuProvider::record(int u, std::span<const int> I, std::span<const int> S, const NuAnswer& a) {
  ++evaluations_;
  if (audit_ != nullptr) write_audit(*audit_, u, I, S, {a.value, a.effective_m});
}

NuAnswer ExactNuProvider::estimate(int u, std::span<const int> I, std::span<const int> S) {
  NuAnswer a{exact_nu(*joint_, u, I, S), 0, true};
  record(u, I, S, a);
  return a;
}

NuAnswer SampleNuProvider::estimate(int u, std::span<const int> I, std::span<const int> S) {
  NuAnswer a;
  a.effective_m = emp_.samples().rows();
  a.value = a.effective_m == 0 ? 0.0 : nu_hat(emp_, u, I, S);
  record(u, I, S, a);
  return a;
}

NuAnswer ErasedNuProvider::estimate(int u, std::span<const int> I, std::span<const int> S) {
  NuAnswer a;
  try {
    const NuEstimate e = nu_hat_erased(emp_, u, I, S);
    a.value = e.value;
    a.effective_m = e.effective_m;
  } catch (const InsufficientCoverage&) {
    a.effective_m = 0;
  }
  if (a.effective_m < std::max<std::uint64_t>(floor_, 1)) {
    a.value = 0.0;
    a.coverage_ok = false;
  }
  record(u, I, S, a);
  return a;
}

NuAnswer QueriedNuProvider::estimate(int u, std::span<const int> I, std::span<const int> S) {
  NuAnswer a;
  a.value = nu_hat_queried(*oracle_, u, I, S, m_batch_);
  a.effective_m = m_batch_;
  queries_ += m_batch_;
  record(u, I, S, a);
  return a;
}

NeighborhoodResult mrf_nbhd(NuProvider& provider, int u, const LearnConfig& config) {
  const int n = provider.num_nodes();
  if (u < 0 || u >= n) throw std::out_of_range("mrf_nbhd: node out of range");
  const double tau = config.effective_tau();
  const double budget = config.effective_L();
  const std::uint64_t evals_before = provider.evaluations();

  NeighborhoodResult result;
  result.node = u;
  std::vector<int> S;

  // Step 2: greedy growth.
  while (static_cast<double>(S.size()) <= budget) {
    std::vector<int> pool;
    for (int v = 0; v < n; ++v) {
      if (v != u && !std::binary_search(S.begin(), S.end(), v)) pool.push_back(v);
    }
    double best = -1.0;
    std::vector<int> best_set;
    NuAnswer best_answer;
    for_each_subset(pool, config.r - 1, [&](const std::vector<int>& I) {
      const NuAnswer a = provider.estimate(u, I, S);
      note_coverage(result, u, I, S, a);
      if (a.value > tau && (a.value > best || (a.value == best && I < best_set))) {
        best = a.value;
        best_set = I;
        best_answer = a;
      }
    });
    if (best_set.empty()) break;
    result.trace.push_back({TraceStep::Kind::kAdd, best_set, best_answer.value, best_answer.effective_m});
    std::vector<int> merged;
    std::set_union(S.begin(), S.end(), best_set.begin(), best_set.end(), std::back_inserter(merged));
    S = std::move(merged);
  }
  result.candidate_superset = S;
  if (static_cast<double>(S.size()) > budget) {
    result.budget_exhausted = true;
    std::ostringstream msg;
    msg << "budget: node " << u << " grew a candidate set of " << S.size()
        << " nodes, past L = " << budget;
    result.warnings.push_back(msg.str());
  }

  // Step 3: prune against the Step-2 set.
  for (int i : S) {
    double kept_value = -1.0;
    std::uint64_t kept_m = 0;
    bool keep = false;
    if (!config.prune_sets || config.r <= 2) {
      const std::vector<int> I{i};
      const std::vector<int> rest = without(S, I);
      const NuAnswer a = provider.estimate(u, I, rest);
      note_coverage(result, u, I, rest, a);
      keep = !(a.value < tau);
      kept_value = a.value;
      kept_m = a.effective_m;
    } else {
      std::vector<int> others = without(S, std::vector<int>{i});
      double best = -1.0;
      // Sets I = {i} u J with J drawn from the rest of S.
      auto consider = [&](const std::vector<int>& I) {
        const std::vector<int> rest = without(S, I);
        const NuAnswer a = provider.estimate(u, I, rest);
        note_coverage(result, u, I, rest, a);
        if (a.value > best) {
          best = a.value;
          kept_m = a.effective_m;
        }
      };
      consider({i});
      for_each_subset(others, config.r - 2, [&](const std::vector<int>& J) {
        std::vector<int> I = J;
        I.insert(std::lower_bound(I.begin(), I.end(), i), i);
        consider(I);
      });
      kept_value = best;
      keep = !(best < tau);
    }
    result.trace.push_back({keep ? TraceStep::Kind::kKeep : TraceStep::Kind::kPrune,
                            {i},
                            kept_value,
                            kept_m});
    if (keep) result.neighbors.push_back(i);
  }
  result.evaluations = provider.evaluations() - evals_before;
  return result;
}

GraphResult learn_graph(NuProvider& provider, const LearnConfig& config) {
  GraphResult g;
  const int n = provider.num_nodes();
  for (int u = 0; u < n; ++u) {
    g.per_node.push_back(mrf_nbhd(provider, u, config));
    for (const auto& w : g.per_node.back().warnings) g.warnings.push_back(w);
  }
  for (int u = 0; u < n; ++u) {
    for (int v : g.per_node[static_cast<std::size_t>(u)].neighbors) {
      const auto& back = g.per_node[static_cast<std::size_t>(v)].neighbors;
      const bool mutual = std::binary_search(back.begin(), back.end(), u);
      if (mutual) {
        if (u < v) g.edges.emplace(u, v);
      } else {
        std::ostringstream msg;
        msg << "asymmetric: " << v << " is in the estimate for " << u << " but " << u
            << " is not in the estimate for " << v << "; edge dropped";
        g.warnings.push_back(msg.str());
      }
    }
  }
  return g;
}

GraphResult learn_graph(const SampleSet& samples, const LearnConfig& config) {
  SampleNuProvider provider(samples);
  GraphResult g = learn_graph(provider, config);
  if (samples.rows() < 2) {
    g.warnings.insert(g.warnings.begin(),
                      "samples: fewer than 2 rows, every nu estimate is identically 0");
  }
  return g;
}

GraphResult learn_graph_erased(const SampleSet& samples, const LearnConfig& config) {
  ErasedNuProvider provider(samples, config.coverage_floor);
  return learn_graph(provider, config);
}

QueriedGraphResult learn_graph_queried(QueryOracle& oracle, const LearnConfig& config,
                                       std::size_t m_batch) {
  const double L = config.effective_L();
  const int n = oracle.num_nodes();
  const double cap_real = std::floor(L) + config.r;
  const auto needed = static_cast<std::size_t>(std::min(cap_real, static_cast<double>(n)));
  if (oracle.capacity() < needed) {
    std::ostringstream msg;
    msg << "learn_graph_queried: oracle capacity " << oracle.capacity() << " is below L + r = "
        << needed;
    throw QueryCapacityExceeded(msg.str());
  }
  QueriedNuProvider provider(oracle, m_batch);
  const std::uint64_t consumed_before = oracle.consumed();
  QueriedGraphResult out;
  out.graph = learn_graph(provider, config);
  out.accounting.samples_consumed = oracle.consumed() - consumed_before;
  out.accounting.nu_evaluations = provider.evaluations();
  out.accounting.max_query_size = oracle.max_query_size();
  out.accounting.query_size_cap =
      cap_real > static_cast<double>(std::numeric_limits<std::size_t>::max() / 2)
          ? std::numeric_limits<std::size_t>::max() / 2
          : static_cast<std::size_t>(cap_real);
  out.accounting.total_budget = static_cast<double>(m_batch) * L * config.r * std::pow(n, config.r);
  return out;
}

nlohmann::json to_json(const NeighborhoodResult& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const TraceStep& s : r.trace) {
    const char* kind = s.kind == TraceStep::Kind::kAdd    ? "add"
                       : s.kind == TraceStep::Kind::kKeep ? "keep"
                                                          : "prune";
    trace.push_back({{"step", kind}, {"nodes", s.nodes}, {"nu_hat", s.value}, {"m", s.effective_m}});
  }
  return {{"node", r.node},
          {"neighbors", r.neighbors},
          {"candidates", r.candidate_superset},
          {"trace", std::move(trace)},
          {"evaluations", r.evaluations},
          {"warnings", r.warnings}};
}

nlohmann::json to_json(const GraphResult& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (auto [i, j] : g.edges) edges.push_back({i, j});
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& r : g.per_node) nodes.push_back(to_json(r));
  return {{"edges", std::move(edges)}, {"nodes", std::move(nodes)}, {"warnings", g.warnings}};
}

}  // namespace mrfl
