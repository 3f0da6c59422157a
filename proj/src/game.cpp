#include "mrfl/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mrfl/learning.hpp"

namespace mrfl {

namespace {

constexpr double kSlack = 1e-12;

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Every subset of `pool` with exactly s elements, lexicographic. s = 0 gives
// the single empty set.
std::vector<std::vector<int>> subsets_of_size(const std::vector<int>& pool, int s) {
  std::vector<std::vector<int>> out;
  if (s < 0 || s > static_cast<int>(pool.size())) return out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(s));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<int> pick;
    for (auto i : idx) pick.push_back(pool[i]);
    out.push_back(std::move(pick));
    int pos = s - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == pool.size() - static_cast<std::size_t>(s - pos)) {
      --pos;
    }
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (auto i = static_cast<std::size_t>(pos) + 1; i < idx.size(); ++i) idx[i] = idx[i - 1] + 1;
  }
  return out;
}

std::vector<int> states_of(std::span<const int> nodes, std::span<const int> x) {
  std::vector<int> out;
  out.reserve(nodes.size());
  for (int v : nodes) out.push_back(x[static_cast<std::size_t>(v)]);
  return out;
}

std::vector<int> uniform_subset(const std::vector<int>& pool, int s, Rng& rng) {
  std::vector<int> work = pool;
  for (int i = 0; i < s; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   uniform_index(rng, work.size() - static_cast<std::size_t>(i));
    std::swap(work[static_cast<std::size_t>(i)], work[j]);
  }
  work.resize(static_cast<std::size_t>(s));
  std::sort(work.begin(), work.end());
  return work;
}

std::size_t draw_index(const std::vector<double>& cdf, Rng& rng) {
  const double u = uniform01(rng) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::size_t>(it - cdf.begin());
}

std::vector<double> node_marginal(const JointTable& joint, int u) {
  const std::vector<int> nodes{u};
  return joint.marginal(nodes).probs;
}

}  // namespace

int revealed_size(const MarkovRandomField& model, const CliqueGraph& graph, int u) {
  return std::min(model.order_bound() - 1, graph.degrees[static_cast<std::size_t>(u)]);
}

double bob_phi(const MarkovRandomField& model, const CliqueGraph& graph, int u, int R,
               std::span<const int> I, std::span<const int> states) {
  if (I.size() != states.size()) throw std::invalid_argument("bob_phi: I and states differ in length");
  const auto& nbrs = graph.neighbors[static_cast<std::size_t>(u)];
  for (int v : I) {
    if (!std::binary_search(nbrs.begin(), nbrs.end(), v)) {
      throw std::invalid_argument("bob_phi: revealed node is not a neighbor of u");
    }
  }
  const int d = graph.degrees[static_cast<std::size_t>(u)];
  const int s = static_cast<int>(I.size());
  double phi = 0.0;
  for (std::size_t idx : model.incident(u)) {
    const CliqueTensor& t = model.tensors()[idx];
    std::size_t flat = 0;
    bool inside = true;
    for (std::size_t a = 0; a < t.order() && inside; ++a) {
      const int v = t.vertices()[a];
      int state = R;
      if (v != u) {
        auto it = std::find(I.begin(), I.end(), v);
        if (it == I.end()) {
          inside = false;
          break;
        }
        state = states[static_cast<std::size_t>(it - I.begin())];
      }
      flat = flat * static_cast<std::size_t>(t.shape()[a]) + static_cast<std::size_t>(state);
    }
    if (!inside) continue;
    const int ell = static_cast<int>(t.order()) - 1;
    const double weight = binomial(d, s) / binomial(d - ell, s - ell);
    phi += weight * t[flat];
  }
  return phi;
}

double bob_wager(const MarkovRandomField& model, const CliqueGraph& graph, int u, int R,
                 std::span<const int> I, std::span<const int> states) {
  double w = bob_phi(model, graph, u, R, I, states);
  for (int B = 0; B < model.arity(u); ++B) {
    if (B != R) w -= bob_phi(model, graph, u, B, I, states);
  }
  return w;
}

double wager_cap(const MarkovRandomField& model, const DerivedConstants& c) {
  return c.gamma * c.max_arity *
         binomial(c.max_degree, std::min(c.max_degree, model.order_bound() - 1));
}

double expected_payoff_exact(const MarkovRandomField& model, const JointTable& joint, int u) {
  const CliqueGraph graph = clique_graph(model);
  const int s = revealed_size(model, graph, u);
  const auto sets = subsets_of_size(graph.neighbors[static_cast<std::size_t>(u)], s);
  const std::vector<double> pu = node_marginal(joint, u);
  const int ku = model.arity(u);
  const double weight = 1.0 / (ku * static_cast<double>(sets.size()));

  double total = 0.0;
  std::vector<int> x(static_cast<std::size_t>(model.num_nodes()));
  for (std::size_t idx = 0; idx < joint.size(); ++idx) {
    const double p = joint.probs()[idx];
    joint.decode(idx, x);
    const int xu = x[static_cast<std::size_t>(u)];
    for (int R = 0; R < ku; ++R) {
      const double hit = (xu == R ? 1.0 : 0.0) - pu[static_cast<std::size_t>(R)];
      for (const auto& I : sets) {
        const std::vector<int> xs = states_of(I, x);
        total += p * weight * bob_wager(model, graph, u, R, I, xs) * hit;
      }
    }
  }
  return total;
}

double expected_payoff_exact(const MarkovRandomField& model, int u) {
  return expected_payoff_exact(model, exact_joint(model), u);
}

GameRound play_round(const MarkovRandomField& model, const CliqueGraph& graph,
                     const JointTable& joint, int u, Rng& rng) {
  std::vector<double> cdf(joint.size());
  std::partial_sum(joint.probs().begin(), joint.probs().end(), cdf.begin());
  std::vector<int> x(static_cast<std::size_t>(model.num_nodes()));
  std::vector<int> xp(x.size());
  joint.decode(draw_index(cdf, rng), x);
  joint.decode(draw_index(cdf, rng), xp);
  GameRound round;
  round.u = u;
  round.challenge = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(model.arity(u))));
  round.revealed = uniform_subset(graph.neighbors[static_cast<std::size_t>(u)],
                                  revealed_size(model, graph, u), rng);
  round.revealed_states = states_of(round.revealed, x);
  round.wager = bob_wager(model, graph, u, round.challenge, round.revealed, round.revealed_states);
  round.payoff = round.wager * ((x[static_cast<std::size_t>(u)] == round.challenge ? 1.0 : 0.0) -
                                (xp[static_cast<std::size_t>(u)] == round.challenge ? 1.0 : 0.0));
  return round;
}

MonteCarloPayoff expected_payoff_mc(const MarkovRandomField& model, const JointTable& joint, int u,
                                    std::uint64_t rounds, std::uint64_t seed) {
  if (rounds == 0) throw std::invalid_argument("expected_payoff_mc: rounds must be >= 1");
  const CliqueGraph graph = clique_graph(model);
  const int s = revealed_size(model, graph, u);
  const auto& nbrs = graph.neighbors[static_cast<std::size_t>(u)];
  const int ku = model.arity(u);
  std::vector<double> cdf(joint.size());
  std::partial_sum(joint.probs().begin(), joint.probs().end(), cdf.begin());
  Rng rng = make_rng(seed, Stream::kGame);

  std::vector<int> x(static_cast<std::size_t>(model.num_nodes()));
  MonteCarloPayoff out;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::uint64_t t = 1; t <= rounds; ++t) {
    joint.decode(draw_index(cdf, rng), x);
    const int xu = x[static_cast<std::size_t>(u)];
    const std::size_t xp_index = draw_index(cdf, rng);
    // Only X'_u matters; recover it without decoding the whole row.
    std::vector<int> xp(x.size());
    joint.decode(xp_index, xp);
    const int R = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(ku)));
    const std::vector<int> I = uniform_subset(nbrs, s, rng);
    const double w = bob_wager(model, graph, u, R, I, states_of(I, x));
    out.max_abs_wager = std::max(out.max_abs_wager, std::abs(w));
    const double delta = w * ((xu == R ? 1.0 : 0.0) - (xp[static_cast<std::size_t>(u)] == R ? 1.0 : 0.0));
    const double d1 = delta - mean;
    mean += d1 / static_cast<double>(t);
    m2 += d1 * (delta - mean);
  }
  out.rounds = rounds;
  out.mean = mean;
  out.standard_error =
      rounds > 1 ? std::sqrt(m2 / static_cast<double>(rounds - 1) / static_cast<double>(rounds)) : 0.0;
  return out;
}

MonteCarloPayoff expected_payoff_mc(const MarkovRandomField& model, int u, std::uint64_t rounds,
                                    std::uint64_t seed) {
  return expected_payoff_mc(model, exact_joint(model), u, rounds, seed);
}

double payoff_lower_bound(const DerivedConstants& c, int r, double alpha) {
  return 4.0 * alpha * alpha * std::pow(c.delta, r - 1.0) /
         (std::pow(r, 2.0 * r) * std::exp(2.0 * c.gamma));
}

bool has_nonvanishing_maximal_hyperedge(const MarkovRandomField& model, int u, double alpha) {
  for (const auto& h : maximal_hyperedges(model)) {
    if (std::binary_search(h.begin(), h.end(), u) && model.find(h)->max_abs() >= alpha) return true;
  }
  return false;
}

bool all_maximal_hyperedges_nonvanishing(const MarkovRandomField& model, int u, double alpha) {
  bool any = false;
  for (const auto& h : maximal_hyperedges(model)) {
    if (!std::binary_search(h.begin(), h.end(), u)) continue;
    any = true;
    if (model.find(h)->max_abs() < alpha) return false;
  }
  return any;
}

PayoffChain payoff_upper_bound_check(const MarkovRandomField& model, const JointTable& joint, int u,
                                     double alpha) {
  const CliqueGraph graph = clique_graph(model);
  const DerivedConstants c = compute_gamma_delta(model);
  const int s = revealed_size(model, graph, u);
  const int r = model.order_bound();
  const auto sets = subsets_of_size(graph.neighbors[static_cast<std::size_t>(u)], s);
  const std::vector<double> pu = node_marginal(joint, u);
  const auto ku = static_cast<std::size_t>(model.arity(u));
  const double K_pow_r = std::pow(c.max_arity, r);

  PayoffChain chain;
  chain.u = u;
  chain.expected_payoff = expected_payoff_exact(model, joint, u);
  chain.wager_cap = wager_cap(model, c);

  const std::vector<int> none;
  for (const auto& I : sets) {
    std::vector<int> nodes = I;
    nodes.push_back(u);
    const MarginalTable m = joint.marginal(nodes);  // (I..., u), u fastest
    double dev = 0.0;
    for (std::size_t g = 0; g < m.probs.size() / ku; ++g) {
      double pg = 0.0;
      for (std::size_t R = 0; R < ku; ++R) pg += m.probs[g * ku + R];
      if (pg <= 0.0) continue;
      for (std::size_t R = 0; R < ku; ++R) dev += pg * std::abs(m.probs[g * ku + R] / pg - pu[R]);
    }
    dev /= static_cast<double>(ku);
    chain.mean_deviation += dev / static_cast<double>(sets.size());

    const double mi = exact_conditional_mi(joint, u, I, none);
    const double root = std::sqrt(mi / 2.0);
    if (root + kSlack < dev / K_pow_r) chain.per_set_info_ok = false;
    chain.mean_root_info += root / static_cast<double>(sets.size());
    chain.mean_nu += exact_nu(joint, u, I, none) / static_cast<double>(sets.size());
  }
  chain.slack = chain.wager_cap * chain.mean_deviation - chain.expected_payoff;
  chain.payoff_upper_ok = chain.slack >= -kSlack;
  chain.pinsker_ok = chain.mean_root_info + kSlack >= chain.mean_nu;
  chain.nu_floor_applies =
      c.gamma > 0.0 && !graph.neighbors[static_cast<std::size_t>(u)].empty() &&
      has_nonvanishing_maximal_hyperedge(model, u, alpha);
  if (chain.nu_floor_applies) {
    chain.nu_floor = theoretical_constants(c.gamma, c.max_arity, alpha, r, c.max_degree, c.delta).C;
    chain.nu_floor_ok = chain.mean_nu >= chain.nu_floor;
  }
  return chain;
}

double max_unbiasedness_gap(const MarkovRandomField& model, int u) {
  const CliqueGraph graph = clique_graph(model);
  const int s = revealed_size(model, graph, u);
  const auto sets = subsets_of_size(graph.neighbors[static_cast<std::size_t>(u)], s);
  const int n = model.num_nodes();
  const int ku = model.arity(u);
  std::vector<int> x(static_cast<std::size_t>(n), 0);
  std::vector<double> e(static_cast<std::size_t>(ku));
  double worst = 0.0;
  const std::size_t total = model.configuration_count();
  for (std::size_t idx = 0; idx < total; ++idx) {
    double e_sum = 0.0;
    for (int B = 0; B < ku; ++B) {
      e[static_cast<std::size_t>(B)] = energy(model, u, B, x);
      e_sum += e[static_cast<std::size_t>(B)];
    }
    for (int R = 0; R < ku; ++R) {
      double avg = 0.0;
      for (const auto& I : sets) avg += bob_wager(model, graph, u, R, I, states_of(I, x));
      avg /= static_cast<double>(sets.size());
      const double target = 2.0 * e[static_cast<std::size_t>(R)] - e_sum;
      worst = std::max(worst, std::abs(avg - target));
    }
    for (int i = n - 1; i >= 0; --i) {
      auto& d = x[static_cast<std::size_t>(i)];
      if (++d < model.arity(i)) break;
      d = 0;
    }
  }
  return worst;
}

EnergyMoments energy_moments(const MarkovRandomField& model, const JointTable& joint, int u) {
  const auto ku = static_cast<std::size_t>(model.arity(u));
  EnergyMoments m;
  m.mean.assign(ku, 0.0);
  m.cov.assign(ku, std::vector<double>(ku, 0.0));
  std::vector<int> x(static_cast<std::size_t>(model.num_nodes()));
  std::vector<double> e(ku);
  for (std::size_t idx = 0; idx < joint.size(); ++idx) {
    const double p = joint.probs()[idx];
    joint.decode(idx, x);
    for (std::size_t R = 0; R < ku; ++R) e[R] = energy(model, u, static_cast<int>(R), x);
    for (std::size_t R = 0; R < ku; ++R) {
      m.mean[R] += p * e[R];
      for (std::size_t B = 0; B < ku; ++B) m.cov[R][B] += p * e[R] * e[B];
    }
  }
  for (std::size_t R = 0; R < ku; ++R) {
    for (std::size_t B = 0; B < ku; ++B) m.cov[R][B] -= m.mean[R] * m.mean[B];
  }
  return m;
}

double pair_variance_sum(const EnergyMoments& m) {
  double total = 0.0;
  for (std::size_t R = 0; R < m.mean.size(); ++R) {
    for (std::size_t B = 0; B < m.mean.size(); ++B) {
      if (B != R) total += 2.0 * (m.cov[R][R] + m.cov[B][B] - 2.0 * m.cov[R][B]);
    }
  }
  return total;
}

double scaled_energy_variance(const EnergyMoments& m) {
  double total = 0.0;
  for (std::size_t R = 0; R < m.mean.size(); ++R) total += m.cov[R][R];
  return 4.0 * static_cast<double>(m.mean.size()) * total;
}

double quantitative_sum_exact(const MarkovRandomField& model, const JointTable& joint, int u) {
  const CliqueGraph graph = clique_graph(model);
  const auto& nbrs = graph.neighbors[static_cast<std::size_t>(u)];
  const MarginalTable m = joint.marginal(nbrs);
  const auto ku = static_cast<std::size_t>(model.arity(u));

  // Energy vector for each joint state of the neighborhood.
  std::vector<std::vector<double>> energies(m.probs.size(), std::vector<double>(ku));
  std::vector<int> x(static_cast<std::size_t>(model.num_nodes()), 0);
  for (std::size_t g = 0; g < m.probs.size(); ++g) {
    std::size_t rem = g;
    for (std::size_t a = nbrs.size(); a-- > 0;) {
      x[static_cast<std::size_t>(nbrs[a])] = static_cast<int>(rem % static_cast<std::size_t>(m.dims[a]));
      rem /= static_cast<std::size_t>(m.dims[a]);
    }
    for (std::size_t R = 0; R < ku; ++R) energies[g][R] = energy(model, u, static_cast<int>(R), x);
  }
  double total = 0.0;
  for (std::size_t y = 0; y < m.probs.size(); ++y) {
    for (std::size_t z = 0; z < m.probs.size(); ++z) {
      double inner = 0.0;
      for (std::size_t R = 0; R < ku; ++R) {
        for (std::size_t B = 0; B < ku; ++B) {
          if (B == R) continue;
          const double a = energies[y][R] + energies[z][B];
          const double b = energies[y][B] + energies[z][R];
          inner += (a - b) * (std::exp(a) - std::exp(b));
        }
      }
      total += m.probs[y] * m.probs[z] * inner;
    }
  }
  return total;
}

double energy_variance_floor(const DerivedConstants& c, int r, double alpha) {
  return alpha * alpha * std::pow(c.delta, r - 1.0) / (2.0 * std::pow(r, 2.0 * r));
}

ConditionalFloorReport check_conditional_floor(const MarkovRandomField& model,
                                               const JointTable& joint, double alpha, int max_s) {
  const CliqueGraph graph = clique_graph(model);
  const DerivedConstants c = compute_gamma_delta(model);
  const int r = model.order_bound();
  const int n = model.num_nodes();
  ConditionalFloorReport report;
  if (c.gamma <= 0.0 || c.max_degree < 1) return report;
  report.c_prime =
      theoretical_constants(c.gamma, c.max_arity, alpha, r, c.max_degree, c.delta).C_prime;
  report.min_mean_nu = INFINITY;

  for (int u = 0; u < n; ++u) {
    const auto& nbrs = graph.neighbors[static_cast<std::size_t>(u)];
    if (nbrs.empty() || !all_maximal_hyperedges_nonvanishing(model, u, alpha)) continue;
    std::vector<int> others;
    for (int v = 0; v < n; ++v) {
      if (v != u) others.push_back(v);
    }
    for (int size = 0; size <= max_s && size <= static_cast<int>(others.size()); ++size) {
      for (const auto& S : subsets_of_size(others, size)) {
        std::vector<int> uncovered;
        std::set_difference(nbrs.begin(), nbrs.end(), S.begin(), S.end(), std::back_inserter(uncovered));
        if (uncovered.empty()) continue;
        const int s = std::min(r - 1, static_cast<int>(uncovered.size()));
        const auto sets = subsets_of_size(uncovered, s);
        double mean_nu = 0.0;
        double mean_root = 0.0;
        for (const auto& I : sets) {
          mean_nu += exact_nu(joint, u, I, S);
          mean_root += std::sqrt(exact_conditional_mi(joint, u, I, S) / 2.0);
        }
        mean_nu /= static_cast<double>(sets.size());
        mean_root /= static_cast<double>(sets.size());
        ++report.checks;
        report.min_mean_nu = std::min(report.min_mean_nu, mean_nu);
        if (mean_nu < report.c_prime) ++report.violations;
        if (mean_root + kSlack < mean_nu) ++report.pinsker_violations;
      }
    }
  }
  return report;
}

nlohmann::json to_json(const PayoffChain& c) {
  return {{"u", c.u},
          {"expected_payoff", c.expected_payoff},
          {"wager_cap", c.wager_cap},
          {"mean_deviation", c.mean_deviation},
          {"payoff_upper_ok", c.payoff_upper_ok},
          {"per_set_info_ok", c.per_set_info_ok},
          {"mean_root_info", c.mean_root_info},
          {"mean_nu", c.mean_nu},
          {"pinsker_ok", c.pinsker_ok},
          {"nu_floor", c.nu_floor},
          {"nu_floor_applies", c.nu_floor_applies},
          {"nu_floor_ok", c.nu_floor_ok},
          {"slack", c.slack},
          {"holds", c.holds()}};
}

}  // namespace mrfl
