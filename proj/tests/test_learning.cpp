#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "mrfl/errors.hpp"
#include "mrfl/harness.hpp"
#include "mrfl/inference.hpp"
#include "mrfl/learning.hpp"

using namespace mrfl;

namespace {

LearnConfig exact_config(int r, double tau, double L) {
  LearnConfig c;
  c.r = r;
  c.override_tau = tau;
  c.override_L = L;
  return c;
}

}  // namespace

TEST_CASE("theoretical constants") {
  const TheoreticalConstants c = theoretical_constants(0.5, 2, 0.5, 2, 1, 0.18393972058572117);
  CHECK(c.C == doctest::Approx(0.0010573069002860367).epsilon(1e-12));
  CHECK(c.C_prime == doctest::Approx(0.00019448073581196856).epsilon(1e-12));
  CHECK(c.C_prime <= c.C);
  double prev = INFINITY;
  for (double g = 1.0; g <= 4.0; g += 0.5) {
    const double next = theoretical_constants(g, 2, 0.5, 2, 3, std::exp(-2 * g) / 2).C;
    CHECK(next < prev);
    prev = next;
  }
  // D below r - 1 still gives a finite constant.
  CHECK(std::isfinite(theoretical_constants(0.5, 2, 0.5, 3, 1, 0.18).C));
  CHECK_THROWS_AS(theoretical_constants(0.0, 2, 0.5, 2, 1, 0.18), std::invalid_argument);
}

TEST_CASE("make_learn_config fills tau and L") {
  const DerivedConstants dc = compute_gamma_delta(fixtures::ising_pair(0.5));
  const LearnConfig cfg = make_learn_config(dc, 2, 0.5, 0.5);
  CHECK(cfg.tau == doctest::Approx(9.724036790598428e-05).epsilon(1e-12));
  CHECK(cfg.L == doctest::Approx(586438212.6173762).epsilon(1e-12));
  CHECK(cfg.L == doctest::Approx(8.0 / (cfg.tau * cfg.tau) * std::log(2.0)).epsilon(1e-14));
  CHECK(cfg.effective_tau() == cfg.tau);
  LearnConfig over = cfg;
  over.override_tau = 0.01;
  over.override_L = 5;
  CHECK(over.effective_tau() == 0.01);
  CHECK(over.effective_L() == 5);

  const LearnConfig empty = make_learn_config(compute_gamma_delta(fixtures::zero_model(3)), 2, 0.5, 0.5);
  CHECK(std::isinf(empty.tau));
  CHECK(empty.L == 0.0);
  CHECK(learn_mode_from_string("erased") == LearnMode::kErased);
  CHECK(std::string(to_string(LearnMode::kQueried)) == "queried");
  CHECK_THROWS_AS(learn_mode_from_string("fast"), std::invalid_argument);
}

TEST_CASE("mrf_nbhd examples with the exact estimator") {
  SUBCASE("isolated node") {
    const MarkovRandomField m({2, 2, 2}, 2, {fixtures::ising_tensor(1, 2, 0.5), CliqueTensor({0}, {2}, {0.3, -0.3})});
    const JointTable j = exact_joint(m);
    ExactNuProvider p(j);
    const NeighborhoodResult r = mrf_nbhd(p, 0, exact_config(2, 1e-6, 10));
    CHECK(r.neighbors.empty());
    CHECK(r.candidate_superset.empty());
  }
  SUBCASE("Ising pair") {
    const JointTable j = exact_joint(fixtures::ising_pair(0.5));
    ExactNuProvider p(j);
    const NeighborhoodResult r = mrf_nbhd(p, 0, exact_config(2, 0.1, 10));
    CHECK(r.neighbors == std::vector<int>{1});
    REQUIRE(r.trace.size() == 2);
    CHECK(r.trace[0].kind == TraceStep::Kind::kAdd);
    CHECK(r.trace[0].value == doctest::Approx(0.11552928931500246).epsilon(1e-12));
    CHECK(r.trace[1].kind == TraceStep::Kind::kKeep);
    // A threshold above the exact value finds nothing.
    CHECK(mrf_nbhd(p, 0, exact_config(2, 0.12, 10)).neighbors.empty());
  }
  SUBCASE("path: the far end is never kept") {
    const JointTable j = exact_joint(fixtures::ising_path(0.6));
    ExactNuProvider p(j);
    const NeighborhoodResult r = mrf_nbhd(p, 0, exact_config(2, 1e-4, 10));
    CHECK(r.neighbors == std::vector<int>{1});
  }
}

TEST_CASE("Step 2 tie-break picks the lexicographically smallest set") {
  // Star with identical couplings: nodes 1 and 2 tie for the first addition.
  const MarkovRandomField m({2, 2, 2}, 2, {fixtures::ising_tensor(0, 1, 0.5), fixtures::ising_tensor(0, 2, 0.5)});
  const JointTable j = exact_joint(m);
  ExactNuProvider p(j);
  const NeighborhoodResult r = mrf_nbhd(p, 0, exact_config(2, 1e-4, 10));
  REQUIRE_FALSE(r.trace.empty());
  CHECK(r.trace[0].nodes == std::vector<int>{1});
  CHECK(r.neighbors == std::vector<int>{1, 2});
}

TEST_CASE("exact-estimator invariants: progress, budget, pruning") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    GeneratorSpec g;
    g.n = 4 + static_cast<int>(seed % 4);
    g.r = 2;
    g.D = 3;
    g.K = 2 + static_cast<int>(seed % 2);
    g.alpha = 0.3;
    g.seed = seed;
    const MarkovRandomField m = generate_model(g);
    const JointTable j = exact_joint(m);
    const CliqueGraph graph = clique_graph(m);
    ExactNuProvider p(j);
    const double tau = 1e-6;
    const LearnConfig cfg = exact_config(2, tau, 50);
    for (int u = 0; u < m.num_nodes(); ++u) {
      const NeighborhoodResult r = mrf_nbhd(p, u, cfg);
      std::vector<int> S;
      double info = 0.0;
      for (const auto& step : r.trace) {
        if (step.kind != TraceStep::Kind::kAdd) continue;
        S.insert(S.end(), step.nodes.begin(), step.nodes.end());
        std::sort(S.begin(), S.end());
        const double next = exact_conditional_mi(j, u, S, {});
        CHECK(next - info >= tau * tau / 8.0);
        info = next;
      }
      CHECK(static_cast<double>(r.candidate_superset.size()) <= 50.0);
      CHECK(std::includes(r.candidate_superset.begin(), r.candidate_superset.end(),
                          graph.neighbors[static_cast<std::size_t>(u)].begin(),
                          graph.neighbors[static_cast<std::size_t>(u)].end()));
      CHECK(r.neighbors == graph.neighbors[static_cast<std::size_t>(u)]);
      CHECK_FALSE(r.budget_exhausted);
    }
  }
}

TEST_CASE("learn_graph examples") {
  SUBCASE("exact estimator recovers generated graphs") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      GeneratorSpec g;
      g.n = 3 + static_cast<int>(seed % 6);
      g.r = 2 + static_cast<int>(seed % 2);
      g.D = 3;
      g.K = 2;
      g.alpha = 0.3;
      g.seed = seed;
      const MarkovRandomField m = generate_model(g);
      const JointTable j = exact_joint(m);
      ExactNuProvider p(j);
      LearnConfig cfg = exact_config(g.r, 1e-8, 100);
      cfg.prune_sets = true;
      const GraphResult r = learn_graph(p, cfg);
      CHECK(r.edges == true_edges(m));
      CHECK(r.warnings.empty());
    }
  }
  SUBCASE("empty model") {
    const JointTable j = exact_joint(fixtures::zero_model(4));
    ExactNuProvider p(j);
    CHECK(learn_graph(p, exact_config(2, 1e-6, 10)).edges.empty());
  }
  SUBCASE("a single sample yields nothing, with a warning") {
    const SampleSet s = sample_exact(exact_joint(fixtures::ising_path(0.8)), 1, 1);
    const GraphResult r = learn_graph(s, exact_config(2, 1e-6, 10));
    CHECK(r.edges.empty());
    CHECK_FALSE(r.warnings.empty());
  }
  SUBCASE("a budget overrun is reported") {
    const JointTable j = exact_joint(fixtures::ising_path(0.8));
    ExactNuProvider p(j);
    const NeighborhoodResult r = mrf_nbhd(p, 1, exact_config(2, 1e-6, 0.5));
    CHECK(r.budget_exhausted);
    CHECK_FALSE(r.warnings.empty());
  }
}

TEST_CASE("erased learner") {
  const MarkovRandomField m = fixtures::ising_pair(0.5);
  const SampleSet s = sample_exact(exact_joint(m), 20000, 3);
  const LearnConfig cfg = exact_config(2, 0.05, 6);

  SUBCASE("reveal_prob 1 reproduces the full learner") {
    const SampleSet same = erase(s, 1.0, 4);
    const GraphResult a = learn_graph(s, cfg);
    const GraphResult b = learn_graph_erased(same, cfg);
    CHECK(a.edges == b.edges);
    REQUIRE(a.per_node.size() == b.per_node.size());
    for (std::size_t i = 0; i < a.per_node.size(); ++i) {
      REQUIRE(a.per_node[i].trace.size() == b.per_node[i].trace.size());
      for (std::size_t t = 0; t < a.per_node[i].trace.size(); ++t) {
        CHECK(a.per_node[i].trace[t].value == b.per_node[i].trace[t].value);
      }
    }
  }
  SUBCASE("reveal_prob 0.9 with scaled m recovers the edge") {
    const std::size_t m_scaled = static_cast<std::size_t>(20000 / std::pow(0.9, 6 + 2));
    const SampleSet big = erase(sample_exact(exact_joint(m), m_scaled, 5), 0.9, 6);
    CHECK(learn_graph_erased(big, cfg).edges == EdgeSet{{0, 1}});
  }
  SUBCASE("reveal_prob 0 gives an empty graph with coverage warnings") {
    const SampleSet none = erase(s, 0.0, 4);
    const GraphResult r = learn_graph_erased(none, cfg);
    CHECK(r.edges.empty());
    for (const auto& node : r.per_node) CHECK_FALSE(node.warnings.empty());
  }
}

TEST_CASE("queried learner") {
  const MarkovRandomField m = fixtures::ising_pair(0.5);
  const JointTable j = exact_joint(m);
  const SampleSet pool = sample_exact(j, 2000000, 9);
  const LearnConfig cfg = exact_config(2, 0.05, 3);

  SUBCASE("batches of 10^5 recover the edge within the accounting bounds") {
    QueryOracle oracle(2, {2, 2}, 2, sample_set_source(pool));
    const QueriedGraphResult q = learn_graph_queried(oracle, cfg, 100000);
    CHECK(q.graph.edges == EdgeSet{{0, 1}});
    CHECK(q.accounting.within_bounds());
    CHECK(q.accounting.max_query_size <= q.accounting.query_size_cap);
    CHECK(q.accounting.samples_consumed == q.accounting.nu_evaluations * 100000);
  }
  SUBCASE("an undersized oracle is refused") {
    QueryOracle small(3, {2, 2, 2}, 2, sample_set_source(pool));
    CHECK_THROWS_AS(learn_graph_queried(small, cfg, 100), QueryCapacityExceeded);
  }
}

TEST_CASE("learning is deterministic and serializes") {
  GeneratorSpec g;
  g.n = 6;
  g.D = 2;
  g.seed = 4;
  const MarkovRandomField m = generate_model(g);
  const SampleSet s = sample_exact(exact_joint(m), 5000, 2);
  const LearnConfig cfg = exact_config(2, 0.01, 6);
  const GraphResult a = learn_graph(s, cfg);
  const GraphResult b = learn_graph(s, cfg);
  CHECK(to_json(a).dump() == to_json(b).dump());
  const auto j = to_json(a);
  REQUIRE(j["nodes"].size() == 6);
  CHECK(j["nodes"][0].contains("node"));
  CHECK(j["nodes"][0].contains("neighbors"));
  CHECK(j["nodes"][0].contains("trace"));
  CHECK(j["nodes"][0].contains("warnings"));

  std::ostringstream audit;
  SampleNuProvider p(s);
  p.set_audit(&audit);
  learn_graph(p, cfg);
  const std::string lines = audit.str();
  CHECK(lines.rfind("nu u=0 I=", 0) == 0);
  CHECK(static_cast<std::uint64_t>(std::count(lines.begin(), lines.end(), '\n')) == p.evaluations());
}
