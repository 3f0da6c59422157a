// mrfl: learn the clique graph of a discrete Markov random field from
// samples, and check the supporting bounds on small models.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mrfl/errors.hpp"
#include "mrfl/estimation.hpp"
#include "mrfl/game.hpp"
#include "mrfl/harness.hpp"
#include "mrfl/inference.hpp"
#include "mrfl/learning.hpp"
#include "mrfl/model_io.hpp"
#include "mrfl/sample_set.hpp"

using nlohmann::json;
using namespace mrfl;

namespace {

void emit(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

void emit_samples(const SampleSet& s, const std::string& path) {
  if (path.empty() || path == "-") {
    write_samples(s, std::cout);
  } else {
    save_samples(s, path);
  }
}

void add_generator_options(CLI::App* app, GeneratorSpec& g) {
  app->add_option("--n", g.n, "node count")->default_val(g.n);
  app->add_option("--r", g.r, "interaction order bound")->default_val(g.r);
  app->add_option("--D", g.D, "max clique-graph degree")->default_val(g.D);
  app->add_option("--K", g.K, "max arity")->default_val(g.K);
  app->add_option("--alpha", g.alpha, "nonvanishing floor")->default_val(g.alpha);
  app->add_option("--beta", g.beta, "entry bound")->default_val(g.beta);
  app->add_option("--density", g.hyperedge_density, "hyperedge density in (0,1]")
      ->default_val(g.hyperedge_density);
  app->add_flag("!--no-unary", g.unary, "omit unary potentials");
  app->add_flag("--random-arities", g.random_arities, "draw arities uniformly in [2, K]");
}

struct LearnArgs {
  std::string model_path;
  std::string samples_path;
  std::string truth_path;
  std::string mode = "full";
  std::optional<double> tau;
  std::optional<double> L;
  std::size_t m = 1000;
  std::uint64_t seed = 0;
  bool prune_sets = false;
  double alpha = 0.2;
  double beta = 1.0;
  double omega = 0.05;
  int r = 0;
  std::uint64_t coverage_floor = 1;
  std::string audit_path;
  std::string out = "-";
};

int run_learn(const LearnArgs& a) {
  std::optional<MarkovRandomField> model;
  if (!a.model_path.empty()) model = load_model(a.model_path);
  std::optional<MarkovRandomField> truth;
  if (!a.truth_path.empty()) truth = load_model(a.truth_path);
  else if (model) truth = model;

  const LearnMode mode = learn_mode_from_string(a.mode);
  LearnConfig cfg;
  if (model) {
    const int r = a.r > 0 ? a.r : model->order_bound();
    cfg = make_learn_config(compute_gamma_delta(*model), r, a.alpha, a.beta, a.omega);
  } else {
    if (!a.tau || !a.L || a.r <= 0) {
      throw std::invalid_argument("learn: without --model, --tau, --L and --r are required");
    }
    cfg.r = a.r;
    cfg.alpha = a.alpha;
    cfg.beta = a.beta;
    cfg.omega = a.omega;
  }
  cfg.mode = mode;
  cfg.override_tau = a.tau;
  cfg.override_L = a.L;
  cfg.prune_sets = a.prune_sets;
  cfg.coverage_floor = a.coverage_floor;

  std::ofstream audit;
  GraphResult result;
  json accounting;
  bool checks_ok = true;
  if (mode == LearnMode::kQueried) {
    if (!model) throw std::invalid_argument("learn: queried mode draws from --model");
    const JointTable joint = exact_joint(*model);
    std::vector<double> cdf(joint.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cdf.size(); ++i) cdf[i] = acc += joint.probs()[i];
    Rng rng = make_rng(a.seed, Stream::kQuery);
    SampleSource source = [&](std::span<int> row) {
      const double u = uniform01(rng) * cdf.back();
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      if (it == cdf.end()) --it;
      joint.decode(static_cast<std::size_t>(it - cdf.begin()), row);
    };
    const double cap = std::min(std::floor(cfg.effective_L()) + cfg.r,
                                static_cast<double>(model->num_nodes()));
    QueryOracle oracle(model->num_nodes(), model->arities(), static_cast<std::size_t>(cap), source);
    QueriedGraphResult q = learn_graph_queried(oracle, cfg, a.m);
    result = std::move(q.graph);
    accounting = {{"samples_consumed", q.accounting.samples_consumed},
                  {"nu_evaluations", q.accounting.nu_evaluations},
                  {"max_query_size", q.accounting.max_query_size},
                  {"query_size_cap", q.accounting.query_size_cap},
                  {"total_budget", q.accounting.total_budget},
                  {"within_bounds", q.accounting.within_bounds()}};
    checks_ok = q.accounting.within_bounds();
  } else {
    SampleSet samples;
    if (!a.samples_path.empty()) {
      samples = load_samples(a.samples_path);
    } else if (model) {
      samples = draw_samples(*model, a.m, a.seed);
    } else {
      throw std::invalid_argument("learn: need --samples or --model");
    }
    std::unique_ptr<NuProvider> provider;
    if (mode == LearnMode::kErased) {
      provider = std::make_unique<ErasedNuProvider>(samples, cfg.coverage_floor);
    } else {
      provider = std::make_unique<SampleNuProvider>(samples);
    }
    if (!a.audit_path.empty()) {
      audit.open(a.audit_path);
      provider->set_audit(&audit);
    }
    result = learn_graph(*provider, cfg);
    if (samples.rows() < 2) {
      result.warnings.insert(result.warnings.begin(),
                             "samples: fewer than 2 rows, every nu estimate is identically 0");
    }
  }

  json out = to_json(result);
  out["config"] = to_json(cfg);
  if (!accounting.is_null()) out["accounting"] = accounting;
  if (truth) {
    const EdgeScore s = score_edges(true_edges(*truth), result.edges);
    json edges = json::array();
    for (const auto& [i, j] : result.edges) edges.push_back({i, j});
    out["summary"] = {{"edges", edges},
                      {"precision", s.precision},
                      {"recall", s.recall},
                      {"exact_match", s.exact_match},
                      {"precision_undefined", s.precision_undefined}};
  }
  emit(out, a.out);
  return checks_ok ? 0 : 1;
}

int run_verify(const std::string& model_path, double alpha, double beta, int max_s,
               const std::string& out_path) {
  const MarkovRandomField model = load_model(model_path);
  const JointTable joint = exact_joint(model);
  const DerivedConstants c = compute_gamma_delta(model);
  const NonDegeneracyReport nd = validate_nondegeneracy(model, alpha, beta);
  const CliqueGraph graph = clique_graph(model);
  bool ok = true;

  json nodes = json::array();
  for (int u = 0; u < model.num_nodes(); ++u) {
    const PayoffChain chain = payoff_upper_bound_check(model, joint, u, alpha);
    const double gap = max_unbiasedness_gap(model, u);
    const bool game_applies = graph.degrees[static_cast<std::size_t>(u)] > 0 &&
                              all_maximal_hyperedges_nonvanishing(model, u, alpha);
    const double bound = payoff_lower_bound(c, model.order_bound(), alpha);
    const bool game_ok = !game_applies || chain.expected_payoff >= bound;
    const bool node_ok = chain.holds() && gap <= 1e-10 && game_ok;
    ok = ok && node_ok;
    json j = to_json(chain);
    j["unbiasedness_gap"] = gap;
    j["game_bound"] = bound;
    j["game_bound_applies"] = game_applies;
    j["pass"] = node_ok;
    nodes.push_back(j);
  }
  const ConditionalFloorReport floor = check_conditional_floor(model, joint, alpha, max_s);
  ok = ok && floor.passed();
  json out = {{"nondegenerate", nd.passed()},
              {"gamma", c.gamma},
              {"delta", c.delta},
              {"D", c.max_degree},
              {"K", c.max_arity},
              {"nodes", nodes},
              {"conditional_floor",
               {{"checks", floor.checks},
                {"violations", floor.violations},
                {"pinsker_violations", floor.pinsker_violations},
                {"c_prime", floor.c_prime},
                {"min_mean_nu", floor.checks ? json(floor.min_mean_nu) : json(nullptr)}}},
              {"pass", ok}};
  emit(out, out_path);
  return ok ? 0 : 1;
}

int run_game(const std::string& model_path, double alpha, std::uint64_t rounds, std::uint64_t seed,
             int node, const std::string& out_path) {
  const MarkovRandomField model = load_model(model_path);
  const JointTable joint = exact_joint(model);
  const DerivedConstants c = compute_gamma_delta(model);
  const CliqueGraph graph = clique_graph(model);
  const double bound = payoff_lower_bound(c, model.order_bound(), alpha);
  bool ok = true;
  json records = json::array();
  for (int u = 0; u < model.num_nodes(); ++u) {
    if (node >= 0 && u != node) continue;
    const double exact = expected_payoff_exact(model, joint, u);
    const MonteCarloPayoff mc =
        expected_payoff_mc(model, joint, u, rounds, derive_seed(seed, Stream::kGame, static_cast<std::uint64_t>(u)));
    const bool applies = graph.degrees[static_cast<std::size_t>(u)] > 0 &&
                         all_maximal_hyperedges_nonvanishing(model, u, alpha);
    const bool mc_ok = std::abs(mc.mean - exact) <= 3.0 * mc.standard_error + 1e-12;
    const bool pass = mc_ok && (!applies || exact >= bound);
    ok = ok && pass;
    records.push_back({{"u", u},
                       {"exact_E_delta", exact},
                       {"mc_mean", mc.mean},
                       {"mc_se", mc.standard_error},
                       {"theoretical_bound", applies ? json(bound) : json(nullptr)},
                       {"pass", pass}});
  }
  emit(records, out_path);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure learning for discrete Markov random fields"};
  app.require_subcommand(1);

  GeneratorSpec gen;
  std::string gen_out = "-";
  auto* generate = app.add_subcommand("generate-model", "draw a random non-degenerate model");
  add_generator_options(generate, gen);
  generate->add_option("--seed", gen.seed, "seed")->default_val(0);
  generate->add_option("-o,--out", gen_out, "output path, - for stdout");

  std::string model_path;
  std::size_t m = 1000;
  std::uint64_t seed = 0;
  bool gibbs = false;
  std::size_t burn_in = 1000;
  std::size_t thinning = 10;
  std::string sample_out = "-";
  auto* sample = app.add_subcommand("sample", "draw samples from a model");
  sample->add_option("--model", model_path, "model JSON")->required();
  sample->add_option("--m", m, "number of samples")->default_val(m);
  sample->add_option("--seed", seed, "seed")->default_val(0);
  sample->add_flag("--gibbs", gibbs, "use the Gibbs sampler instead of exact sampling");
  sample->add_option("--burn-in", burn_in, "Gibbs burn-in sweeps")->default_val(burn_in);
  sample->add_option("--thinning", thinning, "Gibbs sweeps between samples")->default_val(thinning);
  sample->add_option("-o,--out", sample_out, "output path, - for stdout");

  std::string samples_path;
  double reveal_prob = 0.9;
  std::string erase_out = "-";
  auto* erase_cmd = app.add_subcommand("erase", "pass samples through the erasure channel");
  erase_cmd->add_option("--samples", samples_path, "sample file")->required();
  erase_cmd->add_option("--reveal-prob", reveal_prob, "probability a cell is kept")->default_val(reveal_prob);
  erase_cmd->add_option("--seed", seed, "seed")->default_val(0);
  erase_cmd->add_option("-o,--out", erase_out, "output path, - for stdout");

  LearnArgs la;
  auto* learn = app.add_subcommand("learn", "learn the clique graph");
  learn->add_option("--model", la.model_path, "model JSON (constants, queried source, truth)");
  learn->add_option("--samples", la.samples_path, "sample file");
  learn->add_option("--truth", la.truth_path, "ground-truth model for scoring");
  learn->add_option("--mode", la.mode, "full|erased|queried")
      ->check(CLI::IsMember({"full", "erased", "queried"}))
      ->default_val(la.mode);
  learn->add_option("--tau", la.tau, "override the threshold");
  learn->add_option("--L", la.L, "override the candidate budget");
  learn->add_option("--m", la.m, "samples to draw, or the batch size in queried mode")->default_val(la.m);
  learn->add_option("--seed", la.seed, "seed")->default_val(0);
  learn->add_flag("--prune-sets", la.prune_sets, "set-valued pruning for r > 2");
  learn->add_option("--alpha", la.alpha, "alpha used for the theoretical constants")->default_val(la.alpha);
  learn->add_option("--beta", la.beta, "beta used for the theoretical constants")->default_val(la.beta);
  learn->add_option("--omega", la.omega, "failure probability")->default_val(la.omega);
  learn->add_option("--r", la.r, "order bound (defaults to the model's)");
  learn->add_option("--coverage-floor", la.coverage_floor, "erased mode: minimum complete rows")
      ->default_val(la.coverage_floor);
  learn->add_option("--audit", la.audit_path, "write every nu estimate to this file");
  learn->add_option("-o,--out", la.out, "output path, - for stdout");

  double alpha = 0.2;
  double beta = 1.0;
  int max_s = 3;
  std::string verify_out = "-";
  auto* verify = app.add_subcommand("verify-bounds", "exhaustive bound checks on a small model");
  verify->add_option("--model", model_path, "model JSON")->required();
  verify->add_option("--alpha", alpha, "alpha")->default_val(alpha);
  verify->add_option("--beta", beta, "beta")->default_val(beta);
  verify->add_option("--max-s", max_s, "largest conditioning set")->default_val(max_s);
  verify->add_option("-o,--out", verify_out, "output path, - for stdout");

  std::uint64_t rounds = 100000;
  int node = -1;
  std::string game_out = "-";
  auto* game = app.add_subcommand("play-game", "exact and Monte-Carlo payoff of the guessing game");
  game->add_option("--model", model_path, "model JSON")->required();
  game->add_option("--alpha", alpha, "alpha")->default_val(alpha);
  game->add_option("--rounds", rounds, "Monte-Carlo rounds")->default_val(rounds);
  game->add_option("--seed", seed, "seed")->default_val(0);
  game->add_option("--node", node, "single node, -1 for all")->default_val(node);
  game->add_option("-o,--out", game_out, "output path, - for stdout");

  GeneratorSpec exp_gen;
  std::size_t trials = 10;
  std::string exp_mode = "full";
  ExperimentOptions opts;
  LearnConfig exp_cfg;
  std::optional<double> exp_tau;
  std::optional<double> exp_L;
  bool no_timing = false;
  std::string exp_out = "-";
  auto* experiment = app.add_subcommand("run-experiment", "generate, sample, learn and score");
  add_generator_options(experiment, exp_gen);
  experiment->add_option("--trials", trials, "number of trials")->default_val(trials);
  experiment->add_option("--mode", exp_mode, "full|erased|queried")
      ->check(CLI::IsMember({"full", "erased", "queried"}))
      ->default_val(exp_mode);
  experiment->add_option("--m", opts.m, "samples per trial")->default_val(opts.m);
  experiment->add_option("--reveal-prob", opts.reveal_prob, "erased mode")->default_val(opts.reveal_prob);
  experiment->add_option("--m-batch", opts.m_batch, "queried mode batch (0 = m)")->default_val(0);
  experiment->add_option("--threads", opts.threads, "worker threads (0 = all cores)")->default_val(0);
  experiment->add_option("--tau", exp_tau, "override the threshold");
  experiment->add_option("--L", exp_L, "override the candidate budget");
  experiment->add_flag("--prune-sets", exp_cfg.prune_sets, "set-valued pruning for r > 2");
  experiment->add_option("--omega", exp_cfg.omega, "failure probability")->default_val(exp_cfg.omega);
  experiment->add_option("--seed", seed, "seed")->default_val(0);
  experiment->add_flag("--no-timing", no_timing, "omit timing fields");
  experiment->add_option("-o,--out", exp_out, "output path, - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*generate) {
      const MarkovRandomField model = generate_model(gen);
      json j = model_to_json(model);
      j["generator"] = to_json(gen);
      emit(j, gen_out);
      return 0;
    }
    if (*sample) {
      const MarkovRandomField model = load_model(model_path);
      const SampleSet s = gibbs ? gibbs_sample(model, m, burn_in, thinning, seed)
                                : sample_exact(exact_joint(model), m, seed);
      emit_samples(s, sample_out);
      return 0;
    }
    if (*erase_cmd) {
      emit_samples(erase(load_samples(samples_path), reveal_prob, seed), erase_out);
      return 0;
    }
    if (*learn) return run_learn(la);
    if (*verify) return run_verify(model_path, alpha, beta, max_s, verify_out);
    if (*game) return run_game(model_path, alpha, rounds, seed, node, game_out);
    if (*experiment) {
      opts.mode = learn_mode_from_string(exp_mode);
      exp_cfg.override_tau = exp_tau;
      exp_cfg.override_L = exp_L;
      const ExperimentReport report = run_experiment(exp_gen, exp_cfg, trials, opts, seed);
      emit(to_json(report, !no_timing), exp_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "mrfl: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
