#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mrfl/learning.hpp"
#include "mrfl/model.hpp"

namespace mrfl {

struct GeneratorSpec {
  int n = 2;
  int r = 2;
  int D = 1;
  int K = 2;
  double alpha = 0.2;
  double beta = 1.0;
  double hyperedge_density = 1.0;  // chance that a feasible candidate is kept
  std::uint64_t seed = 0;
  bool unary = true;               // draw a unary potential at every node
  bool random_arities = false;     // arities uniform in [2, K] instead of all K
};

nlohmann::json to_json(const GeneratorSpec& spec);
GeneratorSpec generator_spec_from_json(const nlohmann::json& j);

// Random canonical model with hyperedges of size <= r and clique-graph degree
// <= D. Candidates are visited in random order and kept greedily while the
// degree cap allows. Entries are drawn uniformly in [-beta, beta] and
// centered; a tensor is redrawn (at most 1000 times) until its entries stay
// within beta and, for maximal hyperedges, one reaches alpha.
// Throws InfeasibleSpec when alpha > beta or the redraw cap is hit.
MarkovRandomField generate_model(const GeneratorSpec& spec);

struct EdgeScore {
  double precision = 1.0;
  double recall = 1.0;
  bool exact_match = true;
  bool precision_undefined = false;  // nothing learned; precision reported as 1
  bool recall_undefined = false;     // empty truth; recall reported as 1
};

EdgeScore score_edges(const EdgeSet& truth, const EdgeSet& learned);

EdgeSet true_edges(const MarkovRandomField& model);

struct ExperimentOptions {
  LearnMode mode = LearnMode::kFull;
  std::size_t m = 1000;
  double reveal_prob = 1.0;       // erased mode
  std::size_t m_batch = 0;        // queried mode; 0 means m
  std::size_t gibbs_burn_in = 1000;
  std::size_t gibbs_thinning = 10;
  unsigned threads = 0;           // 0 means hardware concurrency
};

struct TrialResult {
  std::uint64_t seed = 0;
  EdgeScore score;
  std::size_t true_edge_count = 0;
  std::size_t learned_edge_count = 0;
  std::size_t warnings = 0;
  std::uint64_t effective_m = 0;  // rows handed to the learner
  double tau = 0.0;               // threshold actually used
  double L = 0.0;                 // budget actually used
  double theoretical_m_log10 = 0.0;
  double sample_seconds = 0.0;
  double learn_seconds = 0.0;
};

struct ExperimentReport {
  GeneratorSpec spec;
  LearnConfig config;
  ExperimentOptions options;
  std::uint64_t seed = 0;
  std::vector<TrialResult> trials;

  double exact_rate() const;
  double mean_precision() const;
  double mean_recall() const;
  double mean_learn_seconds() const;
};

// For each trial t: a model from a seed derived from (seed, t), samples from
// the model (exact when the joint table fits, Gibbs otherwise), optional
// erasure, learning and scoring. Trials run on a thread pool; results are
// stored in trial order. tau and L come from the model unless overridden in
// `config`.
ExperimentReport run_experiment(const GeneratorSpec& spec, const LearnConfig& config,
                                std::size_t trials, const ExperimentOptions& options,
                                std::uint64_t seed);

// Draws m rows from the model by the route run_experiment uses.
SampleSet draw_samples(const MarkovRandomField& model, std::size_t m, std::uint64_t seed,
                       std::size_t burn_in = 1000, std::size_t thinning = 10);

nlohmann::json to_json(const EdgeScore& score);
nlohmann::json to_json(const ExperimentReport& report, bool include_timing = true);

}  // namespace mrfl
