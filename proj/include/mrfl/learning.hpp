#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mrfl/estimation.hpp"
#include "mrfl/inference.hpp"
#include "mrfl/model.hpp"

namespace mrfl {

enum class LearnMode { kFull, kErased, kQueried };

const char* to_string(LearnMode mode);
LearnMode learn_mode_from_string(const std::string& s);

struct TheoreticalConstants {
  double C = 0.0;        // unconditional nu floor
  double C_prime = 0.0;  // conditional nu floor; tau is half of this
};

// C = 4 a^2 delta^{r-1} / (r^{2r} K^{r+1} binom(D, s) gamma e^{2 gamma}) with
// s = min(D, r-1), and C' replaces delta^{r-1} by delta^{r+D-1}.
TheoreticalConstants theoretical_constants(double gamma, int K, double alpha, int r, int D,
                                           double delta);

struct LearnConfig {
  int r = 2;
  int D = 1;
  int K = 2;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 1.0;
  double tau = 0.0;  // theoretical threshold C'/2
  double L = 0.0;    // theoretical budget (8 / tau^2) log K
  double omega = 0.05;
  LearnMode mode = LearnMode::kFull;
  std::optional<double> override_tau;
  std::optional<double> override_L;
  // Step 3 keeps i only if some set I containing i, |I| <= r-1, I within S,
  // has nu-hat_{u,I|S\I} >= tau. Off means the singleton rule.
  bool prune_sets = false;
  // Erased mode: estimates backed by fewer complete rows are forced to 0.
  std::uint64_t coverage_floor = 1;

  double effective_tau() const { return override_tau.value_or(tau); }
  double effective_L() const { return override_L.value_or(L); }
};

// Fills tau and L from the theoretical constants of the given model summary.
LearnConfig make_learn_config(const DerivedConstants& constants, int r, double alpha, double beta,
                              double omega = 0.05);

nlohmann::json to_json(const LearnConfig& config);

struct NuAnswer {
  double value = 0.0;
  std::uint64_t effective_m = 0;
  bool coverage_ok = true;
};

// Answers nu-hat_{u,I|S} queries for the learner.
class NuProvider {
 public:
  virtual ~NuProvider() = default;
  virtual int num_nodes() const = 0;
  virtual NuAnswer estimate(int u, std::span<const int> I, std::span<const int> S) = 0;

  // Optional line-oriented audit log of every estimate.
  void set_audit(std::ostream* out) { audit_ = out; }
  std::uint64_t evaluations() const { return evaluations_; }

 protected:
  void record(int u, std::span<const int> I, std::span<const int> S, const NuAnswer& a);

 private:
  std::ostream* audit_ = nullptr;
  std::uint64_t evaluations_ = 0;
};

// Exact nu from a joint table; the oracle-backed learner.
class ExactNuProvider : public NuProvider {
 public:
  explicit ExactNuProvider(const JointTable& joint) : joint_(&joint) {}
  int num_nodes() const override { return joint_->num_nodes(); }
  NuAnswer estimate(int u, std::span<const int> I, std::span<const int> S) override;

 private:
  const JointTable* joint_;
};

// Plug-in estimates from full samples.
class SampleNuProvider : public NuProvider {
 public:
  explicit SampleNuProvider(const SampleSet& samples) : emp_(samples) {}
  int num_nodes() const override { return emp_.samples().num_nodes(); }
  NuAnswer estimate(int u, std::span<const int> I, std::span<const int> S) override;

 private:
  EmpiricalDistribution emp_;
};

// Complete-case estimates from erased samples. Anything backed by fewer than
// `floor` rows reads as 0 and is flagged.
class ErasedNuProvider : public NuProvider {
 public:
  ErasedNuProvider(const SampleSet& samples, std::uint64_t floor) : emp_(samples), floor_(floor) {}
  int num_nodes() const override { return emp_.samples().num_nodes(); }
  NuAnswer estimate(int u, std::span<const int> I, std::span<const int> S) override;

 private:
  EmpiricalDistribution emp_;
  std::uint64_t floor_;
};

// Each estimate spends a fresh batch of bounded queries.
class QueriedNuProvider : public NuProvider {
 public:
  QueriedNuProvider(QueryOracle& oracle, std::size_t m_batch) : oracle_(&oracle), m_batch_(m_batch) {}
  int num_nodes() const override { return oracle_->num_nodes(); }
  NuAnswer estimate(int u, std::span<const int> I, std::span<const int> S) override;
  std::uint64_t queries() const { return queries_; }

 private:
  QueryOracle* oracle_;
  std::size_t m_batch_;
  std::uint64_t queries_ = 0;
};

struct TraceStep {
  enum class Kind { kAdd, kPrune, kKeep };
  Kind kind = Kind::kAdd;
  std::vector<int> nodes;
  double value = 0.0;
  std::uint64_t effective_m = 0;
};

struct NeighborhoodResult {
  int node = 0;
  std::vector<int> neighbors;         // sorted
  std::vector<int> candidate_superset;  // S at the end of Step 2
  std::vector<TraceStep> trace;
  std::uint64_t evaluations = 0;
  bool budget_exhausted = false;
  std::vector<std::string> warnings;
};

// Greedy neighborhood estimate at node u.
//   Step 2: while |S| <= L, add the set I (|I| <= r-1, disjoint from S and u)
//           with the largest nu-hat_{u,I|S} above tau; ties go to the
//           lexicographically smallest I.
//   Step 3: drop every i in S with nu-hat_{u,i|S\i} < tau, each test made
//           against the Step-2 set (or the set-valued rule, see LearnConfig).
NeighborhoodResult mrf_nbhd(NuProvider& provider, int u, const LearnConfig& config);

using EdgeSet = std::set<std::pair<int, int>>;

struct GraphResult {
  EdgeSet edges;  // (i, j), i < j, present iff each lies in the other's estimate
  std::vector<NeighborhoodResult> per_node;
  std::vector<std::string> warnings;
};

// Runs mrf_nbhd at every node and keeps the mutually confirmed edges.
GraphResult learn_graph(NuProvider& provider, const LearnConfig& config);

// Full-sample learner.
GraphResult learn_graph(const SampleSet& samples, const LearnConfig& config);

// Erased-sample learner; coverage shortfalls appear as warnings.
GraphResult learn_graph_erased(const SampleSet& samples, const LearnConfig& config);

struct QueryAccounting {
  std::uint64_t samples_consumed = 0;
  std::uint64_t nu_evaluations = 0;
  std::size_t max_query_size = 0;
  std::size_t query_size_cap = 0;  // floor(L) + r
  double total_budget = 0.0;       // m_batch * L * r * n^r
  bool within_bounds() const {
    return max_query_size <= query_size_cap && static_cast<double>(samples_consumed) <= total_budget;
  }
};

struct QueriedGraphResult {
  GraphResult graph;
  QueryAccounting accounting;
};

// Bounded-query learner. The oracle capacity must be at least floor(L) + r.
QueriedGraphResult learn_graph_queried(QueryOracle& oracle, const LearnConfig& config,
                                       std::size_t m_batch);

nlohmann::json to_json(const NeighborhoodResult& result);
nlohmann::json to_json(const GraphResult& result);

}  // namespace mrfl
