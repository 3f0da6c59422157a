#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mrfl/model.hpp"
#include "mrfl/sample_set.hpp"

namespace mrfl {

// Largest configuration space exact_joint will enumerate.
inline constexpr std::size_t kMaxJointConfigs = std::size_t{1} << 24;

// Probabilities of a set of nodes, row-major in the order the nodes were
// given (first node most significant).
struct MarginalTable {
  std::vector<int> nodes;
  std::vector<int> dims;
  std::vector<double> probs;
};

// Exact law of a small model over all configurations. Configurations are
// indexed mixed-radix with node 0 as the most significant digit.
class JointTable {
 public:
  JointTable(std::vector<int> arities, std::vector<double> probs, double log_partition);

  int num_nodes() const { return static_cast<int>(arities_.size()); }
  const std::vector<int>& arities() const { return arities_; }
  const std::vector<double>& probs() const { return probs_; }
  double log_partition() const { return log_partition_; }
  std::size_t size() const { return probs_.size(); }

  std::size_t index_of(std::span<const int> x) const;
  void decode(std::size_t index, std::span<int> x) const;
  double prob(std::span<const int> x) const { return probs_[index_of(x)]; }

  MarginalTable marginal(std::span<const int> nodes) const;

 private:
  std::vector<int> arities_;
  std::vector<std::size_t> strides_;
  std::vector<double> probs_;
  double log_partition_ = 0.0;
};

// Throws CapacityError when the model has more than max_configs configurations.
JointTable exact_joint(const MarkovRandomField& model, std::size_t max_configs = kMaxJointConfigs);

// I(X_u; X_I | X_S) in nats. Requires u, I, S pairwise disjoint.
double exact_conditional_mi(const JointTable& joint, int u, std::span<const int> I,
                            std::span<const int> S);

// E_{R,G} E_{X_S} |Pr(X_u=R, X_I=G | X_S) - Pr(X_u=R | X_S) Pr(X_I=G | X_S)|
// with R and G uniform over the state spaces of u and I.
double exact_nu(const JointTable& joint, int u, std::span<const int> I, std::span<const int> S);

// Entropy of X_u in nats.
double exact_entropy(const JointTable& joint, int u);

// Inverse-CDF sampling of m independent rows from the table.
SampleSet sample_exact(const JointTable& joint, std::size_t m, std::uint64_t seed);

// Systematic-scan heat-bath Gibbs sampler. Runs `burn_in` sweeps from a
// uniformly random start, then records a row every `thinning` sweeps.
SampleSet gibbs_sample(const MarkovRandomField& model, std::size_t m, std::size_t burn_in,
                       std::size_t thinning, std::uint64_t seed);

// Keeps each cell with probability reveal_prob and erases it otherwise,
// independently of the values.
SampleSet erase(const SampleSet& samples, double reveal_prob, std::uint64_t seed);

}  // namespace mrfl
