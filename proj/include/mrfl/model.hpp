#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mrfl/tensor.hpp"

namespace mrfl {

// Fiber sums below this are treated as zero when checking canonical form.
inline constexpr double kCenteringTol = 1e-9;
// After recentering, tensors whose entries are all below this are dropped.
inline constexpr double kPruneTol = 1e-12;

// Discrete Markov random field with clique potentials of order <= r.
//
// Nodes are 0-based. States of node i are 0..k_i-1. The law is
//   Pr(x) = exp(sum_h theta_h(x_h) - log Z),
// summed over the stored hyperedges h. Absence of a hyperedge means the zero
// tensor. Tensors are kept sorted by their vertex lists; the object is
// immutable after construction.
//
// The constructor accepts explicitly stored zero tensors (they matter for the
// edge-coverage check of non-degeneracy); canonicalize() drops them.
class MarkovRandomField {
 public:
  MarkovRandomField() = default;
  MarkovRandomField(std::vector<int> arities, int order_bound, std::vector<CliqueTensor> tensors);

  int num_nodes() const { return static_cast<int>(arities_.size()); }
  const std::vector<int>& arities() const { return arities_; }
  int arity(int node) const { return arities_[static_cast<std::size_t>(node)]; }
  int max_arity() const;
  int order_bound() const { return order_bound_; }

  const std::vector<CliqueTensor>& tensors() const { return tensors_; }
  // Indices into tensors() of every tensor whose vertex set contains `node`.
  const std::vector<std::size_t>& incident(int node) const {
    return incident_[static_cast<std::size_t>(node)];
  }
  const CliqueTensor* find(std::span<const int> vertices) const;

  // Sum of all potentials at a full configuration (unnormalized log-weight).
  double log_weight(std::span<const int> x) const;

  std::size_t configuration_count() const;

 private:
  std::vector<int> arities_;
  int order_bound_ = 1;
  std::vector<CliqueTensor> tensors_;
  std::vector<std::vector<std::size_t>> incident_;
};

// Rewrites the model so that every tensor is centered, pushing fiber means
// down to the next-lower-order tensor (and finally into the normalization
// constant). Proceeds from the highest order down; within one order, in
// lexicographic vertex order. Tensors that end up zero are dropped.
MarkovRandomField canonicalize(const MarkovRandomField& model);

bool is_canonical(const MarkovRandomField& model, double tol = kCenteringTol);

struct CliqueGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;    // i < j, sorted
  std::vector<std::vector<int>> neighbors;   // sorted
  std::vector<int> degrees;
  int max_degree = 0;

  bool has_edge(int i, int j) const;
};

CliqueGraph clique_graph(const MarkovRandomField& model);

// Hyperedges that are not strictly contained in another stored hyperedge.
// Only nonzero tensors count.
std::vector<std::vector<int>> maximal_hyperedges(const MarkovRandomField& model);

struct NonDegeneracyReport {
  struct EdgeCheck {
    int i = 0;
    int j = 0;
    bool ok = false;
  };
  struct HyperedgeCheck {
    std::vector<int> vertices;
    double max_abs = 0.0;
    bool ok = false;
  };

  double alpha = 0.0;
  double beta = 0.0;
  std::vector<EdgeCheck> edge_cover;              // condition (a)
  std::vector<HyperedgeCheck> maximal_nonvanishing;  // condition (b)
  std::vector<HyperedgeCheck> entry_bound;        // condition (c)

  bool edge_cover_ok() const;
  bool maximal_nonvanishing_ok() const;
  bool entry_bound_ok() const;
  bool passed() const { return edge_cover_ok() && maximal_nonvanishing_ok() && entry_bound_ok(); }
};

// Checks (alpha, beta)-non-degeneracy. Throws std::invalid_argument if the
// model is not canonical or alpha/beta are not positive.
NonDegeneracyReport validate_nondegeneracy(const MarkovRandomField& model, double alpha,
                                           double beta);

// Total potential at node u with u in state R and every other node as in x.
// x[u] is ignored.
double energy(const MarkovRandomField& model, int u, int state, std::span<const int> x);

// Pr(X_u = . | X_{~u} = x). x[u] is ignored.
std::vector<double> conditional_distribution(const MarkovRandomField& model, int u,
                                             std::span<const int> x);

struct DerivedConstants {
  double gamma = 0.0;  // max over u of the summed max-magnitudes of tensors at u
  double delta = 1.0;  // exp(-2 gamma) / K
  int max_degree = 0;  // D
  int max_arity = 2;   // K
};

DerivedConstants compute_gamma_delta(const MarkovRandomField& model);

struct ConditionedModel {
  MarkovRandomField model;
  // kept[i] is the original index of node i of the conditioned model.
  std::vector<int> kept;
};

// Law of X_{[n] \ S} given X_S = x_S, as a canonical model on the surviving
// nodes (renumbered in increasing order). `states` is parallel to `nodes`.
ConditionedModel condition_on(const MarkovRandomField& model, std::span<const int> nodes,
                              std::span<const int> states);

}  // namespace mrfl
