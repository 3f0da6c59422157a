#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mrfl/sample_set.hpp"

namespace mrfl {

// Empirical law of a SampleSet. Holds a reference to the samples, which must
// outlive it. Every probability is an exact integer count divided once.
// Rows with an erased cell among the queried nodes are skipped
// (complete-case), so on erased data probabilities are relative to the
// number of rows that observe every queried node.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(const SampleSet& samples) : samples_(&samples) {}

  const SampleSet& samples() const { return *samples_; }

  // Counts of every joint state of `nodes`, row-major in the given order.
  // Returns the number of contributing rows through `observed`.
  std::vector<std::uint64_t> counts(std::span<const int> nodes, std::uint64_t* observed) const;

 private:
  const SampleSet* samples_;
};

// Pr-hat(X_T = x_T).
double empirical_prob(const EmpiricalDistribution& emp, std::span<const int> T,
                      std::span<const int> x_T);

struct NuEstimate {
  double value = 0.0;
  std::uint64_t effective_m = 0;
};

// The plug-in estimate of nu_{u,I|S}. Conditioning configurations x_S that
// never occur contribute nothing.
double nu_hat(const EmpiricalDistribution& emp, int u, std::span<const int> I,
              std::span<const int> S);

// nu_hat restricted to the rows that observe all of {u} u I u S. Throws
// InsufficientCoverage when no row does.
NuEstimate nu_hat_erased(const EmpiricalDistribution& emp, int u, std::span<const int> I,
                         std::span<const int> S);

// Same estimator on an arbitrary nonnegative weight table laid out as
// (s_configs x k_u x k_I), row-major. Used to study the estimator on
// perturbed probability tables.
double nu_from_table(std::span<const double> table, std::size_t s_configs, std::size_t ku,
                     std::size_t kI);

// Produces fresh full samples one at a time.
using SampleSource = std::function<void(std::span<int> row)>;

// Grants C-bounded queries: each query reveals the states of at most
// `capacity` chosen nodes of one fresh sample. Not thread-safe.
class QueryOracle {
 public:
  QueryOracle(int num_nodes, std::vector<int> arities, std::size_t capacity, SampleSource source);

  // Draws one fresh sample and writes the states of `nodes` into `out`.
  // Throws QueryCapacityExceeded if too many nodes are requested.
  void query(std::span<const int> nodes, std::span<int> out);

  int num_nodes() const { return num_nodes_; }
  const std::vector<int>& arities() const { return arities_; }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t consumed() const { return consumed_; }
  std::size_t max_query_size() const { return max_query_size_; }

 private:
  int num_nodes_;
  std::vector<int> arities_;
  std::size_t capacity_;
  SampleSource source_;
  std::vector<int> scratch_;
  std::uint64_t consumed_ = 0;
  std::size_t max_query_size_ = 0;
};

// Backs a QueryOracle with a finite SampleSet, consumed front to back.
// Throws QueryCapacityExceeded once the rows run out.
SampleSource sample_set_source(const SampleSet& samples);

// nu_hat over a batch of m_batch fresh samples, each obtained by one bounded
// query on {u} u I u S.
double nu_hat_queried(QueryOracle& oracle, int u, std::span<const int> I, std::span<const int> S,
                      std::size_t m_batch);

// Samples sufficient for all nu-hat estimates with |S| <= ell to be
// eps-accurate simultaneously with probability 1 - omega. Astronomical for
// realistic inputs; may return +inf.
double required_samples_full(double ell, double eps, double omega, int n, int K, int r,
                             double delta);
// log10 of the same bound, computed in log space so it stays finite.
double required_samples_full_log10(double ell, double eps, double omega, int n, int K, int r,
                                   double delta);

// Sample bound for the erasure setting with reveal probability p:
// N (L log n + log L + log(2N/omega)) / p^2 with
// N = 60 K^{2L} / (tau^2 delta^{2L}) (log(2/omega) + log(L+r) + (L+r) log(nK) + log 2).
double required_samples_erased(double L, double tau, double omega, int n, int K, int r,
                               double delta, double reveal_prob);
double required_samples_erased_log10(double L, double tau, double omega, int n, int K, int r,
                                     double delta, double reveal_prob);

// Line-oriented audit record: "nu u=<u> I=<a,b> S=<c,d> value=<v> m=<m>".
void write_audit(std::ostream& out, int u, std::span<const int> I, std::span<const int> S,
                 const NuEstimate& est);

}  // namespace mrfl
