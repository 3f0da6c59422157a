#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "mrfl/inference.hpp"
#include "mrfl/model.hpp"
#include "mrfl/rng.hpp"

namespace mrfl {

// The guessing game at node u: Alice draws X and X' independently from the
// model, a uniform state R of u, and a uniform set I of s = min(r-1, d_u)
// neighbors of u. Bob sees (I, X_I, R), wagers w, and receives
//   w * 1{X_u = R} - w * 1{X'_u = R}.
// This module implements Bob's explicit strategy and the exact and
// Monte-Carlo payoff computations used to check the lower bounds.

struct GameRound {
  int u = 0;
  std::vector<int> revealed;         // I
  std::vector<int> revealed_states;  // X_I
  int challenge = 0;                 // R
  double wager = 0.0;
  double payoff = 0.0;
};

// Size of the revealed set for node u: min(r-1, d_u).
int revealed_size(const MarkovRandomField& model, const CliqueGraph& graph, int u);

// Bob's potential estimate
//   Phi(R, I, x_I) = sum over stored hyperedges {u} u J with J within I of
//                    C(u,|J|,s) * theta(R, x_J),
// where C(u,l,s) = binom(d_u, s) / binom(d_u - l, s - l) inverts the chance
// that a fixed l-set of neighbors lands in I. The unary term (J empty) has
// weight 1. `states` is parallel to `I`, and I must lie in the neighborhood.
double bob_phi(const MarkovRandomField& model, const CliqueGraph& graph, int u, int R,
               std::span<const int> I, std::span<const int> states);

// w = Phi(R) - sum_{B != R} Phi(B).
double bob_wager(const MarkovRandomField& model, const CliqueGraph& graph, int u, int R,
                 std::span<const int> I, std::span<const int> states);

// gamma * K * binom(D, min(D, r-1)).
double wager_cap(const MarkovRandomField& model, const DerivedConstants& constants);

// E[Delta] by exact summation over X, R and I (X' enters through Pr(X_u = R)).
double expected_payoff_exact(const MarkovRandomField& model, const JointTable& joint, int u);
double expected_payoff_exact(const MarkovRandomField& model, int u);

struct MonteCarloPayoff {
  double mean = 0.0;
  double standard_error = 0.0;
  std::uint64_t rounds = 0;
  double max_abs_wager = 0.0;
};

// Plays `rounds` independent rounds with X, X' drawn exactly from the table.
MonteCarloPayoff expected_payoff_mc(const MarkovRandomField& model, const JointTable& joint, int u,
                                    std::uint64_t rounds, std::uint64_t seed);
MonteCarloPayoff expected_payoff_mc(const MarkovRandomField& model, int u, std::uint64_t rounds,
                                    std::uint64_t seed);

// One round, for inspection and the CLI.
GameRound play_round(const MarkovRandomField& model, const CliqueGraph& graph,
                     const JointTable& joint, int u, Rng& rng);

// 4 alpha^2 delta^{r-1} / (r^{2r} e^{2 gamma}).
double payoff_lower_bound(const DerivedConstants& constants, int r, double alpha);

// True iff u lies in a maximal hyperedge whose tensor has an entry of
// magnitude >= alpha.
bool has_nonvanishing_maximal_hyperedge(const MarkovRandomField& model, int u, double alpha);
// True iff every maximal hyperedge containing u is alpha-nonvanishing (and
// there is at least one).
bool all_maximal_hyperedges_nonvanishing(const MarkovRandomField& model, int u, double alpha);

// Every link of the chain from the game payoff to mutual information at u,
// evaluated exactly.
struct PayoffChain {
  int u = 0;
  double expected_payoff = 0.0;        // E[Delta] under Bob's strategy
  double wager_cap = 0.0;              // gamma K binom(D, min(D, r-1))
  double mean_deviation = 0.0;         // E_{I,X_I,R} |Pr(X_u=R|X_I) - Pr(X_u=R)|
  bool payoff_upper_ok = true;         // E[Delta] <= cap * mean_deviation
  bool per_set_info_ok = true;         // sqrt(I(X_u;X_I)/2) >= K^{-r} E_{X_I,R}|...| for every I
  double mean_root_info = 0.0;         // E_I sqrt(I(X_u;X_I)/2)
  double mean_nu = 0.0;                // E_I nu_{u,I|0}
  bool pinsker_ok = true;              // mean_root_info >= mean_nu
  double nu_floor = 0.0;               // C(gamma, K, alpha); applies only when d_u >= 1
  bool nu_floor_applies = false;
  bool nu_floor_ok = true;             // mean_nu >= nu_floor
  double slack = 0.0;                  // cap * mean_deviation - E[Delta]

  bool holds() const { return payoff_upper_ok && per_set_info_ok && pinsker_ok && nu_floor_ok; }
};

PayoffChain payoff_upper_bound_check(const MarkovRandomField& model, const JointTable& joint, int u,
                                     double alpha);

// Largest |E_I[w | X, R] - (E_{u,R} - sum_{B != R} E_{u,B})| over every
// configuration X and state R.
double max_unbiasedness_gap(const MarkovRandomField& model, int u);

struct EnergyMoments {
  std::vector<double> mean;                 // E[E_{u,R}]
  std::vector<std::vector<double>> cov;     // Cov(E_{u,R}, E_{u,B})
};

// Moments of the energy vector at u under the model law.
EnergyMoments energy_moments(const MarkovRandomField& model, const JointTable& joint, int u);

// sum_R sum_{B != R} Var[a - b] with a - b = (E^Y_R - E^Y_B) + (E^Z_B - E^Z_R),
// Y and Z independent copies, from the moments.
double pair_variance_sum(const EnergyMoments& moments);
// 4 k_u sum_R Var[E_{u,R}].
double scaled_energy_variance(const EnergyMoments& moments);

// E_{Y,Z}[ sum_R sum_{B != R} (a - b)(e^a - e^b) ], a = E^Y_R + E^Z_B,
// b = E^Y_B + E^Z_R, by enumeration over independent pairs.
double quantitative_sum_exact(const MarkovRandomField& model, const JointTable& joint, int u);

// alpha^2 delta^{r-1} / (2 r^{2r}).
double energy_variance_floor(const DerivedConstants& constants, int r, double alpha);

// Exhaustive check that E_I[nu_{u,I|S}] >= C' for every u whose maximal
// hyperedges are all alpha-nonvanishing and every S with |S| <= max_s that
// misses part of the neighborhood of u. I ranges uniformly over subsets of
// the uncovered neighbors of size min(r-1, |N(u) \ S|).
struct ConditionalFloorReport {
  std::uint64_t checks = 0;
  std::uint64_t violations = 0;
  std::uint64_t pinsker_violations = 0;  // E_I sqrt(I/2) < E_I nu
  double c_prime = 0.0;
  double min_mean_nu = 0.0;
  bool passed() const { return violations == 0 && pinsker_violations == 0; }
};

ConditionalFloorReport check_conditional_floor(const MarkovRandomField& model,
                                               const JointTable& joint, double alpha, int max_s);

nlohmann::json to_json(const PayoffChain& chain);

}  // namespace mrfl
