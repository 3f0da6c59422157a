#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "mrfl/errors.hpp"
#include "mrfl/estimation.hpp"
#include "mrfl/inference.hpp"

using namespace mrfl;

namespace {

constexpr double kIsingNu = 0.11552928931500246;

SampleSet from_rows(const std::vector<int>& arities, const std::vector<std::vector<int>>& rows) {
  SampleSet s(arities, rows.size(), 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t v = 0; v < arities.size(); ++v) {
      s.set(i, static_cast<int>(v), static_cast<SampleSet::Cell>(rows[i][v]));
    }
  }
  return s;
}

}  // namespace

TEST_CASE("empirical_prob examples") {
  const SampleSet same = from_rows({2, 3}, {{1, 2}, {1, 2}, {1, 2}, {1, 2}});
  const EmpiricalDistribution emp(same);
  const std::vector<int> T{0, 1};
  const std::vector<int> hit{1, 2};
  const std::vector<int> miss{0, 2};
  CHECK(empirical_prob(emp, T, hit) == 1.0);
  CHECK(empirical_prob(emp, T, miss) == 0.0);

  const SampleSet half = from_rows({2, 2}, {{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  const EmpiricalDistribution e2(half);
  const std::vector<int> node0{0};
  const std::vector<int> s0{0};
  const std::vector<int> s1{1};
  CHECK(empirical_prob(e2, node0, s0) == 0.5);
  CHECK(empirical_prob(e2, node0, s1) == 0.5);

  const SampleSet sampled = sample_exact(exact_joint(fixtures::random_model(1, 3, 3, 2, 4)), 997, 3);
  const EmpiricalDistribution e3(sampled);
  const std::vector<int> pair{0, 2};
  double total = 0.0;
  for (int a = 0; a < sampled.arities()[0]; ++a) {
    for (int b = 0; b < sampled.arities()[2]; ++b) {
      const std::vector<int> x{a, b};
      total += empirical_prob(e3, pair, x);
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(empirical_prob(e3, {}, {}), std::invalid_argument);
}

TEST_CASE("nu_hat examples") {
  SUBCASE("hand-built product table gives 0") {
    // Every (a, b) pair once: X_0 and X_1 independent in the empirical law.
    const SampleSet s = from_rows({2, 3}, {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}});
    const EmpiricalDistribution emp(s);
    const std::vector<int> I{1};
    CHECK(nu_hat(emp, 0, I, {}) == 0.0);
  }
  SUBCASE("single sample gives 0") {
    const SampleSet s = from_rows({2, 2, 2}, {{1, 0, 1}});
    const EmpiricalDistribution emp(s);
    const std::vector<int> I{1};
    const std::vector<int> S{2};
    CHECK(nu_hat(emp, 0, I, S) == 0.0);
    CHECK(nu_hat(emp, 0, I, {}) == 0.0);
  }
  SUBCASE("10^5 Ising samples land near the exact value") {
    const SampleSet s = sample_exact(exact_joint(fixtures::ising_pair(0.5)), 100000, 5);
    const EmpiricalDistribution emp(s);
    const std::vector<int> I{1};
    CHECK(std::abs(nu_hat(emp, 0, I, {}) - kIsingNu) < 0.01);
  }
  SUBCASE("argument checks") {
    const SampleSet s = from_rows({2, 2}, {{0, 0}});
    const EmpiricalDistribution emp(s);
    const std::vector<int> same{0};
    CHECK_THROWS_AS(nu_hat(emp, 0, same, {}), std::invalid_argument);
    const std::vector<int> far{5};
    CHECK_THROWS_AS(nu_hat(emp, 0, far, {}), std::out_of_range);
  }
}

TEST_CASE("nu_hat equals the table formula on the empirical law") {
  const MarkovRandomField m = fixtures::random_model(12, 5, 3, 3, 6);
  const SampleSet s = sample_exact(exact_joint(m), 3000, 8);
  const EmpiricalDistribution emp(s);
  const std::vector<int> I{1, 4};
  const std::vector<int> S{0, 3};
  // Table ordered (S, u, I) with u = 2.
  const std::vector<int> order{0, 3, 2, 1, 4};
  std::uint64_t observed = 0;
  const auto counts = emp.counts(order, &observed);
  std::vector<double> table(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) table[i] = static_cast<double>(counts[i]) / 3000.0;
  const std::size_t s_cfg = static_cast<std::size_t>(s.arities()[0] * s.arities()[3]);
  const std::size_t ku = static_cast<std::size_t>(s.arities()[2]);
  const std::size_t kI = static_cast<std::size_t>(s.arities()[1] * s.arities()[4]);
  CHECK(nu_hat(emp, 2, I, S) == doctest::Approx(nu_from_table(table, s_cfg, ku, kI)).epsilon(1e-12));
}

TEST_CASE("nu_hat agrees with exact nu when fed an exact table") {
  const MarkovRandomField m = fixtures::random_model(5, 4, 2, 2, 5);
  const JointTable j = exact_joint(m);
  const std::vector<int> order{3, 0, 1};  // S = {3}, u = 0, I = {1}
  const MarginalTable t = j.marginal(order);
  const std::vector<int> I{1};
  const std::vector<int> S{3};
  CHECK(nu_from_table(t.probs, 2, 2, 2) == doctest::Approx(exact_nu(j, 0, I, S)).epsilon(1e-12));
}

TEST_CASE("nu_hat converges at rate m^-1/2") {
  const MarkovRandomField m = fixtures::ising_pair(0.5);
  const JointTable j = exact_joint(m);
  const std::vector<int> I{1};
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t size : {1000u, 4000u, 16000u, 64000u}) {
    double err = 0.0;
    const int reps = 40;
    for (int rep = 0; rep < reps; ++rep) {
      const SampleSet s = sample_exact(j, size, 1000 + static_cast<std::uint64_t>(rep) * 7919 + size);
      const EmpiricalDistribution emp(s);
      err += std::abs(nu_hat(emp, 0, I, {}) - kIsingNu);
    }
    xs.push_back(std::log(static_cast<double>(size)));
    ys.push_back(std::log(err / reps));
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / static_cast<double>(xs.size());
    my += ys[i] / static_cast<double>(xs.size());
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = num / den;
  CHECK(slope > -0.6);
  CHECK(slope < -0.4);
}

TEST_CASE("nu_hat_erased examples") {
  const JointTable j = exact_joint(fixtures::random_model(3, 5, 2, 2, 6));
  const SampleSet full = sample_exact(j, 10000, 2);
  const EmpiricalDistribution emp_full(full);
  const std::vector<int> I{1};
  const std::vector<int> S{2, 3};

  SUBCASE("reveal_prob 1 matches nu_hat") {
    const SampleSet same = erase(full, 1.0, 1);
    const EmpiricalDistribution emp(same);
    const NuEstimate e = nu_hat_erased(emp, 0, I, S);
    CHECK(e.effective_m == 10000);
    CHECK(e.value == nu_hat(emp_full, 0, I, S));
  }
  SUBCASE("u fully erased") {
    SampleSet holes = full;
    for (std::size_t i = 0; i < holes.rows(); ++i) holes.set(i, 0, SampleSet::kErased);
    const EmpiricalDistribution emp(holes);
    CHECK_THROWS_AS(nu_hat_erased(emp, 0, I, S), InsufficientCoverage);
  }
  SUBCASE("complete-case count follows p^4") {
    const SampleSet e = erase(full, 0.8, 3);
    const EmpiricalDistribution emp(e);
    const NuEstimate est = nu_hat_erased(emp, 0, I, S);
    const double p = std::pow(0.8, 4);
    const double sd = std::sqrt(10000.0 * p * (1.0 - p));
    CHECK(std::abs(static_cast<double>(est.effective_m) - 10000.0 * p) <= 3.0 * sd);
  }
}

TEST_CASE("query oracle") {
  const JointTable j = exact_joint(fixtures::ising_pair(0.5));
  const SampleSet pool = sample_exact(j, 30000, 4);
  QueryOracle oracle(2, {2, 2}, 2, sample_set_source(pool));
  const std::vector<int> I{1};

  SUBCASE("fresh batches per call") {
    nu_hat_queried(oracle, 0, I, {}, 1000);
    CHECK(oracle.consumed() == 1000);
    nu_hat_queried(oracle, 0, I, {}, 1000);
    CHECK(oracle.consumed() == 2000);
    CHECK(oracle.max_query_size() == 2);
  }
  SUBCASE("capacity is enforced") {
    QueryOracle small(2, {2, 2}, 1, sample_set_source(pool));
    CHECK_THROWS_AS(nu_hat_queried(small, 0, I, {}, 10), QueryCapacityExceeded);
    CHECK_THROWS_AS(nu_hat_queried(oracle, 0, I, {}, 0), std::invalid_argument);
  }
  SUBCASE("a source that runs dry is reported") {
    CHECK_THROWS_AS(nu_hat_queried(oracle, 0, I, {}, 40000), QueryCapacityExceeded);
  }
  SUBCASE("batch matches nu_hat over the same rows") {
    const double q = nu_hat_queried(oracle, 0, I, {}, 10000);
    SampleSet head({2, 2}, 10000, 0);
    for (std::size_t i = 0; i < 10000; ++i) {
      head.set(i, 0, pool.at(i, 0));
      head.set(i, 1, pool.at(i, 1));
    }
    const EmpiricalDistribution emp(head);
    CHECK(q == nu_hat(emp, 0, I, {}));
  }
}

TEST_CASE("queried estimate on an independent pair is near 0") {
  const JointTable j = exact_joint(fixtures::zero_model(2));
  const SampleSet pool = sample_exact(j, 10000, 6);
  QueryOracle oracle(2, {2, 2}, 2, sample_set_source(pool));
  const std::vector<int> I{1};
  CHECK(nu_hat_queried(oracle, 0, I, {}, 10000) < 0.02);
}

TEST_CASE("required_samples_full") {
  CHECK(required_samples_full(2, 0.1, 0.01, 12, 2, 2, 0.18) == 443457409.0);
  CHECK(required_samples_full_log10(2, 0.1, 0.01, 12, 2, 2, 0.18) ==
        doctest::Approx(std::log10(443457408.529)).epsilon(1e-9));
  double prev = 0.0;
  for (double ell = 1; ell <= 6; ++ell) {
    const double v = required_samples_full(ell, 0.1, 0.01, 12, 2, 2, 0.18);
    CHECK(v >= prev);
    prev = v;
  }
  prev = 0.0;
  for (double eps : {1.0, 0.5, 0.1, 0.05}) {
    const double v = required_samples_full(2, eps, 0.01, 12, 2, 2, 0.18);
    CHECK(v >= prev);
    prev = v;
  }
  // Large eps collapses to a handful of samples.
  CHECK(required_samples_full(2, 1e6, 0.01, 12, 2, 2, 0.18) == 1.0);
  CHECK(std::isinf(required_samples_full(1e6, 0.1, 0.01, 12, 2, 2, 0.18)));
  CHECK_THROWS_AS(required_samples_full(2, 0.0, 0.01, 12, 2, 2, 0.18), std::invalid_argument);
}

TEST_CASE("required_samples_erased") {
  CHECK(required_samples_erased(3, 0.1, 0.01, 12, 2, 2, 0.18, 0.9) ==
        doctest::Approx(13148023956479.0).epsilon(1e-12));
  const double lp1 = required_samples_erased_log10(3, 0.1, 0.01, 12, 2, 2, 0.18, 1.0);
  const double lhalf = required_samples_erased_log10(3, 0.1, 0.01, 12, 2, 2, 0.18, 0.5);
  CHECK(lhalf - lp1 == doctest::Approx(std::log10(4.0)).epsilon(1e-12));
  CHECK(lp1 > required_samples_full_log10(3, 0.05, 0.01, 12, 2, 2, 0.18));
  CHECK_THROWS_AS(required_samples_erased(3, 0.1, 0.01, 12, 2, 2, 0.18, 0.0), std::invalid_argument);
}

TEST_CASE("audit line format") {
  std::ostringstream out;
  const std::vector<int> I{1, 2};
  const std::vector<int> S{4};
  write_audit(out, 0, I, S, {0.25, 17});
  CHECK(out.str() == "nu u=0 I=1,2 S=4 value=0.25 m=17\n");
}
