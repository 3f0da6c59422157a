#include <bit>
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "mrfl/errors.hpp"
#include "mrfl/inference.hpp"
#include "mrfl/sample_set.hpp"

using namespace mrfl;

namespace {

const double kIsingJoint[4] = {0.3655292893150025, 0.13447071068499758, 0.13447071068499758,
                               0.3655292893150025};
constexpr double kIsingMI = 0.11094407167172712;
constexpr double kIsingNu = 0.11552928931500246;

// Every (I, S) with |I| <= max_i and |S| <= max_s drawn from the nodes other than u.
template <class Fn>
void for_each_query(int n, int u, int max_i, int max_s, Fn&& fn) {
  const std::uint32_t limit = 1u << n;
  for (std::uint32_t imask = 1; imask < limit; ++imask) {
    if (imask & (1u << u) || std::popcount(imask) > max_i) continue;
    for (std::uint32_t smask = 0; smask < limit; ++smask) {
      if (smask & (imask | (1u << u)) || std::popcount(smask) > max_s) continue;
      std::vector<int> I;
      std::vector<int> S;
      for (int v = 0; v < n; ++v) {
        if (imask & (1u << v)) I.push_back(v);
        if (smask & (1u << v)) S.push_back(v);
      }
      fn(I, S);
    }
  }
}

}  // namespace

TEST_CASE("exact_joint examples") {
  SUBCASE("single free node") {
    const JointTable j = exact_joint(fixtures::zero_model(1));
    CHECK(j.probs()[0] == doctest::Approx(0.5));
    CHECK(j.log_partition() == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("Ising pair") {
    const JointTable j = exact_joint(fixtures::ising_pair(0.5));
    for (int i = 0; i < 4; ++i) CHECK(std::abs(j.probs()[static_cast<std::size_t>(i)] - kIsingJoint[i]) <= 1e-12);
    CHECK(j.log_partition() == doctest::Approx(std::log(2 * std::exp(0.5) + 2 * std::exp(-0.5))));
  }
  SUBCASE("independent components multiply") {
    const MarkovRandomField m({2, 2, 2, 2}, 2, {fixtures::ising_tensor(0, 1, 0.5), fixtures::ising_tensor(2, 3, 0.2)});
    const JointTable j = exact_joint(m);
    const std::vector<int> a{0, 1};
    const std::vector<int> b{2, 3};
    const MarginalTable ma = j.marginal(a);
    const MarginalTable mb = j.marginal(b);
    std::vector<int> x(4);
    for (std::size_t idx = 0; idx < j.size(); ++idx) {
      j.decode(idx, x);
      const double expect = ma.probs[static_cast<std::size_t>(x[0] * 2 + x[1])] *
                            mb.probs[static_cast<std::size_t>(x[2] * 2 + x[3])];
      CHECK(j.probs()[idx] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  SUBCASE("capacity guard") {
    CHECK_THROWS_AS(exact_joint(fixtures::zero_model(25)), CapacityError);
    CHECK_THROWS_AS(exact_joint(fixtures::zero_model(4), 15), CapacityError);
  }
}

TEST_CASE("joint table invariants on random models") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MarkovRandomField m = fixtures::random_model(seed, 5, 3, 3, 6);
    const JointTable j = exact_joint(m);
    double total = 0.0;
    std::vector<int> x(5);
    for (std::size_t idx = 0; idx < j.size(); ++idx) {
      total += j.probs()[idx];
      CHECK(j.probs()[idx] > 0.0);
      j.decode(idx, x);
      CHECK(j.index_of(x) == idx);
      const double direct = std::exp(m.log_weight(x) - j.log_partition());
      CHECK(j.probs()[idx] == doctest::Approx(direct).epsilon(1e-10));
      // Table conditionals agree with the local formula.
      const auto p = conditional_distribution(m, 2, x);
      double row = 0.0;
      std::vector<int> y = x;
      for (int s = 0; s < m.arity(2); ++s) {
        y[2] = s;
        row += j.prob(y);
      }
      CHECK(std::abs(j.prob(x) / row - p[static_cast<std::size_t>(x[2])]) <= 1e-9);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("marginal uses the requested node order") {
  const MarkovRandomField m({2, 3}, 2, {CliqueTensor({0, 1}, {2, 3}, {0.1, 0.2, -0.3, 0.4, -0.5, 0.1})});
  const JointTable j = exact_joint(m);
  const std::vector<int> rev{1, 0};
  const MarginalTable t = j.marginal(rev);
  CHECK(t.dims == std::vector<int>{3, 2});
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 3; ++b) {
      const std::vector<int> x{a, b};
      CHECK(t.probs[static_cast<std::size_t>(b * 2 + a)] == doctest::Approx(j.prob(x)));
    }
  }
}

TEST_CASE("exact_conditional_mi examples") {
  const JointTable free_pair = exact_joint(fixtures::zero_model(2));
  const std::vector<int> one{1};
  CHECK(std::abs(exact_conditional_mi(free_pair, 0, one, {})) <= 1e-12);
  const JointTable ising = exact_joint(fixtures::ising_pair(0.5));
  CHECK(exact_conditional_mi(ising, 0, one, {}) == doctest::Approx(kIsingMI).epsilon(1e-12));
  const std::vector<int> zero{0};
  CHECK(exact_conditional_mi(ising, 1, zero, {}) == doctest::Approx(kIsingMI).epsilon(1e-12));
  const JointTable path = exact_joint(fixtures::ising_path(0.8));
  const std::vector<int> w{2};
  CHECK(std::abs(exact_conditional_mi(path, 0, w, one)) <= 1e-12);
  CHECK(exact_conditional_mi(path, 0, w, {}) > 1e-4);
  CHECK_THROWS_AS(exact_conditional_mi(path, 0, one, one), std::invalid_argument);
}

TEST_CASE("exact_nu examples") {
  const std::vector<int> one{1};
  CHECK(exact_nu(exact_joint(fixtures::zero_model(2)), 0, one, {}) == doctest::Approx(0.0));
  const JointTable ising = exact_joint(fixtures::ising_pair(0.5));
  CHECK(exact_nu(ising, 0, one, {}) == doctest::Approx(kIsingNu).epsilon(1e-12));
  CHECK(std::sqrt(kIsingMI / 2.0) == doctest::Approx(0.2355250216768137).epsilon(1e-12));
}

TEST_CASE("Pinsker chain and chain rule on random models") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int n = 3 + static_cast<int>(seed % 3);
    const MarkovRandomField m = fixtures::random_model(seed, n, 3, 3, n + 2);
    const JointTable j = exact_joint(m);
    for (int u = 0; u < n; ++u) {
      for_each_query(n, u, 2, 2, [&](const std::vector<int>& I, const std::vector<int>& S) {
        const double mi = exact_conditional_mi(j, u, I, S);
        const double nu = exact_nu(j, u, I, S);
        CHECK(mi >= -1e-12);
        CHECK(nu >= 0.0);
        CHECK(nu <= 1.0);
        CHECK(std::sqrt(std::max(mi, 0.0) / 2.0) + 1e-12 >= nu);
        std::vector<int> SI = S;
        SI.insert(SI.end(), I.begin(), I.end());
        std::sort(SI.begin(), SI.end());
        const double lhs = exact_conditional_mi(j, u, SI, {}) - (S.empty() ? 0.0 : exact_conditional_mi(j, u, S, {}));
        CHECK(std::abs(lhs - mi) <= 1e-9);
      });
    }
  }
}

TEST_CASE("exact_entropy bounds") {
  const JointTable free_pair = exact_joint(fixtures::zero_model(2, 3));
  CHECK(exact_entropy(free_pair, 0) == doctest::Approx(std::log(3.0)));
  const JointTable ising = exact_joint(fixtures::ising_pair(0.5));
  CHECK(exact_entropy(ising, 0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("sample_exact") {
  const JointTable ising = exact_joint(fixtures::ising_pair(0.5));
  CHECK_THROWS_AS(sample_exact(ising, 0, 1), std::invalid_argument);

  SUBCASE("determinism") {
    CHECK(sample_exact(ising, 1000, 42) == sample_exact(ising, 1000, 42));
    CHECK_FALSE(sample_exact(ising, 1000, 42) == sample_exact(ising, 1000, 43));
  }
  SUBCASE("near-deterministic table gives constant rows") {
    const MarkovRandomField sharp({2, 2}, 2, {fixtures::ising_tensor(0, 1, 40.0), CliqueTensor({0}, {2}, {40.0, -40.0})});
    const SampleSet s = sample_exact(exact_joint(sharp), 500, 3);
    for (std::size_t i = 0; i < s.rows(); ++i) {
      CHECK(s.at(i, 0) == 0);
      CHECK(s.at(i, 1) == 0);
    }
  }
  SUBCASE("chi-square sanity at m = 10^6") {
    const std::size_t m = 1000000;
    const SampleSet s = sample_exact(ising, m, 7);
    double counts[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < m; ++i) counts[s.at(i, 0) * 2 + s.at(i, 1)] += 1.0;
    double chi2 = 0.0;
    for (int c = 0; c < 4; ++c) {
      const double e = kIsingJoint[c] * static_cast<double>(m);
      chi2 += (counts[c] - e) * (counts[c] - e) / e;
    }
    CHECK(chi2 < 16.27);  // 3 degrees of freedom, p = 0.001
  }
}

TEST_CASE("gibbs_sample") {
  const MarkovRandomField ising = fixtures::ising_pair(0.5);
  CHECK_THROWS_AS(gibbs_sample(ising, 10, 0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(gibbs_sample(ising, 10, 1, 0, 1), std::invalid_argument);
  CHECK(gibbs_sample(ising, 200, 10, 2, 5) == gibbs_sample(ising, 200, 10, 2, 5));

  SUBCASE("agreement frequency of the Ising pair") {
    const std::size_t m = 100000;
    const SampleSet s = gibbs_sample(ising, m, 100, 5, 11);
    double agree = 0.0;
    for (std::size_t i = 0; i < m; ++i) agree += s.at(i, 0) == s.at(i, 1) ? 1.0 : 0.0;
    CHECK(std::abs(agree / static_cast<double>(m) - 0.731058578630005) < 0.01);
  }
  SUBCASE("independent nodes match their marginals") {
    const MarkovRandomField m({3, 2}, 2, {CliqueTensor({0}, {3}, {0.6, -0.1, -0.5}), CliqueTensor({1}, {2}, {0.3, -0.3})});
    const JointTable j = exact_joint(m);
    const std::vector<int> zero{0};
    const MarginalTable m0 = j.marginal(zero);
    const std::size_t rows = 100000;
    const SampleSet s = gibbs_sample(m, rows, 50, 1, 13);
    for (int state = 0; state < 3; ++state) {
      double hits = 0.0;
      for (std::size_t i = 0; i < rows; ++i) hits += s.at(i, 0) == state ? 1.0 : 0.0;
      const double p = m0.probs[static_cast<std::size_t>(state)];
      const double sd = std::sqrt(p * (1.0 - p) / static_cast<double>(rows));
      CHECK(std::abs(hits / static_cast<double>(rows) - p) <= 3.0 * sd);
    }
  }
}

TEST_CASE("erase") {
  const JointTable ising = exact_joint(fixtures::ising_pair(0.5));
  const SampleSet s = sample_exact(ising, 1000, 1);
  CHECK(erase(s, 1.0, 9).cells() == s.cells());
  const SampleSet gone = erase(s, 0.0, 9);
  CHECK(gone.erased_count() == 2000);
  CHECK_THROWS_AS(erase(s, 1.5, 9), std::invalid_argument);

  const SampleSet big = sample_exact(ising, 100000, 2);
  const SampleSet kept = erase(big, 0.8, 4);
  const double frac = 1.0 - static_cast<double>(kept.erased_count()) / 200000.0;
  CHECK(std::abs(frac - 0.8) < 0.005);
  for (std::size_t i = 0; i < kept.rows(); ++i) {
    for (int v = 0; v < 2; ++v) {
      if (kept.at(i, v) != SampleSet::kErased) CHECK(kept.at(i, v) == big.at(i, v));
    }
  }
  CHECK(erase(big, 0.8, 4) == kept);
}

TEST_CASE("sample file round trip with erasures") {
  const MarkovRandomField m({2, 3, 2}, 2, {CliqueTensor({0, 1}, {2, 3}, {0.1, 0.2, -0.3, -0.1, -0.2, 0.3})});
  const SampleSet s = erase(sample_exact(exact_joint(m), 50, 5), 0.7, 6);
  std::stringstream buf;
  write_samples(s, buf);
  const std::string text = buf.str();
  CHECK(text.rfind("n=3 arities=2,3,2 seed=", 0) == 0);
  CHECK(text.find('?') != std::string::npos);
  // States are written 1-based, so data rows never contain a 0.
  CHECK(text.substr(text.find('\n')).find('0') == std::string::npos);
  const SampleSet back = read_samples(buf);
  CHECK(back == s);

  std::stringstream bad("n=2 arities=2,2 seed=0\n1,3\n");
  CHECK_THROWS(read_samples(bad));
}
