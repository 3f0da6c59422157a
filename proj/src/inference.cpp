#include "mrfl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mrfl/errors.hpp"
#include "mrfl/rng.hpp"

namespace mrfl {

namespace {

void check_disjoint(int n, int u, std::span<const int> I, std::span<const int> S) {
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  auto mark = [&](int v) {
    if (v < 0 || v >= n) throw std::out_of_range("node out of range");
    if (seen[static_cast<std::size_t>(v)]) {
      throw std::invalid_argument("u, I and S must be pairwise disjoint");
    }
    seen[static_cast<std::size_t>(v)] = 1;
  };
  mark(u);
  for (int v : I) mark(v);
  for (int v : S) mark(v);
}

// Marginal over (S..., u, I...) viewed as a (s_configs x k_u x k_I) array.
struct SplitTable {
  MarginalTable table;
  std::size_t s_configs = 1;
  std::size_t ku = 1;
  std::size_t kI = 1;

  double at(std::size_t s, std::size_t r, std::size_t g) const {
    return table.probs[(s * ku + r) * kI + g];
  }
};

SplitTable split_marginal(const JointTable& joint, int u, std::span<const int> I,
                          std::span<const int> S) {
  check_disjoint(joint.num_nodes(), u, I, S);
  std::vector<int> nodes(S.begin(), S.end());
  nodes.push_back(u);
  nodes.insert(nodes.end(), I.begin(), I.end());
  SplitTable out;
  out.table = joint.marginal(nodes);
  for (int v : S) out.s_configs *= static_cast<std::size_t>(joint.arities()[static_cast<std::size_t>(v)]);
  out.ku = static_cast<std::size_t>(joint.arities()[static_cast<std::size_t>(u)]);
  for (int v : I) out.kI *= static_cast<std::size_t>(joint.arities()[static_cast<std::size_t>(v)]);
  return out;
}

}  // namespace

JointTable::JointTable(std::vector<int> arities, std::vector<double> probs, double log_partition)
    : arities_(std::move(arities)), probs_(std::move(probs)), log_partition_(log_partition) {
  strides_.assign(arities_.size(), 1);
  std::size_t total = 1;
  for (std::size_t i = arities_.size(); i-- > 0;) {
    strides_[i] = total;
    total *= static_cast<std::size_t>(arities_[i]);
  }
  if (total != probs_.size()) throw std::invalid_argument("joint table: size mismatch");
}

std::size_t JointTable::index_of(std::span<const int> x) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < arities_.size(); ++i) {
    if (x[i] < 0 || x[i] >= arities_[i]) throw std::out_of_range("joint table: state out of range");
    idx += strides_[i] * static_cast<std::size_t>(x[i]);
  }
  return idx;
}

void JointTable::decode(std::size_t index, std::span<int> x) const {
  for (std::size_t i = 0; i < arities_.size(); ++i) {
    x[i] = static_cast<int>((index / strides_[i]) % static_cast<std::size_t>(arities_[i]));
  }
}

MarginalTable JointTable::marginal(std::span<const int> nodes) const {
  MarginalTable out;
  out.nodes.assign(nodes.begin(), nodes.end());
  std::size_t total = 1;
  for (int v : nodes) {
    if (v < 0 || v >= num_nodes()) throw std::out_of_range("marginal: node out of range");
    out.dims.push_back(arities_[static_cast<std::size_t>(v)]);
    total *= static_cast<std::size_t>(out.dims.back());
  }
  out.probs.assign(total, 0.0);
  for (std::size_t idx = 0; idx < probs_.size(); ++idx) {
    std::size_t m = 0;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      const auto v = static_cast<std::size_t>(nodes[a]);
      m = m * static_cast<std::size_t>(out.dims[a]) + (idx / strides_[v]) % static_cast<std::size_t>(arities_[v]);
    }
    out.probs[m] += probs_[idx];
  }
  return out;
}

JointTable exact_joint(const MarkovRandomField& model, std::size_t max_configs) {
  const std::size_t total = model.configuration_count();
  if (total > max_configs) {
    std::ostringstream msg;
    msg << "exact_joint: " << total << " configurations exceeds the limit of " << max_configs;
    throw CapacityError(msg.str());
  }
  const int n = model.num_nodes();
  std::vector<double> logw(total);
  std::vector<int> x(static_cast<std::size_t>(n), 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    logw[idx] = model.log_weight(x);
    for (int i = n - 1; i >= 0; --i) {  // odometer, last node fastest
      auto& d = x[static_cast<std::size_t>(i)];
      if (++d < model.arity(i)) break;
      d = 0;
    }
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  double z = 0.0;
  for (double& w : logw) {
    w = std::exp(w - top);
    z += w;
  }
  for (double& w : logw) w /= z;
  return JointTable(model.arities(), std::move(logw), top + std::log(z));
}

double exact_conditional_mi(const JointTable& joint, int u, std::span<const int> I,
                            std::span<const int> S) {
  const SplitTable t = split_marginal(joint, u, I, S);
  double mi = 0.0;
  std::vector<double> pr(t.ku);
  std::vector<double> pg(t.kI);
  for (std::size_t s = 0; s < t.s_configs; ++s) {
    std::fill(pr.begin(), pr.end(), 0.0);
    std::fill(pg.begin(), pg.end(), 0.0);
    double ps = 0.0;
    for (std::size_t r = 0; r < t.ku; ++r) {
      for (std::size_t g = 0; g < t.kI; ++g) {
        const double p = t.at(s, r, g);
        pr[r] += p;
        pg[g] += p;
        ps += p;
      }
    }
    for (std::size_t r = 0; r < t.ku; ++r) {
      for (std::size_t g = 0; g < t.kI; ++g) {
        const double p = t.at(s, r, g);
        if (p > 0.0) mi += p * std::log(p * ps / (pr[r] * pg[g]));
      }
    }
  }
  return std::max(mi, 0.0);
}

double exact_nu(const JointTable& joint, int u, std::span<const int> I, std::span<const int> S) {
  const SplitTable t = split_marginal(joint, u, I, S);
  double total = 0.0;
  std::vector<double> pr(t.ku);
  std::vector<double> pg(t.kI);
  for (std::size_t s = 0; s < t.s_configs; ++s) {
    std::fill(pr.begin(), pr.end(), 0.0);
    std::fill(pg.begin(), pg.end(), 0.0);
    double ps = 0.0;
    for (std::size_t r = 0; r < t.ku; ++r) {
      for (std::size_t g = 0; g < t.kI; ++g) {
        const double p = t.at(s, r, g);
        pr[r] += p;
        pg[g] += p;
        ps += p;
      }
    }
    if (ps <= 0.0) continue;
    for (std::size_t r = 0; r < t.ku; ++r) {
      for (std::size_t g = 0; g < t.kI; ++g) {
        total += std::abs(t.at(s, r, g) - pr[r] * pg[g] / ps);
      }
    }
  }
  return total / static_cast<double>(t.ku * t.kI);
}

double exact_entropy(const JointTable& joint, int u) {
  const std::vector<int> nodes{u};
  const MarginalTable m = joint.marginal(nodes);
  double h = 0.0;
  for (double p : m.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

SampleSet sample_exact(const JointTable& joint, std::size_t m, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("sample_exact: m must be >= 1");
  std::vector<double> cdf(joint.size());
  std::partial_sum(joint.probs().begin(), joint.probs().end(), cdf.begin());
  Rng rng = make_rng(seed, Stream::kSample);
  SampleSet out(joint.arities(), m, seed);
  std::vector<int> x(static_cast<std::size_t>(joint.num_nodes()));
  const double top = cdf.back();
  for (std::size_t i = 0; i < m; ++i) {
    const double u = uniform01(rng) * top;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    joint.decode(static_cast<std::size_t>(it - cdf.begin()), x);
    auto row = out.row(i);
    for (std::size_t v = 0; v < x.size(); ++v) row[v] = static_cast<SampleSet::Cell>(x[v]);
  }
  return out;
}

SampleSet gibbs_sample(const MarkovRandomField& model, std::size_t m, std::size_t burn_in,
                       std::size_t thinning, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("gibbs_sample: m must be >= 1");
  if (burn_in < 1 || thinning < 1) {
    throw std::invalid_argument("gibbs_sample: burn_in and thinning must be >= 1");
  }
  const int n = model.num_nodes();
  Rng rng = make_rng(seed, Stream::kGibbs);
  std::vector<int> x(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    x[static_cast<std::size_t>(v)] = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(model.arity(v))));
  }
  auto sweep = [&] {
    for (int v = 0; v < n; ++v) {
      const std::vector<double> p = conditional_distribution(model, v, x);
      double u = uniform01(rng);
      int s = 0;
      while (s + 1 < static_cast<int>(p.size()) && u >= p[static_cast<std::size_t>(s)]) {
        u -= p[static_cast<std::size_t>(s)];
        ++s;
      }
      x[static_cast<std::size_t>(v)] = s;
    }
  };
  for (std::size_t b = 0; b < burn_in; ++b) sweep();
  SampleSet out(model.arities(), m, seed);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < thinning; ++t) sweep();
    auto row = out.row(i);
    for (std::size_t v = 0; v < x.size(); ++v) row[v] = static_cast<SampleSet::Cell>(x[v]);
  }
  return out;
}

SampleSet erase(const SampleSet& samples, double reveal_prob, std::uint64_t seed) {
  if (!(reveal_prob >= 0.0 && reveal_prob <= 1.0)) {
    throw std::invalid_argument("erase: reveal probability must lie in [0, 1]");
  }
  Rng rng = make_rng(seed, Stream::kErase);
  SampleSet out = samples;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (int v = 0; v < out.num_nodes(); ++v) {
      if (uniform01(rng) >= reveal_prob) out.set(i, v, SampleSet::kErased);
    }
  }
  return out;
}

}  // namespace mrfl
