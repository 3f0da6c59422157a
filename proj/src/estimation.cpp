#include "mrfl/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mrfl/errors.hpp"

namespace mrfl {

namespace {

constexpr std::size_t kDenseLimit = std::size_t{1} << 16;

struct KeyLayout {
  std::vector<int> nodes;  // S..., u, I...
  std::vector<std::uint64_t> radix;
  std::uint64_t s_configs = 1;
  std::uint64_t ku = 1;
  std::uint64_t kI = 1;
};

KeyLayout make_layout(const std::vector<int>& arities, int u, std::span<const int> I,
                      std::span<const int> S) {
  const int n = static_cast<int>(arities.size());
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  KeyLayout k;
  auto add = [&](int v) {
    if (v < 0 || v >= n) throw std::out_of_range("nu_hat: node out of range");
    if (seen[static_cast<std::size_t>(v)]) {
      throw std::invalid_argument("nu_hat: u, I and S must be pairwise disjoint");
    }
    seen[static_cast<std::size_t>(v)] = 1;
    k.nodes.push_back(v);
    k.radix.push_back(static_cast<std::uint64_t>(arities[static_cast<std::size_t>(v)]));
  };
  for (int v : S) add(v);
  add(u);
  for (int v : I) add(v);

  double bits = 0.0;
  for (auto r : k.radix) bits += std::log2(static_cast<double>(r));
  if (bits > 62.0) throw std::overflow_error("nu_hat: conditioning set too large to index");
  for (int v : S) k.s_configs *= static_cast<std::uint64_t>(arities[static_cast<std::size_t>(v)]);
  k.ku = static_cast<std::uint64_t>(arities[static_cast<std::size_t>(u)]);
  for (int v : I) k.kI *= static_cast<std::uint64_t>(arities[static_cast<std::size_t>(v)]);
  return k;
}

// Sum over one conditioning configuration of |n_rg n_s - n_r n_g|, exact.
std::uint64_t group_numerator(std::span<const std::uint64_t> cell, std::uint64_t ku,
                              std::uint64_t kI, std::vector<std::uint64_t>& nr,
                              std::vector<std::uint64_t>& ng, std::uint64_t* ns_out) {
  std::fill(nr.begin(), nr.end(), 0);
  std::fill(ng.begin(), ng.end(), 0);
  std::uint64_t ns = 0;
  for (std::uint64_t r = 0; r < ku; ++r) {
    for (std::uint64_t g = 0; g < kI; ++g) {
      const std::uint64_t c = cell[r * kI + g];
      nr[r] += c;
      ng[g] += c;
      ns += c;
    }
  }
  std::uint64_t num = 0;
  for (std::uint64_t r = 0; r < ku; ++r) {
    for (std::uint64_t g = 0; g < kI; ++g) {
      const std::uint64_t a = cell[r * kI + g] * ns;
      const std::uint64_t b = nr[r] * ng[g];
      num += a > b ? a - b : b - a;
    }
  }
  *ns_out = ns;
  return num;
}

NuEstimate nu_from_keys(std::vector<std::uint64_t>& keys, const KeyLayout& layout) {
  NuEstimate est;
  est.effective_m = keys.size();
  if (keys.empty()) return est;
  const std::uint64_t block = layout.ku * layout.kI;
  const double m = static_cast<double>(keys.size());
  std::vector<std::uint64_t> nr(layout.ku);
  std::vector<std::uint64_t> ng(layout.kI);
  double total = 0.0;
  auto add_group = [&](std::span<const std::uint64_t> cell) {
    std::uint64_t ns = 0;
    const std::uint64_t num = group_numerator(cell, layout.ku, layout.kI, nr, ng, &ns);
    if (ns > 0) total += static_cast<double>(num) / (static_cast<double>(ns) * m);
  };

  const std::uint64_t space = layout.s_configs * block;
  if (space <= std::max<std::uint64_t>(kDenseLimit, 4 * keys.size())) {
    std::vector<std::uint64_t> counts(space, 0);
    for (auto k : keys) ++counts[k];
    for (std::uint64_t s = 0; s < layout.s_configs; ++s) {
      add_group(std::span<const std::uint64_t>(counts.data() + s * block, block));
    }
  } else {
    std::sort(keys.begin(), keys.end());
    std::vector<std::uint64_t> cell(block, 0);
    std::size_t i = 0;
    while (i < keys.size()) {
      const std::uint64_t s = keys[i] / block;
      std::fill(cell.begin(), cell.end(), 0);
      while (i < keys.size() && keys[i] / block == s) {
        ++cell[keys[i] % block];
        ++i;
      }
      add_group(cell);
    }
  }
  est.value = total / static_cast<double>(block);
  return est;
}

std::vector<std::uint64_t> keys_from_samples(const SampleSet& samples, const KeyLayout& layout) {
  std::vector<std::uint64_t> keys;
  keys.reserve(samples.rows());
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const auto row = samples.row(i);
    std::uint64_t key = 0;
    bool complete = true;
    for (std::size_t a = 0; a < layout.nodes.size(); ++a) {
      const auto c = row[static_cast<std::size_t>(layout.nodes[a])];
      if (c == SampleSet::kErased) {
        complete = false;
        break;
      }
      key = key * layout.radix[a] + static_cast<std::uint64_t>(c);
    }
    if (complete) keys.push_back(key);
  }
  return keys;
}

double log_bracket(double omega_term, double ell, int n, int K, int r) {
  return std::log(omega_term) + std::log(ell + r) + (ell + r) * std::log(static_cast<double>(n) * K) +
         std::log(2.0);
}

void check_positive(std::initializer_list<double> values) {
  for (double v : values) {
    if (!(v > 0.0)) throw std::invalid_argument("sample bound: parameters must be positive");
  }
}

double from_log10(double l) {
  if (l > std::log10(std::numeric_limits<double>::max())) return std::numeric_limits<double>::infinity();
  return std::ceil(std::pow(10.0, l));
}

}  // namespace

std::vector<std::uint64_t> EmpiricalDistribution::counts(std::span<const int> nodes,
                                                         std::uint64_t* observed) const {
  std::uint64_t space = 1;
  std::vector<std::uint64_t> radix;
  for (int v : nodes) {
    if (v < 0 || v >= samples_->num_nodes()) throw std::out_of_range("counts: node out of range");
    radix.push_back(static_cast<std::uint64_t>(samples_->arities()[static_cast<std::size_t>(v)]));
    space *= radix.back();
    if (space > (std::uint64_t{1} << 26)) throw std::overflow_error("counts: table too large");
  }
  std::vector<std::uint64_t> out(space, 0);
  std::uint64_t seen = 0;
  for (std::size_t i = 0; i < samples_->rows(); ++i) {
    const auto row = samples_->row(i);
    std::uint64_t key = 0;
    bool complete = true;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      const auto c = row[static_cast<std::size_t>(nodes[a])];
      if (c == SampleSet::kErased) {
        complete = false;
        break;
      }
      key = key * radix[a] + static_cast<std::uint64_t>(c);
    }
    if (complete) {
      ++out[key];
      ++seen;
    }
  }
  if (observed != nullptr) *observed = seen;
  return out;
}

double empirical_prob(const EmpiricalDistribution& emp, std::span<const int> T,
                      std::span<const int> x_T) {
  if (T.empty()) throw std::invalid_argument("empirical_prob: T must be nonempty");
  if (T.size() != x_T.size()) throw std::invalid_argument("empirical_prob: T and x_T differ in length");
  const SampleSet& s = emp.samples();
  std::uint64_t hits = 0;
  std::uint64_t seen = 0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const auto row = s.row(i);
    bool complete = true;
    bool match = true;
    for (std::size_t a = 0; a < T.size(); ++a) {
      const auto c = row[static_cast<std::size_t>(T[a])];
      if (c == SampleSet::kErased) {
        complete = false;
        break;
      }
      if (c != x_T[a]) match = false;
    }
    if (complete) {
      ++seen;
      if (match) ++hits;
    }
  }
  return seen == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(seen);
}

double nu_hat(const EmpiricalDistribution& emp, int u, std::span<const int> I,
              std::span<const int> S) {
  return nu_hat_erased(emp, u, I, S).value;
}

NuEstimate nu_hat_erased(const EmpiricalDistribution& emp, int u, std::span<const int> I,
                         std::span<const int> S) {
  const KeyLayout layout = make_layout(emp.samples().arities(), u, I, S);
  auto keys = keys_from_samples(emp.samples(), layout);
  if (keys.empty()) {
    std::ostringstream msg;
    msg << "nu_hat: no sample observes all of node " << u << " and its " << I.size() + S.size()
        << " companions";
    throw InsufficientCoverage(msg.str());
  }
  return nu_from_keys(keys, layout);
}

double nu_from_table(std::span<const double> table, std::size_t s_configs, std::size_t ku,
                     std::size_t kI) {
  if (table.size() != s_configs * ku * kI) throw std::invalid_argument("nu_from_table: size mismatch");
  std::vector<double> pr(ku);
  std::vector<double> pg(kI);
  double total = 0.0;
  for (std::size_t s = 0; s < s_configs; ++s) {
    std::fill(pr.begin(), pr.end(), 0.0);
    std::fill(pg.begin(), pg.end(), 0.0);
    double ps = 0.0;
    for (std::size_t r = 0; r < ku; ++r) {
      for (std::size_t g = 0; g < kI; ++g) {
        const double p = table[(s * ku + r) * kI + g];
        pr[r] += p;
        pg[g] += p;
        ps += p;
      }
    }
    if (ps == 0.0) continue;
    for (std::size_t r = 0; r < ku; ++r) {
      for (std::size_t g = 0; g < kI; ++g) {
        total += std::abs(table[(s * ku + r) * kI + g] - pr[r] * pg[g] / ps);
      }
    }
  }
  return total / static_cast<double>(ku * kI);
}

QueryOracle::QueryOracle(int num_nodes, std::vector<int> arities, std::size_t capacity,
                         SampleSource source)
    : num_nodes_(num_nodes),
      arities_(std::move(arities)),
      capacity_(capacity),
      source_(std::move(source)),
      scratch_(static_cast<std::size_t>(num_nodes)) {
  if (static_cast<int>(arities_.size()) != num_nodes_) {
    throw std::invalid_argument("QueryOracle: arities length does not match node count");
  }
}

void QueryOracle::query(std::span<const int> nodes, std::span<int> out) {
  if (nodes.size() > capacity_) {
    std::ostringstream msg;
    msg << "query of " << nodes.size() << " nodes exceeds capacity " << capacity_;
    throw QueryCapacityExceeded(msg.str());
  }
  source_(scratch_);
  ++consumed_;
  max_query_size_ = std::max(max_query_size_, nodes.size());
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    out[a] = scratch_[static_cast<std::size_t>(nodes[a])];
  }
}

SampleSource sample_set_source(const SampleSet& samples) {
  auto next = std::make_shared<std::size_t>(0);
  return [&samples, next](std::span<int> row) {
    if (*next >= samples.rows()) throw QueryCapacityExceeded("query source exhausted");
    const auto src = samples.row((*next)++);
    for (std::size_t v = 0; v < src.size(); ++v) row[v] = src[v];
  };
}

double nu_hat_queried(QueryOracle& oracle, int u, std::span<const int> I, std::span<const int> S,
                      std::size_t m_batch) {
  if (m_batch == 0) throw std::invalid_argument("nu_hat_queried: m_batch must be >= 1");
  const KeyLayout layout = make_layout(oracle.arities(), u, I, S);
  std::vector<std::uint64_t> keys;
  keys.reserve(m_batch);
  std::vector<int> states(layout.nodes.size());
  for (std::size_t b = 0; b < m_batch; ++b) {
    oracle.query(layout.nodes, states);
    std::uint64_t key = 0;
    for (std::size_t a = 0; a < states.size(); ++a) {
      key = key * layout.radix[a] + static_cast<std::uint64_t>(states[a]);
    }
    keys.push_back(key);
  }
  return nu_from_keys(keys, layout).value;
}

double required_samples_full_log10(double ell, double eps, double omega, int n, int K, int r,
                                   double delta) {
  check_positive({ell, eps, omega, static_cast<double>(n), static_cast<double>(K),
                  static_cast<double>(r), delta});
  const double ln = std::log(15.0) + 2.0 * ell * std::log(static_cast<double>(K)) -
                    2.0 * std::log(eps) - 2.0 * ell * std::log(delta) +
                    std::log(log_bracket(1.0 / omega, ell, n, K, r));
  return ln / std::log(10.0);
}

double required_samples_full(double ell, double eps, double omega, int n, int K, int r,
                             double delta) {
  return from_log10(required_samples_full_log10(ell, eps, omega, n, K, r, delta));
}

double required_samples_erased_log10(double L, double tau, double omega, int n, int K, int r,
                                     double delta, double reveal_prob) {
  check_positive({L, tau, omega, static_cast<double>(n), static_cast<double>(K),
                  static_cast<double>(r), delta, reveal_prob});
  const double ln_N = std::log(60.0) + 2.0 * L * std::log(static_cast<double>(K)) -
                      2.0 * std::log(tau) - 2.0 * L * std::log(delta) +
                      std::log(log_bracket(2.0 / omega, L, n, K, r));
  const double coverage = L * std::log(static_cast<double>(n)) + std::log(L) + std::log(2.0) +
                          ln_N - std::log(omega);
  return (ln_N + std::log(coverage) - 2.0 * std::log(reveal_prob)) / std::log(10.0);
}

double required_samples_erased(double L, double tau, double omega, int n, int K, int r,
                               double delta, double reveal_prob) {
  return from_log10(required_samples_erased_log10(L, tau, omega, n, K, r, delta, reveal_prob));
}

void write_audit(std::ostream& out, int u, std::span<const int> I, std::span<const int> S,
                 const NuEstimate& est) {
  auto list = [&out](std::span<const int> v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  };
  out << "nu u=" << u << " I=";
  list(I);
  out << " S=";
  list(S);
  out << " value=" << est.value << " m=" << est.effective_m << '\n';
}

}  // namespace mrfl
