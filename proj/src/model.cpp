#include "mrfl/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mrfl {

namespace {

using TensorMap = std::map<std::vector<int>, CliqueTensor>;

std::vector<int> shape_for(const std::vector<int>& arities, const std::vector<int>& vertices) {
  std::vector<int> shape;
  shape.reserve(vertices.size());
  for (int v : vertices) shape.push_back(arities[static_cast<std::size_t>(v)]);
  return shape;
}

void accumulate(TensorMap& into, CliqueTensor t) {
  auto it = into.find(t.vertices());
  if (it == into.end()) {
    std::vector<int> key = t.vertices();
    into.emplace(std::move(key), std::move(t));
  } else {
    it->second += t;
  }
}

std::vector<CliqueTensor> drop_zeros(TensorMap&& map) {
  std::vector<CliqueTensor> out;
  for (auto& [key, t] : map) {
    if (!t.is_zero(kPruneTol)) out.push_back(std::move(t));
  }
  return out;
}

// True iff `a` is a strict subset of `b`; both sorted.
bool strict_subset(const std::vector<int>& a, const std::vector<int>& b) {
  return a.size() < b.size() && std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

MarkovRandomField::MarkovRandomField(std::vector<int> arities, int order_bound,
                                     std::vector<CliqueTensor> tensors)
    : arities_(std::move(arities)), order_bound_(order_bound), tensors_(std::move(tensors)) {
  if (order_bound_ < 1) throw std::invalid_argument("model: order bound must be >= 1");
  for (int k : arities_) {
    if (k < 2) throw std::invalid_argument("model: every arity must be >= 2");
  }
  const int n = num_nodes();
  std::sort(tensors_.begin(), tensors_.end(),
            [](const CliqueTensor& a, const CliqueTensor& b) { return a.vertices() < b.vertices(); });
  incident_.assign(arities_.size(), {});
  for (std::size_t idx = 0; idx < tensors_.size(); ++idx) {
    const CliqueTensor& t = tensors_[idx];
    if (t.order() < 1 || static_cast<int>(t.order()) > order_bound_) {
      throw std::invalid_argument("model: hyperedge size outside 1..r");
    }
    if (idx > 0 && tensors_[idx - 1].vertices() == t.vertices()) {
      throw std::invalid_argument("model: two tensors on the same vertex set");
    }
    for (std::size_t a = 0; a < t.order(); ++a) {
      const int v = t.vertices()[a];
      if (v < 0 || v >= n) throw std::invalid_argument("model: vertex out of range");
      if (t.shape()[a] != arities_[static_cast<std::size_t>(v)]) {
        std::ostringstream msg;
        msg << "model: tensor shape does not match arity of node " << v;
        throw std::invalid_argument(msg.str());
      }
      incident_[static_cast<std::size_t>(v)].push_back(idx);
    }
  }
}

int MarkovRandomField::max_arity() const {
  int k = 2;
  for (int a : arities_) k = std::max(k, a);
  return k;
}

const CliqueTensor* MarkovRandomField::find(std::span<const int> vertices) const {
  auto it = std::lower_bound(tensors_.begin(), tensors_.end(), vertices,
                             [](const CliqueTensor& t, std::span<const int> key) {
                               return std::lexicographical_compare(t.vertices().begin(),
                                                                   t.vertices().end(), key.begin(),
                                                                   key.end());
                             });
  if (it == tensors_.end() || !std::ranges::equal(it->vertices(), vertices)) return nullptr;
  return &*it;
}

double MarkovRandomField::log_weight(std::span<const int> x) const {
  double total = 0.0;
  for (const CliqueTensor& t : tensors_) {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < t.order(); ++a) {
      flat = flat * static_cast<std::size_t>(t.shape()[a]) +
             static_cast<std::size_t>(x[static_cast<std::size_t>(t.vertices()[a])]);
    }
    total += t[flat];
  }
  return total;
}

std::size_t MarkovRandomField::configuration_count() const {
  std::size_t c = 1;
  for (int k : arities_) {
    if (c > (std::size_t{1} << 62) / static_cast<std::size_t>(k)) return std::size_t{1} << 62;
    c *= static_cast<std::size_t>(k);
  }
  return c;
}

MarkovRandomField canonicalize(const MarkovRandomField& model) {
  TensorMap work;
  for (const CliqueTensor& t : model.tensors()) accumulate(work, t);

  for (int order = model.order_bound(); order >= 1; --order) {
    std::vector<std::vector<int>> keys;
    for (const auto& [key, t] : work) {
      if (static_cast<int>(key.size()) == order) keys.push_back(key);
    }
    for (const auto& key : keys) {
      for (std::size_t mode = 0; mode < static_cast<std::size_t>(order); ++mode) {
        CliqueTensor means = mean_along(work.at(key), mode);
        subtract_along(work.at(key), mode, means);
        // Unary residue goes into the normalization constant.
        if (order > 1) accumulate(work, std::move(means));
      }
    }
  }
  return MarkovRandomField(model.arities(), model.order_bound(), drop_zeros(std::move(work)));
}

bool is_canonical(const MarkovRandomField& model, double tol) {
  return std::ranges::all_of(model.tensors(),
                             [tol](const CliqueTensor& t) { return is_centered(t, tol); });
}

bool CliqueGraph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
}

CliqueGraph clique_graph(const MarkovRandomField& model) {
  CliqueGraph g;
  g.n = model.num_nodes();
  for (const CliqueTensor& t : model.tensors()) {
    const auto& v = t.vertices();
    for (std::size_t a = 0; a < v.size(); ++a) {
      for (std::size_t b = a + 1; b < v.size(); ++b) g.edges.emplace_back(v[a], v[b]);
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  g.neighbors.assign(static_cast<std::size_t>(g.n), {});
  for (auto [i, j] : g.edges) {
    g.neighbors[static_cast<std::size_t>(i)].push_back(j);
    g.neighbors[static_cast<std::size_t>(j)].push_back(i);
  }
  g.degrees.resize(static_cast<std::size_t>(g.n));
  for (std::size_t i = 0; i < g.neighbors.size(); ++i) {
    std::sort(g.neighbors[i].begin(), g.neighbors[i].end());
    g.degrees[i] = static_cast<int>(g.neighbors[i].size());
    g.max_degree = std::max(g.max_degree, g.degrees[i]);
  }
  return g;
}

std::vector<std::vector<int>> maximal_hyperedges(const MarkovRandomField& model) {
  std::vector<const std::vector<int>*> live;
  for (const CliqueTensor& t : model.tensors()) {
    if (!t.is_zero()) live.push_back(&t.vertices());
  }
  std::vector<std::vector<int>> out;
  for (const auto* h : live) {
    const bool covered = std::ranges::any_of(live, [h](const std::vector<int>* other) {
      return strict_subset(*h, *other);
    });
    if (!covered) out.push_back(*h);
  }
  return out;
}

bool NonDegeneracyReport::edge_cover_ok() const {
  return std::ranges::all_of(edge_cover, [](const EdgeCheck& e) { return e.ok; });
}
bool NonDegeneracyReport::maximal_nonvanishing_ok() const {
  return std::ranges::all_of(maximal_nonvanishing, [](const HyperedgeCheck& h) { return h.ok; });
}
bool NonDegeneracyReport::entry_bound_ok() const {
  return std::ranges::all_of(entry_bound, [](const HyperedgeCheck& h) { return h.ok; });
}

NonDegeneracyReport validate_nondegeneracy(const MarkovRandomField& model, double alpha,
                                           double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("validate_nondegeneracy: alpha and beta must be positive");
  }
  if (!is_canonical(model)) {
    throw std::invalid_argument("validate_nondegeneracy: model is not in canonical form");
  }
  NonDegeneracyReport report;
  report.alpha = alpha;
  report.beta = beta;

  const CliqueGraph g = clique_graph(model);
  for (auto [i, j] : g.edges) {
    bool ok = false;
    for (const CliqueTensor& t : model.tensors()) {
      if (t.contains(i) && t.contains(j) && !t.is_zero()) {
        ok = true;
        break;
      }
    }
    report.edge_cover.push_back({i, j, ok});
  }
  for (auto& h : maximal_hyperedges(model)) {
    const double m = model.find(h)->max_abs();
    report.maximal_nonvanishing.push_back({std::move(h), m, m >= alpha});
  }
  for (const CliqueTensor& t : model.tensors()) {
    const double m = t.max_abs();
    report.entry_bound.push_back({t.vertices(), m, m <= beta});
  }
  return report;
}

double energy(const MarkovRandomField& model, int u, int state, std::span<const int> x) {
  if (u < 0 || u >= model.num_nodes()) throw std::out_of_range("energy: node out of range");
  if (state < 0 || state >= model.arity(u)) throw std::out_of_range("energy: state out of range");
  double total = 0.0;
  for (std::size_t idx : model.incident(u)) {
    const CliqueTensor& t = model.tensors()[idx];
    std::size_t flat = 0;
    for (std::size_t a = 0; a < t.order(); ++a) {
      const int v = t.vertices()[a];
      int s = state;
      if (v != u) {
        s = x[static_cast<std::size_t>(v)];
        if (s < 0 || s >= t.shape()[a]) throw std::out_of_range("energy: state out of range");
      }
      flat = flat * static_cast<std::size_t>(t.shape()[a]) + static_cast<std::size_t>(s);
    }
    total += t[flat];
  }
  return total;
}

std::vector<double> conditional_distribution(const MarkovRandomField& model, int u,
                                             std::span<const int> x) {
  const int k = model.arity(u);
  std::vector<double> p(static_cast<std::size_t>(k));
  double top = -INFINITY;
  for (int r = 0; r < k; ++r) {
    p[static_cast<std::size_t>(r)] = energy(model, u, r, x);
    top = std::max(top, p[static_cast<std::size_t>(r)]);
  }
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - top);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

DerivedConstants compute_gamma_delta(const MarkovRandomField& model) {
  DerivedConstants c;
  for (int u = 0; u < model.num_nodes(); ++u) {
    double sum = 0.0;
    for (std::size_t idx : model.incident(u)) sum += model.tensors()[idx].max_abs();
    c.gamma = std::max(c.gamma, sum);
  }
  c.max_arity = model.max_arity();
  c.max_degree = clique_graph(model).max_degree;
  c.delta = std::exp(-2.0 * c.gamma) / c.max_arity;
  return c;
}

ConditionedModel condition_on(const MarkovRandomField& model, std::span<const int> nodes,
                              std::span<const int> states) {
  if (nodes.size() != states.size()) {
    throw std::invalid_argument("condition_on: nodes and states differ in length");
  }
  const int n = model.num_nodes();
  std::vector<int> fixed(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const int v = nodes[i];
    if (v < 0 || v >= n) throw std::out_of_range("condition_on: node out of range");
    if (fixed[static_cast<std::size_t>(v)] != -1) {
      throw std::invalid_argument("condition_on: node listed twice");
    }
    if (states[i] < 0 || states[i] >= model.arity(v)) {
      throw std::out_of_range("condition_on: state out of range");
    }
    fixed[static_cast<std::size_t>(v)] = states[i];
  }

  ConditionedModel out;
  std::vector<int> new_index(static_cast<std::size_t>(n), -1);
  std::vector<int> arities;
  for (int v = 0; v < n; ++v) {
    if (fixed[static_cast<std::size_t>(v)] == -1) {
      new_index[static_cast<std::size_t>(v)] = static_cast<int>(out.kept.size());
      out.kept.push_back(v);
      arities.push_back(model.arity(v));
    }
  }

  TensorMap work;
  std::vector<int> free_idx;
  std::vector<int> full_idx;
  for (const CliqueTensor& t : model.tensors()) {
    std::vector<int> free_axes;
    std::vector<int> verts;
    for (std::size_t a = 0; a < t.order(); ++a) {
      const int v = t.vertices()[a];
      if (fixed[static_cast<std::size_t>(v)] == -1) {
        free_axes.push_back(static_cast<int>(a));
        verts.push_back(new_index[static_cast<std::size_t>(v)]);
      }
    }
    if (verts.empty()) continue;  // constant; absorbed by normalization
    CliqueTensor frozen = CliqueTensor::zeros(verts, shape_for(arities, verts));
    full_idx.resize(t.order());
    for (std::size_t a = 0; a < t.order(); ++a) {
      full_idx[a] = fixed[static_cast<std::size_t>(t.vertices()[a])];
    }
    free_idx.resize(verts.size());
    for (std::size_t flat = 0; flat < frozen.size(); ++flat) {
      frozen.unflatten(flat, free_idx);
      for (std::size_t b = 0; b < free_axes.size(); ++b) {
        full_idx[static_cast<std::size_t>(free_axes[b])] = free_idx[b];
      }
      frozen[flat] = t.at(full_idx);
    }
    accumulate(work, std::move(frozen));
  }
  std::vector<CliqueTensor> tensors;
  for (auto& [key, t] : work) tensors.push_back(std::move(t));
  out.model = canonicalize(MarkovRandomField(std::move(arities), model.order_bound(),
                                             std::move(tensors)));
  return out;
}

}  // namespace mrfl
