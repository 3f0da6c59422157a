#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mrfl/model.hpp"
#include "mrfl/rng.hpp"

namespace fixtures {

// theta(a, b) = J s(a) s(b) with s = (+1, -1).
inline mrfl::CliqueTensor ising_tensor(int i, int j, double J) {
  return mrfl::CliqueTensor({i, j}, {2, 2}, {J, -J, -J, J});
}

inline mrfl::MarkovRandomField ising_pair(double J = 0.5) {
  return mrfl::MarkovRandomField({2, 2}, 2, {ising_tensor(0, 1, J)});
}

// Path 0 - 1 - 2.
inline mrfl::MarkovRandomField ising_path(double J = 0.5) {
  return mrfl::MarkovRandomField({2, 2, 2}, 2, {ising_tensor(0, 1, J), ising_tensor(1, 2, J)});
}

inline mrfl::MarkovRandomField zero_model(int n, int k = 2) {
  return mrfl::MarkovRandomField(std::vector<int>(static_cast<std::size_t>(n), k), 2, {});
}

// Arbitrary (not centered) tensors on random hyperedges of size 1..r.
inline mrfl::MarkovRandomField random_raw_model(std::uint64_t seed, int n, int K, int r,
                                                int hyperedges) {
  mrfl::Rng rng = mrfl::make_rng(seed, mrfl::Stream::kTrial);
  std::vector<int> arities(static_cast<std::size_t>(n));
  for (auto& k : arities) k = 2 + static_cast<int>(mrfl::uniform_index(rng, static_cast<std::uint64_t>(K - 1)));
  std::vector<std::vector<int>> chosen;
  std::vector<mrfl::CliqueTensor> tensors;
  for (int h = 0; h < hyperedges; ++h) {
    const int size = 1 + static_cast<int>(mrfl::uniform_index(rng, static_cast<std::uint64_t>(std::min(r, n))));
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) pool[static_cast<std::size_t>(v)] = v;
    for (int i = 0; i < size; ++i) {
      const auto j = static_cast<std::size_t>(i) + mrfl::uniform_index(rng, static_cast<std::uint64_t>(n - i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    std::vector<int> verts(pool.begin(), pool.begin() + size);
    std::sort(verts.begin(), verts.end());
    if (std::find(chosen.begin(), chosen.end(), verts) != chosen.end()) continue;
    chosen.push_back(verts);
    std::vector<int> shape;
    std::size_t cells = 1;
    for (int v : verts) {
      shape.push_back(arities[static_cast<std::size_t>(v)]);
      cells *= static_cast<std::size_t>(arities[static_cast<std::size_t>(v)]);
    }
    std::vector<double> values(cells);
    for (auto& x : values) x = 2.0 * mrfl::uniform01(rng) - 1.0;
    tensors.emplace_back(verts, shape, values);
  }
  return mrfl::MarkovRandomField(arities, r, tensors);
}

inline mrfl::MarkovRandomField random_model(std::uint64_t seed, int n, int K, int r, int hyperedges) {
  return mrfl::canonicalize(random_raw_model(seed, n, K, r, hyperedges));
}

}  // namespace fixtures
