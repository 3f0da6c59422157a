#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mrfl {

// m x n matrix of observed states, row-major. A cell is either a state in
// [0, k_i) or kErased.
class SampleSet {
 public:
  using Cell = std::int16_t;
  static constexpr Cell kErased = -1;

  SampleSet() = default;
  SampleSet(std::vector<int> arities, std::size_t rows, std::uint64_t seed);

  std::size_t rows() const { return rows_; }
  int num_nodes() const { return static_cast<int>(arities_.size()); }
  const std::vector<int>& arities() const { return arities_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const Cell> row(std::size_t i) const {
    return {cells_.data() + i * arities_.size(), arities_.size()};
  }
  std::span<Cell> row(std::size_t i) { return {cells_.data() + i * arities_.size(), arities_.size()}; }
  Cell at(std::size_t i, int node) const { return cells_[i * arities_.size() + static_cast<std::size_t>(node)]; }
  void set(std::size_t i, int node, Cell value) {
    cells_[i * arities_.size() + static_cast<std::size_t>(node)] = value;
  }
  const std::vector<Cell>& cells() const { return cells_; }

  std::size_t erased_count() const;

  friend bool operator==(const SampleSet&, const SampleSet&) = default;

 private:
  std::vector<int> arities_;
  std::size_t rows_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Cell> cells_;
};

// Text format:
//   n=<n> arities=<k1,k2,...> seed=<u64>
//   one line per sample, comma-separated 1-based states, '?' for erased.
void write_samples(const SampleSet& samples, std::ostream& out);
SampleSet read_samples(std::istream& in);
void save_samples(const SampleSet& samples, const std::string& path);
SampleSet load_samples(const std::string& path);

}  // namespace mrfl
