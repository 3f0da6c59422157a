#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mrfl/sample_set.hpp"

namespace mrfl {

SampleSet::SampleSet(std::vector<int> arities, std::size_t rows, std::uint64_t seed)
    : arities_(std::move(arities)), rows_(rows), seed_(seed), cells_(rows * arities_.size(), 0) {
  for (int k : arities_) {
    if (k < 2 || k > 32767) throw std::invalid_argument("samples: arity out of range");
  }
}

std::size_t SampleSet::erased_count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), kErased));
}

void write_samples(const SampleSet& samples, std::ostream& out) {
  out << "n=" << samples.num_nodes() << " arities=";
  for (int i = 0; i < samples.num_nodes(); ++i) {
    out << (i ? "," : "") << samples.arities()[static_cast<std::size_t>(i)];
  }
  out << " seed=" << samples.seed() << '\n';
  std::string line;
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    line.clear();
    for (int i = 0; i < samples.num_nodes(); ++i) {
      if (i) line += ',';
      const auto c = samples.at(r, i);
      if (c == SampleSet::kErased) {
        line += '?';
      } else {
        line += std::to_string(c + 1);
      }
    }
    line += '\n';
    out << line;
  }
}

SampleSet read_samples(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("samples: missing header");
  std::istringstream hs(header);
  std::string tok;
  int n = -1;
  std::vector<int> arities;
  std::uint64_t seed = 0;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::runtime_error("samples: bad header field " + tok);
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "n") {
      n = std::stoi(val);
    } else if (key == "arities") {
      std::istringstream as(val);
      std::string a;
      while (std::getline(as, a, ',')) arities.push_back(std::stoi(a));
    } else if (key == "seed") {
      seed = std::stoull(val);
    }
  }
  if (n < 0 || static_cast<int>(arities.size()) != n) {
    throw std::runtime_error("samples: header n and arities disagree");
  }

  std::vector<std::vector<SampleSet::Cell>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<SampleSet::Cell> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      if (cell == "?") {
        row.push_back(SampleSet::kErased);
      } else {
        const int s = std::stoi(cell);
        const int k = arities[row.size()];
        if (s < 1 || s > k) throw std::runtime_error("samples: state out of range: " + cell);
        row.push_back(static_cast<SampleSet::Cell>(s - 1));
      }
      if (row.size() > static_cast<std::size_t>(n)) throw std::runtime_error("samples: row too long");
    }
    if (row.size() != static_cast<std::size_t>(n)) throw std::runtime_error("samples: row too short");
    rows.push_back(std::move(row));
  }
  SampleSet out(arities, rows.size(), seed);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
  }
  return out;
}

void save_samples(const SampleSet& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_samples(samples, out);
}

SampleSet load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_samples(in);
}

}  // namespace mrfl
