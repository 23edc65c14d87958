#pragma once

// Brute-force reference computations written independently of the library:
// plain nested loops over explicit index tuples.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace oracle {

inline double hb(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

inline double entropy(const std::map<std::vector<std::size_t>, double>& p) {
  double h = 0.0;
  for (const auto& [k, v] : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

/// Joint given as a list of (tuple, mass) with the tuple over all variables.
struct Joint {
  std::vector<std::vector<std::size_t>> tuples;
  std::vector<double> mass;

  std::map<std::vector<std::size_t>, double> marginal(const std::vector<std::size_t>& keep) const {
    std::map<std::vector<std::size_t>, double> m;
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      std::vector<std::size_t> k;
      for (auto a : keep) k.push_back(tuples[i][a]);
      m[k] += mass[i];
    }
    return m;
  }
  double h(std::vector<std::size_t> vars) const { return entropy(marginal(vars)); }

  /// I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C).
  double mi(std::vector<std::size_t> a, std::vector<std::size_t> b, std::vector<std::size_t> c = {}) const {
    auto cat = [](std::vector<std::size_t> x, const std::vector<std::size_t>& y) {
      x.insert(x.end(), y.begin(), y.end());
      return x;
    };
    return h(cat(a, c)) + h(cat(b, c)) - h(cat(cat(a, b), c)) - h(c);
  }
};

/// Enumerates a row-major table over the given sizes.
inline Joint from_table(const std::vector<std::size_t>& sizes, const std::vector<double>& table) {
  Joint j;
  std::vector<std::size_t> idx(sizes.size(), 0);
  for (std::size_t flat = 0; flat < table.size(); ++flat) {
    j.tuples.push_back(idx);
    j.mass.push_back(table[flat]);
    for (std::size_t k = sizes.size(); k-- > 0;) {
      if (++idx[k] < sizes[k]) break;
      idx[k] = 0;
    }
  }
  return j;
}

/// Deterministic pseudo-random stream, independent of the library's RNG.
class Lcg {
 public:
  explicit Lcg(std::uint64_t s) : state_(s * 2862933555777941757ULL + 3037000493ULL) {}
  double uniform() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(state_ >> 11) * 0x1.0p-53;
  }
  std::vector<double> simplex(std::size_t k) {
    std::vector<double> v(k);
    double s = 0.0;
    for (auto& x : v) s += (x = -std::log(1.0 - uniform()));
    for (auto& x : v) x /= s;
    return v;
  }
  std::vector<double> rows(std::size_t count, std::size_t width) {
    std::vector<double> out;
    for (std::size_t r = 0; r < count; ++r) {
      const auto s = simplex(width);
      out.insert(out.end(), s.begin(), s.end());
    }
    return out;
  }

 private:
  std::uint64_t state_;
};

}  // namespace oracle
