#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace capillary {

enum class ErrorCode {
  invalid_argument,
  validation,
  mesh_mismatch,
  out_of_range,
  solver_stall,
  io,
  internal,
};

// Library-wide exception carrying a coarse error code so the C layer can map
// failures onto status values without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

// Deterministic reduction independent of any evaluation parallelism: recursive
// pairwise summation, which also keeps rounding error at O(log N).
inline double pairwise_sum(const double* x, Eigen::Index n) {
  if (n <= 8) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += x[i];
    return s;
  }
  Eigen::Index half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const Eigen::VectorXd& v) { return pairwise_sum(v.data(), v.size()); }

inline double weighted_sum(const Eigen::VectorXd& values, const Eigen::VectorXd& weights) {
  if (values.size() != weights.size())
    fail(ErrorCode::invalid_argument, "weighted_sum: length mismatch");
  Eigen::VectorXd prod = values.cwiseProduct(weights);
  return pairwise_sum(prod);
}

// splitmix64, used both as a stream-splitter and as a tiny portable generator.
// std::uniform_real_distribution is implementation-defined, so random corpora
// draw through these helpers to keep seeded runs byte-stable everywhere.
struct SplitMix64 {
  uint64_t state;
  explicit SplitMix64(uint64_t seed) : state(seed) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // uniform in [0,1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
  }
};

inline uint64_t substream_seed(uint64_t seed, uint64_t index) {
  SplitMix64 s(seed ^ (0x632be59bd9b4e019ULL + index * 0x9e3779b97f4a7c15ULL));
  return s.next();
}

// FNV-1a over raw bytes; used for input digests in verification reports.
inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Fornberg's algorithm: weights of the m-th derivative at point z for the
// (arbitrary) nodes x[0..n-1]. Returns one row of weights.
inline Eigen::VectorXd fd_weights(double z, const Eigen::VectorXd& x, int m) {
  const int n = static_cast<int>(x.size());
  if (n < m + 1) fail(ErrorCode::invalid_argument, "fd_weights: not enough nodes");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, m + 1);
  double c1 = 1.0;
  double c4 = x[0] - z;
  c(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    int mn = std::min(i, m);
    double c2 = 1.0;
    double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k) c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  return c.col(m);
}

}  // namespace capillary
