#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace moec {

// Raised for invalid configuration: bad keys, shapes, ranges. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised for malformed input data (CSV schema, checkpoints). CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic RNG. All variate generation is hand-rolled from the raw
// 64-bit stream so the draw sequence is identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) { return gen_() % n; }

  // Box-Muller; one draw per call, spare cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925287 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Derives an independent stream (for per-component seeding).
  std::uint64_t fork_seed() { return gen_() ^ 0x9e3779b97f4a7c15ULL; }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Shortest round-trip formatting for doubles; stable across runs, used for
// every CSV/log value so output files are byte-reproducible.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string join_csv(std::span<const std::string> cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ',';
    row += cells[i];
  }
  row += '\n';
  return row;
}

// Splits one CSV line (no quoting; the formats here never need it).
std::vector<std::string> split_csv_line(const std::string& line);

inline double saturate(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

// Population mean / variance of a sample span (variance with 1/n).
double mean_of(std::span<const double> xs);
double population_variance(std::span<const double> xs);

// FNV-1a over raw bytes; used for artifact hash checks.
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace moec
