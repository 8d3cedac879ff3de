#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wenets {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need byte swaps");

// Malformed or inconsistent input data (files, manifests, configs).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Tensor/layer shape disagreement.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finite ones are required (e.g. training loss).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Serial runs every kernel on one lane with a fixed summation order.
// Parallel partitions independent outputs over OpenMP threads; reductions
// stay per-output-element so results match the serial lane.
enum class ExecMode { Serial, Parallel };

enum class Phase { Train, Eval };

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from (seed, stream, index).
inline uint64_t mix_seed(uint64_t seed, uint64_t stream, uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ index);
}

// FNV-1a; stable across platforms, unlike std::hash.
inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

// mt19937_64 with explicit, self-contained output mappings so identical
// seeds give identical streams independent of the standard library's
// distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n); modulo bias is irrelevant for our n << 2^64.
  size_t uniform_index(size_t n) { return static_cast<size_t>(next_u64() % n); }

  // Box-Muller, one draw per call (no cached spare).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename It>
  void shuffle(It first, It last) {
    const size_t n = static_cast<size_t>(last - first);
    for (size_t i = n; i > 1; --i) {
      std::swap(first[i - 1], first[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Order-insensitive to ~1e-9 for the sizes we reduce.
inline double pairwise_sum(const double* x, size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(std::span<const double> x) {
  return pairwise_sum(x.data(), x.size());
}

// ---- little-endian stream helpers ----

inline void write_bytes(std::ostream& os, const void* p, size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void write_u8(std::ostream& os, uint8_t v) { write_bytes(os, &v, 1); }
inline void write_u16le(std::ostream& os, uint16_t v) { write_bytes(os, &v, 2); }
inline void write_u32le(std::ostream& os, uint32_t v) { write_bytes(os, &v, 4); }
inline void write_f32le(std::ostream& os, float v) { write_bytes(os, &v, 4); }

inline void write_f32_array(std::ostream& os, const float* v, size_t n) {
  write_bytes(os, v, n * sizeof(float));
}

inline void read_bytes(std::istream& is, void* p, size_t n, const char* what) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n) {
    throw DataError(std::string("truncated input while reading ") + what);
  }
}

inline uint8_t read_u8(std::istream& is, const char* what) {
  uint8_t v;
  read_bytes(is, &v, 1, what);
  return v;
}
inline uint16_t read_u16le(std::istream& is, const char* what) {
  uint16_t v;
  read_bytes(is, &v, 2, what);
  return v;
}
inline uint32_t read_u32le(std::istream& is, const char* what) {
  uint32_t v;
  read_bytes(is, &v, 4, what);
  return v;
}
inline float read_f32le(std::istream& is, const char* what) {
  float v;
  read_bytes(is, &v, 4, what);
  return v;
}
inline void read_f32_array(std::istream& is, float* v, size_t n, const char* what) {
  read_bytes(is, v, n * sizeof(float), what);
}

}  // namespace wenets
