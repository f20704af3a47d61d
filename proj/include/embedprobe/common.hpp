#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace embedprobe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class ErrorCode {
  InvalidConfig,
  TooShort,
  ConstantSignal,
  ParseError,
  SchemaError,
  GapError,
  InvalidSpec,
  FormatError,
  MetadataMismatch,
  ZeroVariance,
  ZeroNorm,
  DegenerateInput,
  SingularSystem,
  SingleClass,
  NonConvergence,
  TooFewSamples,
  ZeroMagnitude,
  ProvenanceMismatch,
  UnknownPanel,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (notably the CLI) can map them onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix, for re-raising with more context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// 64-bit mixing used for all derived seeds. Stable across platforms.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text,
                              std::uint64_t hash = 0xCBF29CE484222325ULL) noexcept {
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

namespace detail {
constexpr std::uint64_t mix_tag(std::uint64_t hash, std::string_view tag) noexcept {
  return splitmix64(hash ^ fnv1a(tag));
}
constexpr std::uint64_t mix_tag(std::uint64_t hash, std::uint64_t tag) noexcept {
  return splitmix64(hash ^ splitmix64(tag + 0x51ED27ULL));
}
}  // namespace detail

/// Seed for a sub-computation, derived from a parent seed and a path of
/// string or integer tags (e.g. scenario, patient, feature).
template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t seed, const Tags&... tags) noexcept {
  std::uint64_t hash = splitmix64(seed);
  ((hash = detail::mix_tag(hash, tags)), ...);
  return hash;
}

std::string hex_digest(std::string_view text);

/// Seeded generator with platform-independent derived distributions.
/// std::*_distribution algorithms are implementation-defined, so only the
/// raw mt19937_64 stream is used and the transforms live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n) without modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n);
    std::uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return draw % n;
  }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<Index> permutation(Index n) {
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    shuffle(order);
    return order;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// %.17g formatting, used for every numeric value written to interchange files.
std::string format_double(double value);

/// Write `contents` to `path` via a temporary sibling and an atomic rename.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

}  // namespace embedprobe
