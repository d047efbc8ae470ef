#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace ctstack {

inline constexpr std::string_view kToolName = "ctstack";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// SplitMix64 finalizer; the toolkit's one deterministic mixing primitive.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Upper 53 bits of x as a uniform double in [0, 1).
constexpr double unit_uniform(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Small deterministic generator with an identical stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double uniform() { return unit_uniform(next()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Inclusive bounds.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next() %
                                 static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

/// Runs body(0..count-1) on up to `workers` threads. Exceptions from the
/// body are rethrown on the calling thread (first one wins).
void parallel_for(int count, int workers, const std::function<void(int)>& body);

std::string read_file(const std::filesystem::path& path);

/// Writes via a temp file in the same directory plus rename, creating
/// parent directories as needed.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view bytes);

/// FNV-1a over the file content.
std::uint64_t digest_file(const std::filesystem::path& path);

/// Digest of a file or directory tree (relative names + contents, sorted).
std::uint64_t digest_tree(const std::filesystem::path& path);

std::string to_hex(std::uint64_t value);

/// Pipe-delimited text table with a header rule, aligned columns.
std::string format_comparison_table(
    const std::vector<std::string>& header,
    const std::vector<std::vector<std::string>>& rows);

}  // namespace ctstack
