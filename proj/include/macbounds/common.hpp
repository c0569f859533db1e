#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace macbounds {

// Error types thrown on contract violations. All derive from std::runtime_error
// so callers that don't care about the category can catch one base.
struct invalid_problem : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct degenerate_conditioning : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct degenerate_basis : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct parameter_overflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct invalid_input : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64: cheap seed mixer used to derive independent per-worker /
// per-block seeds from a single user seed. Output sequence is fixed by the
// algorithm, so derived streams are stable across platforms and thread counts.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace macbounds
