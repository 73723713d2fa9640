#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dfpl {

// All randomness in a run flows from one root seed through named substreams,
// so that e.g. changing the shuffle order does not disturb weight init.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
    // FNV-1a over the stream name, mixed with the root via splitmix64.
    std::uint64_t h = 14695981039346656037ull;
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::uint64_t z = root + 0x9e3779b97f4a7c15ull + h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                                 std::uint64_t index) {
    return derive_seed(derive_seed(root, stream) + 0x632be59bd9b4e019ull * (index + 1),
                       stream);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(eng_);
    }
    std::int64_t integer(std::int64_t lo, std::int64_t hi) { // inclusive
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
    }
    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
};

} // namespace dfpl
