#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <boost/random/normal_distribution.hpp>

namespace stovol {

/// Random engine used by every simulator. One engine per stream, never shared
/// across threads.
using Engine = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the purpose tag.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : tag) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Counter-based seed derivation: seed = mix(mix(mix(base) ^ tag) ^ index).
///
/// Every stochastic quantity in the library is drawn from an engine seeded
/// through this function, so a run is reproducible from (base seed, purpose
/// tag, replication index) alone and independent of thread scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                    std::uint64_t index) noexcept {
  std::uint64_t s = detail::splitmix64(base);
  s = detail::splitmix64(s ^ detail::tag_hash(tag));
  return detail::splitmix64(s ^ index);
}

inline Engine make_engine(std::uint64_t base, std::string_view tag, std::uint64_t index) {
  return Engine(derive_seed(base, tag, index));
}

// Purpose tags for the two independent streams of the price/volatility model.
inline constexpr std::string_view kVolatilityStream = "volatility";
inline constexpr std::string_view kPriceStream = "price";

/// Standard normal sampler (ziggurat) bound to an engine reference.
class NormalStream {
 public:
  explicit NormalStream(Engine& engine) : engine_(&engine) {}
  double operator()() { return dist_(*engine_); }

 private:
  Engine* engine_;
  boost::random::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace stovol
