#include "mafla/rng.hpp"

#include <array>

namespace mafla {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
  std::array<std::uint32_t, 5> words{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32), 0x6d61666cU};
  std::seed_seq seq(words.begin(), words.end());
  engine_.seed(seq);
}

double RngStream::uniform() {
  double u = 0.0;
  do {
    u = uniform_(engine_);
  } while (u <= 0.0 || u >= 1.0);
  return u;
}

std::uint64_t RngStream::below(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

std::uint64_t derive_stream_id(std::uint64_t base, std::uint64_t purpose, std::uint64_t index) {
  return splitmix64(splitmix64(base ^ (purpose * 0x2545f4914f6cdd1dULL)) + index);
}

}  // namespace mafla
