#pragma once

#include <cstdint>
#include <random>

namespace mafla {

/// A reproducible random stream identified by (seed, stream_id).
///
/// Two streams with the same pair produce bit-identical output. Distinct
/// pairs seed the Mersenne Twister through std::seed_seq, which decorrelates
/// nearby ids.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return normal_(engine_); }
  double exponential() { return exponential_(engine_); }
  std::uint64_t bits() { return engine_(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::exponential_distribution<double> exponential_{1.0};
};

/// Mixes a base stream id with a purpose tag and an index into a child id.
std::uint64_t derive_stream_id(std::uint64_t base, std::uint64_t purpose, std::uint64_t index);

}  // namespace mafla
