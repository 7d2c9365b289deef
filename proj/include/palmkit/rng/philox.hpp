#pragma once

#include <cstdint>
#include <string>

// Counter-based RNG (Philox4x32-10) so runs are bit-exact across platforms
// and substreams can be derived by name instead of by draw order.  A stream
// is identified by the 64-bit seed (the key) plus a 64-bit stream id derived
// from the stream path by FNV-1a; the block counter occupies the low two
// counter words and the stream id the high two.
//
// All distribution transforms are fixed and documented:
//  * uniform():      53-bit mantissa, (u64 >> 11) * 2^-53, in [0,1)
//  * uniform_pos():  1 - uniform(), in (0,1]
//  * normal():       Box-Muller (cos branch first, sin branch cached)
//  * gamma():        Marsaglia-Tsang squeeze; shape < 1 boosted via
//                    gamma(shape+1) * u^(1/shape)
//  * uniform_int(n): multiply-high map of one u64 onto [0,n)
//  * chi_square(nu): 2 * gamma(nu/2)

namespace palmkit {

class Rng {
 public:
  explicit Rng(std::uint64_t seed, const std::string& stream_path = "root");

  // Derive an independent named substream; path becomes "parent/name".
  Rng stream(const std::string& name) const;

  const std::string& path() const { return path_; }
  std::uint64_t seed() const { return seed_; }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  double uniform();
  double uniform_pos();
  double normal();
  double gamma(double shape);
  double chi_square(double nu);
  std::int64_t uniform_int(std::int64_t n);  // [0, n)

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::string path_;
  std::uint64_t block_ = 0;   // Philox counter (low 64 bits)
  std::uint32_t buf_[4] = {}; // current generated block
  int buf_pos_ = 4;           // 4 = exhausted
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;

  void refill();
};

std::uint64_t fnv1a64(const std::string& s);

}  // namespace palmkit
