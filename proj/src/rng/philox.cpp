#include "palmkit/rng/philox.hpp"

#include <cmath>

#include "palmkit/errors.hpp"

namespace palmkit {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t c[4], std::uint32_t k0,
                         std::uint32_t k1) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  const std::uint32_t t1 = c[1], t3 = c[3];
  c[0] = hi1 ^ t1 ^ k0;
  c[1] = lo1;
  c[2] = hi0 ^ t3 ^ k1;
  c[3] = lo0;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

Rng::Rng(std::uint64_t seed, const std::string& stream_path)
    : seed_(seed), stream_id_(fnv1a64(stream_path)), path_(stream_path) {}

Rng Rng::stream(const std::string& name) const {
  return Rng(seed_, path_ + "/" + name);
}

void Rng::refill() {
  std::uint32_t c[4] = {
      static_cast<std::uint32_t>(block_),
      static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_id_),
      static_cast<std::uint32_t>(stream_id_ >> 32),
  };
  std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
  for (int r = 0; r < 10; ++r) {
    philox_round(c, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  buf_[0] = c[0];
  buf_[1] = c[1];
  buf_[2] = c[2];
  buf_[3] = c[3];
  buf_pos_ = 0;
  ++block_;
}

std::uint32_t Rng::next_u32() {
  if (buf_pos_ >= 4) refill();
  return buf_[buf_pos_++];
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return lo | (hi << 32);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_pos() { return 1.0 - uniform(); }

double Rng::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_normal_ = r * std::sin(a);
  has_spare_normal_ = true;
  return r * std::cos(a);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw ConfigError("gamma: shape must be positive");
  if (shape < 1.0) {
    const double boost = gamma(shape + 1.0);
    return boost * std::pow(uniform_pos(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::chi_square(double nu) {
  if (!(nu > 0.0)) throw ConfigError("chi_square: nu must be positive");
  return 2.0 * gamma(0.5 * nu);
}

std::int64_t Rng::uniform_int(std::int64_t n) {
  if (n <= 0) throw ConfigError("uniform_int: n must be positive");
  const unsigned __int128 prod =
      static_cast<unsigned __int128>(next_u64()) *
      static_cast<unsigned __int128>(static_cast<std::uint64_t>(n));
  return static_cast<std::int64_t>(prod >> 64);
}

}  // namespace palmkit
