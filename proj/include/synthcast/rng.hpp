#pragma once

// Counter-based random streams (Philox 4x32-10, Salmon et al. SC'11).
// A stream is fully determined by (master_seed, stream_id), so replication r
// can always consume stream r no matter how work is scheduled across threads.

#include <cstdint>
#include <cmath>

namespace synthcast {

class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : master_seed_(master_seed), stream_id_(stream_id) {
    key_[0] = static_cast<std::uint32_t>(master_seed);
    key_[1] = static_cast<std::uint32_t>(master_seed >> 32);
    sid_[0] = static_cast<std::uint32_t>(stream_id);
    sid_[1] = static_cast<std::uint32_t>(stream_id >> 32);
  }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() {
    if (buf_pos_ >= 4) refill();
    std::uint64_t lo = buf_[buf_pos_];
    std::uint64_t hi = buf_[buf_pos_ + 1];
    buf_pos_ += 2;
    return (hi << 32) | lo;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller, caching the paired deviate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = uniform_pos();
    double v = uniform01();
    double r = std::sqrt(-2.0 * std::log(u));
    double angle = 6.283185307179586476925286766559 * v;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  void refill() {
    std::uint32_t ctr[4] = {static_cast<std::uint32_t>(block_),
                            static_cast<std::uint32_t>(block_ >> 32), sid_[0],
                            sid_[1]};
    std::uint32_t key[2] = {key_[0], key_[1]};
    for (int round = 0; round < 10; ++round) {
      one_round(ctr, key);
      key[0] += 0x9E3779B9u;  // golden-ratio Weyl increments
      key[1] += 0xBB67AE85u;
    }
    buf_[0] = ctr[0];
    buf_[1] = ctr[1];
    buf_[2] = ctr[2];
    buf_[3] = ctr[3];
    buf_pos_ = 0;
    ++block_;
  }

  static void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t* lo,
                       std::uint32_t* hi) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    *lo = static_cast<std::uint32_t>(p);
    *hi = static_cast<std::uint32_t>(p >> 32);
  }

  static void one_round(std::uint32_t ctr[4], const std::uint32_t key[2]) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mul_hilo(0xD2511F53u, ctr[0], &lo0, &hi0);
    mul_hilo(0xCD9E8D57u, ctr[2], &lo1, &hi1);
    std::uint32_t out0 = hi1 ^ ctr[1] ^ key[0];
    std::uint32_t out2 = hi0 ^ ctr[3] ^ key[1];
    ctr[0] = out0;
    ctr[1] = lo1;
    ctr[2] = out2;
    ctr[3] = lo0;
  }

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint32_t key_[2];
  std::uint32_t sid_[2];
  std::uint64_t block_ = 0;
  std::uint32_t buf_[4] = {0, 0, 0, 0};
  int buf_pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace synthcast
