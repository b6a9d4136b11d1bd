//
// Copyright 2026 The dpcore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPCORE_RANDOM_SOURCE_H_
#define DPCORE_RANDOM_SOURCE_H_

#include <sodium.h>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <span>
#include <utility>

namespace dpcore {

namespace testing {
class ScriptedSourceFactory;
}  // namespace testing

namespace internal {

// Byte stream behind a RandomSource.
class BitStream {
 public:
  virtual ~BitStream() = default;
  virtual void Fill(std::uint8_t* out, std::size_t len) = 0;
};

// ChaCha20 keystream (libsodium, 64-bit block counter). The key is wiped on
// destruction.
class ChaCha20Stream final : public BitStream {
 public:
  explicit ChaCha20Stream(
      const std::array<std::uint8_t, crypto_stream_chacha20_KEYBYTES>& key)
      : key_(key) {}
  ~ChaCha20Stream() override { sodium_memzero(key_.data(), key_.size()); }

  ChaCha20Stream(const ChaCha20Stream&) = delete;
  ChaCha20Stream& operator=(const ChaCha20Stream&) = delete;

  void Fill(std::uint8_t* out, std::size_t len) override {
    // Whole 64-byte blocks only, so the counter never re-emits a partial
    // block.
    constexpr std::size_t kBlock = 64;
    while (len > 0) {
      std::size_t chunk = std::min<std::size_t>(len, kBlockBuffer);
      std::size_t blocks = (chunk + kBlock - 1) / kBlock;
      std::memset(scratch_.data(), 0, blocks * kBlock);
      crypto_stream_chacha20_xor_ic(scratch_.data(), scratch_.data(),
                                    blocks * kBlock, nonce_.data(), counter_,
                                    key_.data());
      counter_ += blocks;
      std::memcpy(out, scratch_.data(), chunk);
      sodium_memzero(scratch_.data(), blocks * kBlock);
      out += chunk;
      len -= chunk;
    }
  }

 private:
  static constexpr std::size_t kBlockBuffer = 4096;
  std::array<std::uint8_t, crypto_stream_chacha20_KEYBYTES> key_;
  std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> nonce_{};
  std::uint64_t counter_ = 0;
  std::array<std::uint8_t, kBlockBuffer> scratch_{};
};

inline void EnsureSodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) std::abort();
    return true;
  }();
  (void)ready;
}

}  // namespace internal

// Cryptographically secure randomness handle. A source is either rooted in
// operating-system entropy or derived from another source; there is no way to
// seed one from a number, a file or a configuration value.
//
// One source is used by one thread at a time. Give parallel workers their own
// Derive()d child.
//
// Satisfies UniformRandomBitGenerator so standard distributions can run on
// top of it where the audit code needs them.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  static RandomSource FromOsEntropy() {
    internal::EnsureSodium();
    std::array<std::uint8_t, crypto_stream_chacha20_KEYBYTES> key;
    randombytes_buf(key.data(), key.size());
    RandomSource source(std::make_unique<internal::ChaCha20Stream>(key));
    sodium_memzero(key.data(), key.size());
    return source;
  }

  RandomSource(RandomSource&&) noexcept = default;
  RandomSource& operator=(RandomSource&&) noexcept = default;
  RandomSource(const RandomSource&) = delete;
  RandomSource& operator=(const RandomSource&) = delete;

  // Child keyed with fresh output of this stream. Distinct calls give
  // distinct, independent streams.
  RandomSource Derive() {
    internal::EnsureSodium();
    std::array<std::uint8_t, crypto_stream_chacha20_KEYBYTES> key;
    Fill(key);
    RandomSource child(std::make_unique<internal::ChaCha20Stream>(key));
    sodium_memzero(key.data(), key.size());
    return child;
  }

  std::uint64_t NextU64() {
    if (cursor_ == buffer_.size()) Refill();
    return buffer_[cursor_++];
  }

  result_type operator()() { return NextU64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  void Fill(std::span<std::uint8_t> out) {
    for (std::size_t i = 0; i < out.size(); i += 8) {
      std::uint64_t word = NextU64();
      std::size_t n = std::min<std::size_t>(8, out.size() - i);
      std::memcpy(out.data() + i, &word, n);
    }
  }

  ~RandomSource() {
    if (stream_ != nullptr) {
      sodium_memzero(buffer_.data(), buffer_.size() * sizeof(std::uint64_t));
    }
  }

 private:
  friend class testing::ScriptedSourceFactory;

  explicit RandomSource(std::unique_ptr<internal::BitStream> stream)
      : stream_(std::move(stream)) {}

  void Refill() {
    stream_->Fill(reinterpret_cast<std::uint8_t*>(buffer_.data()),
                  buffer_.size() * sizeof(std::uint64_t));
    cursor_ = 0;
  }

  std::unique_ptr<internal::BitStream> stream_;
  std::array<std::uint64_t, 256> buffer_{};
  std::size_t cursor_ = 256;
};

}  // namespace dpcore

#endif  // DPCORE_RANDOM_SOURCE_H_
