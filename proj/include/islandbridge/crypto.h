// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include "islandbridge/bytes.h"

#include <array>
#include <sodium/crypto_hash_sha256.h>
#include <optional>
#include <string_view>

// Thin value-type wrappers over libsodium primitives. Everything in here is
// deterministic given its inputs; no call reads ambient entropy.

namespace islandbridge::crypto
{
  using Digest = std::array<uint8_t, 32>;
  using Key32 = std::array<uint8_t, 32>;
  using Nonce12 = std::array<uint8_t, 12>;

  Digest sha256(ByteView data);

  /// Incremental SHA-256. Copyable, so a running transcript can be forked
  /// to read an intermediate hash without disturbing the original.
  class Sha256
  {
  public:
    Sha256();
    Sha256& update(ByteView data);
    Digest digest() const;

  private:
    crypto_hash_sha256_state state_;
  };

  Digest hmac_sha256(ByteView key, ByteView data);

  /// RFC 5869 extract-then-expand over HMAC-SHA256.
  Bytes hkdf_sha256(ByteView salt, ByteView ikm, ByteView info, size_t length);

  struct Ed25519KeyPair
  {
    Key32 public_key{};
    std::array<uint8_t, 64> secret_key{};

    static Ed25519KeyPair from_seed(const Key32& seed);
    Bytes sign(ByteView message) const;

    friend bool operator==(const Ed25519KeyPair&, const Ed25519KeyPair&) =
      default;
  };

  bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature);

  struct X25519KeyPair
  {
    Key32 public_key{};
    Key32 secret_key{};

    static X25519KeyPair from_seed(const Key32& seed);

    friend bool operator==(const X25519KeyPair&, const X25519KeyPair&) =
      default;
  };

  /// Returns nullopt when the peer key is malformed or yields the all-zero
  /// shared secret.
  std::optional<Key32> x25519(const Key32& secret_key, ByteView peer_public);

  constexpr size_t aead_tag_size = 16;

  /// ChaCha20-Poly1305 (IETF, 96-bit nonce).
  Bytes aead_seal(
    const Key32& key, const Nonce12& nonce, ByteView ad, ByteView plaintext);
  std::optional<Bytes> aead_open(
    const Key32& key, const Nonce12& nonce, ByteView ad, ByteView ciphertext);

  /// Deterministic byte stream: HMAC-SHA256(key, counter) blocks with
  /// key = SHA-256(label || seed).
  class Drbg
  {
  public:
    Drbg(ByteView seed, std::string_view label);

    Bytes generate(size_t n);
    Key32 generate32();
    uint64_t next_u64();

  private:
    Key32 key_{};
    uint64_t counter_ = 0;
    Bytes buffer_;
  };
}
