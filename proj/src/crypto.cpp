// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/crypto.h"

#include <sodium.h>
#include <stdexcept>

namespace islandbridge::crypto
{
  namespace
  {
    void ensure_init()
    {
      static const int rc = sodium_init();
      if (rc < 0)
        throw std::runtime_error("libsodium initialisation failed");
    }
  }

  Digest sha256(ByteView data)
  {
    ensure_init();
    Digest out;
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
  }

  Sha256::Sha256()
  {
    ensure_init();
    crypto_hash_sha256_init(&state_);
  }

  Sha256& Sha256::update(ByteView data)
  {
    crypto_hash_sha256_update(&state_, data.data(), data.size());
    return *this;
  }

  Digest Sha256::digest() const
  {
    auto copy = state_;
    Digest out;
    crypto_hash_sha256_final(&copy, out.data());
    return out;
  }

  Digest hmac_sha256(ByteView key, ByteView data)
  {
    ensure_init();
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, key.data(), key.size());
    crypto_auth_hmacsha256_update(&st, data.data(), data.size());
    Digest out;
    crypto_auth_hmacsha256_final(&st, out.data());
    return out;
  }

  Bytes hkdf_sha256(ByteView salt, ByteView ikm, ByteView info, size_t length)
  {
    if (length > 255 * 32)
      throw std::invalid_argument("hkdf output too long");

    static const Bytes zero_salt(32, 0);
    auto prk = hmac_sha256(salt.empty() ? ByteView(zero_salt) : salt, ikm);

    Bytes out;
    out.reserve(length);
    Bytes block;
    for (uint8_t i = 1; out.size() < length; ++i)
    {
      Bytes input = block;
      append(input, info);
      input.push_back(i);
      auto t = hmac_sha256(prk, input);
      block.assign(t.begin(), t.end());
      size_t take = std::min(block.size(), length - out.size());
      out.insert(out.end(), block.begin(), block.begin() + take);
    }
    sodium_memzero(prk.data(), prk.size());
    return out;
  }

  Ed25519KeyPair Ed25519KeyPair::from_seed(const Key32& seed)
  {
    ensure_init();
    Ed25519KeyPair kp;
    crypto_sign_seed_keypair(
      kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
  }

  Bytes Ed25519KeyPair::sign(ByteView message) const
  {
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(
      sig.data(), nullptr, message.data(), message.size(), secret_key.data());
    return sig;
  }

  bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature)
  {
    ensure_init();
    if (
      public_key.size() != crypto_sign_PUBLICKEYBYTES ||
      signature.size() != crypto_sign_BYTES)
      return false;
    return crypto_sign_verify_detached(
             signature.data(),
             message.data(),
             message.size(),
             public_key.data()) == 0;
  }

  X25519KeyPair X25519KeyPair::from_seed(const Key32& seed)
  {
    ensure_init();
    X25519KeyPair kp;
    // Clamping happens inside scalarmult; the seed is used as the scalar.
    kp.secret_key = seed;
    crypto_scalarmult_base(kp.public_key.data(), kp.secret_key.data());
    return kp;
  }

  std::optional<Key32> x25519(const Key32& secret_key, ByteView peer_public)
  {
    ensure_init();
    if (peer_public.size() != crypto_scalarmult_BYTES)
      return std::nullopt;
    Key32 shared;
    if (
      crypto_scalarmult(shared.data(), secret_key.data(), peer_public.data()) !=
      0)
      return std::nullopt;
    return shared;
  }

  Bytes aead_seal(
    const Key32& key, const Nonce12& nonce, ByteView ad, ByteView plaintext)
  {
    ensure_init();
    Bytes out(plaintext.size() + crypto_aead_chacha20poly1305_ietf_ABYTES);
    unsigned long long out_len = 0;
    crypto_aead_chacha20poly1305_ietf_encrypt(
      out.data(),
      &out_len,
      plaintext.data(),
      plaintext.size(),
      ad.data(),
      ad.size(),
      nullptr,
      nonce.data(),
      key.data());
    out.resize(out_len);
    return out;
  }

  std::optional<Bytes> aead_open(
    const Key32& key, const Nonce12& nonce, ByteView ad, ByteView ciphertext)
  {
    ensure_init();
    if (ciphertext.size() < crypto_aead_chacha20poly1305_ietf_ABYTES)
      return std::nullopt;
    Bytes out(ciphertext.size());
    unsigned long long out_len = 0;
    if (
      crypto_aead_chacha20poly1305_ietf_decrypt(
        out.data(),
        &out_len,
        nullptr,
        ciphertext.data(),
        ciphertext.size(),
        ad.data(),
        ad.size(),
        nonce.data(),
        key.data()) != 0)
      return std::nullopt;
    out.resize(out_len);
    return out;
  }

  Drbg::Drbg(ByteView seed, std::string_view label)
  {
    Sha256 h;
    h.update(ByteView(reinterpret_cast<const uint8_t*>(label.data()), label.size()));
    h.update(seed);
    key_ = h.digest();
  }

  Bytes Drbg::generate(size_t n)
  {
    while (buffer_.size() < n)
    {
      Bytes ctr;
      put_u64(ctr, counter_++);
      auto block = hmac_sha256(key_, ctr);
      buffer_.insert(buffer_.end(), block.begin(), block.end());
    }
    Bytes out(buffer_.begin(), buffer_.begin() + n);
    buffer_.erase(buffer_.begin(), buffer_.begin() + n);
    return out;
  }

  Key32 Drbg::generate32()
  {
    auto b = generate(32);
    Key32 out;
    std::copy(b.begin(), b.end(), out.begin());
    return out;
  }

  uint64_t Drbg::next_u64()
  {
    auto b = generate(8);
    ByteReader r(b);
    return r.u64();
  }
}
