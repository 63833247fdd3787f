// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

// Independent reference implementations backed by OpenSSL, used to check
// the libsodium-based primitives and everything derived from them.

#include "islandbridge/bytes.h"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/kdf.h>

#include <array>
#include <optional>
#include <stdexcept>

namespace oracle
{
  using islandbridge::ByteView;
  using islandbridge::Bytes;

  inline void check(int ok, const char* what)
  {
    if (ok <= 0)
      throw std::runtime_error(std::string("openssl: ") + what);
  }

  inline Bytes sha256(ByteView data)
  {
    Bytes out(32);
    unsigned int len = 0;
    check(EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr), "digest");
    return out;
  }

  inline Bytes hmac_sha256(ByteView key, ByteView data)
  {
    Bytes out(32);
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), out.data(), &len))
      throw std::runtime_error("openssl: hmac");
    return out;
  }

  inline Bytes hkdf_sha256(ByteView salt, ByteView ikm, ByteView info, size_t length)
  {
    EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr);
    Bytes out(length);
    size_t len = length;
    check(EVP_PKEY_derive_init(ctx), "hkdf init");
    check(EVP_PKEY_CTX_set_hkdf_md(ctx, EVP_sha256()), "hkdf md");
    check(EVP_PKEY_CTX_set1_hkdf_salt(ctx, salt.data(), static_cast<int>(salt.size())), "salt");
    check(EVP_PKEY_CTX_set1_hkdf_key(ctx, ikm.data(), static_cast<int>(ikm.size())), "key");
    check(EVP_PKEY_CTX_add1_hkdf_info(ctx, info.data(), static_cast<int>(info.size())), "info");
    check(EVP_PKEY_derive(ctx, out.data(), &len), "derive");
    EVP_PKEY_CTX_free(ctx);
    return out;
  }

  /// ChaCha20-Poly1305 seal; returns ciphertext || tag.
  inline Bytes chacha_seal(ByteView key, ByteView nonce, ByteView ad, ByteView pt)
  {
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    Bytes out(pt.size() + 16);
    int len = 0;
    check(EVP_EncryptInit_ex(ctx, EVP_chacha20_poly1305(), nullptr, nullptr, nullptr), "init");
    check(EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_AEAD_SET_IVLEN, static_cast<int>(nonce.size()), nullptr), "ivlen");
    check(EVP_EncryptInit_ex(ctx, nullptr, nullptr, key.data(), nonce.data()), "key");
    check(EVP_EncryptUpdate(ctx, nullptr, &len, ad.data(), static_cast<int>(ad.size())), "ad");
    check(EVP_EncryptUpdate(ctx, out.data(), &len, pt.data(), static_cast<int>(pt.size())), "pt");
    check(EVP_EncryptFinal_ex(ctx, out.data() + len, &len), "final");
    check(EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_AEAD_GET_TAG, 16, out.data() + pt.size()), "tag");
    EVP_CIPHER_CTX_free(ctx);
    return out;
  }

  /// X25519 shared secret from raw 32-byte keys.
  inline Bytes x25519(ByteView secret, ByteView peer_public)
  {
    EVP_PKEY* priv = EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, secret.data(), secret.size());
    EVP_PKEY* pub = EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_public.data(), peer_public.size());
    EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new(priv, nullptr);
    Bytes out(32);
    size_t len = 32;
    check(EVP_PKEY_derive_init(ctx), "x25519 init");
    check(EVP_PKEY_derive_set_peer(ctx, pub), "peer");
    check(EVP_PKEY_derive(ctx, out.data(), &len), "derive");
    EVP_PKEY_CTX_free(ctx);
    EVP_PKEY_free(pub);
    EVP_PKEY_free(priv);
    return out;
  }

  inline bool ed25519_verify(ByteView public_key, ByteView msg, ByteView sig)
  {
    EVP_PKEY* pub = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(), public_key.size());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    bool ok = EVP_DigestVerifyInit(ctx, nullptr, nullptr, nullptr, pub) == 1 &&
      EVP_DigestVerify(ctx, sig.data(), sig.size(), msg.data(), msg.size()) == 1;
    EVP_MD_CTX_free(ctx);
    EVP_PKEY_free(pub);
    return ok;
  }
}
