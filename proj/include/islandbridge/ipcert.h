// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include "islandbridge/bytes.h"
#include "islandbridge/crypto.h"
#include "islandbridge/ipv4.h"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// A one-level PKI whose leaf certificates name an IPv4 address instead of a
// host name. Certificates use a fixed binary layout (all integers big-endian):
//
//   u8  version (=1)
//   u8[4] subject_ip
//   u16 key_len, u8[key_len] subject_public_key
//   u8  issuer_len, u8[issuer_len] issuer (UTF-8)
//   u64 serial
//   u64 not_before, u64 not_after   (unix seconds)
//   u16 sig_len, u8[sig_len] signature
//
// The signature is Ed25519 over every byte preceding sig_len.

namespace islandbridge::ipcert
{
  constexpr uint8_t cert_version = 1;

  enum class CertErrc
  {
    EmptyValidity,
    Malformed,
    UntrustedRoot,
  };

  class CertError : public std::runtime_error
  {
  public:
    CertError(CertErrc code, const std::string& detail);

    CertErrc code() const
    {
      return code_;
    }

  private:
    CertErrc code_;
  };

  struct Validity
  {
    int64_t not_before = 0;
    int64_t not_after = 0;
  };

  struct IpCertificate
  {
    Ipv4Address subject_ip;
    Bytes subject_public_key;
    std::string issuer;
    uint64_t serial = 0;
    Validity validity;
    Bytes signature;

    /// Every field before the signature, in wire layout.
    Bytes tbs_bytes() const;
    Bytes encode() const;
    static IpCertificate decode(ByteView bytes);

    friend bool operator==(const IpCertificate& a, const IpCertificate& b)
    {
      return a.encode() == b.encode();
    }
  };

  /// Self-signed root credential: signature over "ipcert-root" || name || key.
  struct CaRoot
  {
    std::string name;
    crypto::Key32 public_key{};
    Bytes self_signature;

    bool self_verifies() const;
  };

  class CaIdentity
  {
  public:
    static CaIdentity create(std::string name, const crypto::Key32& seed);

    const std::string& name() const
    {
      return root_.name;
    }

    const CaRoot& root() const
    {
      return root_;
    }

    Bytes sign(ByteView data) const
    {
      return keypair_.sign(data);
    }

  private:
    CaRoot root_;
    crypto::Ed25519KeyPair keypair_;
  };

  class TrustStore
  {
  public:
    TrustStore() = default;

    /// Rejects (CertError::UntrustedRoot) a root that does not verify
    /// under its own key.
    void add(const CaRoot& root);

    bool empty() const
    {
      return roots_.empty();
    }

    const std::vector<CaRoot>& roots() const
    {
      return roots_;
    }

  private:
    std::vector<CaRoot> roots_;
  };

  IpCertificate issue_cert(
    const CaIdentity& ca,
    Ipv4Address subject_ip,
    ByteView subject_key,
    Validity validity);

  enum class CertRejection
  {
    IpMismatch,
    UnknownIssuer,
    BadSignature,
    Expired,
    NotYetValid,
  };

  std::string_view to_string(CertRejection r);

  struct CertVerdict
  {
    std::optional<CertRejection> rejection;

    bool accepted() const
    {
      return !rejection;
    }
  };

  /// Reason priority: IpMismatch, UnknownIssuer, BadSignature, then the
  /// validity window.
  CertVerdict verify_cert(
    const IpCertificate& cert,
    Ipv4Address expected_ip,
    const TrustStore& store,
    int64_t now);
}
