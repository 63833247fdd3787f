// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include "islandbridge/crypto.h"
#include "islandbridge/wire.h"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace islandbridge::dnssec
{
  constexpr uint8_t algorithm_ed25519 = 15;
  constexpr uint8_t digest_sha256 = 2;
  constexpr uint16_t flag_zone_key = 0x0100;
  constexpr uint16_t flag_sep = 0x0001;
  constexpr uint8_t dnskey_protocol = 3;

  enum class DnssecErrc
  {
    KskMisuse,
    EmptyRrset,
    EmptyValidity,
    UnsupportedDigest,
  };

  class DnssecError : public std::runtime_error
  {
  public:
    explicit DnssecError(DnssecErrc code, const std::string& detail = {});

    DnssecErrc code() const
    {
      return code_;
    }

  private:
    DnssecErrc code_;
  };

  /// RFC 4034 appendix B checksum over DNSKEY rdata.
  uint16_t compute_key_tag(ByteView dnskey_rdata);

  struct Dnskey
  {
    wire::DomainName owner;
    wire::DnskeyRdata rdata;

    uint16_t key_tag() const;
    bool is_zone_key() const
    {
      return rdata.flags & flag_zone_key;
    }
    bool is_ksk() const
    {
      return rdata.flags & flag_sep;
    }

    wire::ResourceRecord to_record(uint32_t ttl) const;
    static std::optional<Dnskey> from_record(const wire::ResourceRecord& rr);

    friend bool operator==(const Dnskey&, const Dnskey&) = default;
  };

  struct Rrsig
  {
    wire::DomainName owner;
    wire::RrsigRdata rdata;

    wire::ResourceRecord to_record(uint32_t ttl) const;
    static std::optional<Rrsig> from_record(const wire::ResourceRecord& rr);

    friend bool operator==(const Rrsig&, const Rrsig&) = default;
  };

  struct Ds
  {
    wire::DomainName owner;
    wire::DsRdata rdata;

    wire::ResourceRecord to_record(uint32_t ttl) const;
    static std::optional<Ds> from_record(const wire::ResourceRecord& rr);

    friend bool operator==(const Ds&, const Ds&) = default;
  };

  /// The resolver's configured DS for the root zone.
  struct TrustAnchor
  {
    wire::DomainName zone;
    Ds ds;
  };

  TrustAnchor make_trust_anchor(const Ds& root_ds);

  enum class KeyRole
  {
    Zsk,
    Ksk,
  };

  struct ZoneKeys
  {
    wire::DomainName zone;
    crypto::Ed25519KeyPair zsk;
    crypto::Ed25519KeyPair ksk;

    Dnskey zsk_dnskey() const;
    Dnskey ksk_dnskey() const;
    /// Both public keys as a DNSKEY RRset owned by the zone apex.
    wire::RRset dnskey_rrset(uint32_t ttl) const;
  };

  /// Deterministic: zsk from HMAC-SHA256(seed, "zsk"), ksk from
  /// HMAC-SHA256(seed, "ksk").
  ZoneKeys generate_zone_keys(
    const wire::DomainName& zone, const crypto::Key32& seed);

  struct Validity
  {
    uint32_t inception = 0;
    uint32_t expiration = 0;
  };

  /// Bytes covered by an RRSIG: the rdata fields up to and including the
  /// signer name (canonical, no signature), followed by the canonical RRset.
  Bytes rrsig_signed_data(
    const wire::RrsigRdata& fields, std::span<const wire::ResourceRecord> rrset);

  Rrsig sign_rrset(
    std::span<const wire::ResourceRecord> rrset,
    const ZoneKeys& keys,
    KeyRole which,
    Validity validity);

  enum class VerifyFailure
  {
    BadSignature,
    Expired,
    NotYetValid,
    KeyMismatch,
  };

  std::string_view to_string(VerifyFailure f);

  struct VerifyResult
  {
    std::optional<VerifyFailure> failure;

    bool valid() const
    {
      return !failure;
    }
  };

  /// Checks, in order: key tag, algorithm, signer and zone-key bit against
  /// `key` (KeyMismatch); covered type and signature (BadSignature); then the
  /// validity window against `now`.
  VerifyResult verify_rrsig(
    std::span<const wire::ResourceRecord> rrset,
    const Rrsig& rrsig,
    const Dnskey& key,
    int64_t now);

  /// digest = SHA-256(canonical owner wire name || DNSKEY rdata).
  Ds compute_ds(const Dnskey& child_dnskey, uint8_t digest_type = digest_sha256);

  bool match_ds(const Ds& ds, const Dnskey& child_dnskey);
}
