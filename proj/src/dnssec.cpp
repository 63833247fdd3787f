// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/dnssec.h"

namespace islandbridge::dnssec
{
  namespace
  {
    std::string_view to_string(DnssecErrc code)
    {
      switch (code)
      {
        case DnssecErrc::KskMisuse:
          return "KskMisuse";
        case DnssecErrc::EmptyRrset:
          return "EmptyRrset";
        case DnssecErrc::EmptyValidity:
          return "EmptyValidity";
        case DnssecErrc::UnsupportedDigest:
          return "UnsupportedDigest";
      }
      return "?";
    }

    Bytes owner_wire(const wire::DomainName& name)
    {
      // Canonical wire form of a bare name is the same bytes the canonical
      // rdata encoder would emit for an NS target.
      return wire::encode_rdata(wire::NsRdata{name}, true);
    }
  }

  DnssecError::DnssecError(DnssecErrc code, const std::string& detail) :
    std::runtime_error(
      std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
    code_(code)
  {}

  std::string_view to_string(VerifyFailure f)
  {
    switch (f)
    {
      case VerifyFailure::BadSignature:
        return "BadSignature";
      case VerifyFailure::Expired:
        return "Expired";
      case VerifyFailure::NotYetValid:
        return "NotYetValid";
      case VerifyFailure::KeyMismatch:
        return "KeyMismatch";
    }
    return "?";
  }

  uint16_t compute_key_tag(ByteView rdata)
  {
    uint32_t ac = 0;
    for (size_t i = 0; i < rdata.size(); ++i)
      ac += (i & 1) ? rdata[i] : uint32_t(rdata[i]) << 8;
    ac += (ac >> 16) & 0xFFFF;
    return static_cast<uint16_t>(ac & 0xFFFF);
  }

  uint16_t Dnskey::key_tag() const
  {
    return compute_key_tag(wire::encode_rdata(rdata));
  }

  wire::ResourceRecord Dnskey::to_record(uint32_t ttl) const
  {
    return {owner, ttl, rdata};
  }

  std::optional<Dnskey> Dnskey::from_record(const wire::ResourceRecord& rr)
  {
    if (auto k = std::get_if<wire::DnskeyRdata>(&rr.rdata))
      return Dnskey{rr.owner, *k};
    return std::nullopt;
  }

  wire::ResourceRecord Rrsig::to_record(uint32_t ttl) const
  {
    return {owner, ttl, rdata};
  }

  std::optional<Rrsig> Rrsig::from_record(const wire::ResourceRecord& rr)
  {
    if (auto s = std::get_if<wire::RrsigRdata>(&rr.rdata))
      return Rrsig{rr.owner, *s};
    return std::nullopt;
  }

  wire::ResourceRecord Ds::to_record(uint32_t ttl) const
  {
    return {owner, ttl, rdata};
  }

  std::optional<Ds> Ds::from_record(const wire::ResourceRecord& rr)
  {
    if (auto d = std::get_if<wire::DsRdata>(&rr.rdata))
      return Ds{rr.owner, *d};
    return std::nullopt;
  }

  TrustAnchor make_trust_anchor(const Ds& root_ds)
  {
    if (!root_ds.owner.is_root())
      throw std::invalid_argument("trust anchor must be for the root zone");
    return {wire::DomainName::root(), root_ds};
  }

  Dnskey ZoneKeys::zsk_dnskey() const
  {
    return Dnskey{
      zone,
      {flag_zone_key,
       dnskey_protocol,
       algorithm_ed25519,
       Bytes(zsk.public_key.begin(), zsk.public_key.end())}};
  }

  Dnskey ZoneKeys::ksk_dnskey() const
  {
    return Dnskey{
      zone,
      {static_cast<uint16_t>(flag_zone_key | flag_sep),
       dnskey_protocol,
       algorithm_ed25519,
       Bytes(ksk.public_key.begin(), ksk.public_key.end())}};
  }

  wire::RRset ZoneKeys::dnskey_rrset(uint32_t ttl) const
  {
    return {ksk_dnskey().to_record(ttl), zsk_dnskey().to_record(ttl)};
  }

  ZoneKeys generate_zone_keys(
    const wire::DomainName& zone, const crypto::Key32& seed)
  {
    auto zsk_seed = crypto::hmac_sha256(seed, to_bytes("zsk"));
    auto ksk_seed = crypto::hmac_sha256(seed, to_bytes("ksk"));
    return ZoneKeys{
      zone,
      crypto::Ed25519KeyPair::from_seed(zsk_seed),
      crypto::Ed25519KeyPair::from_seed(ksk_seed)};
  }

  Bytes rrsig_signed_data(
    const wire::RrsigRdata& fields, std::span<const wire::ResourceRecord> rrset)
  {
    auto unsigned_fields = fields;
    unsigned_fields.signature.clear();
    Bytes out = wire::encode_rdata(unsigned_fields, true);
    append(out, wire::canonical_rrset_bytes(rrset));
    return out;
  }

  Rrsig sign_rrset(
    std::span<const wire::ResourceRecord> rrset,
    const ZoneKeys& keys,
    KeyRole which,
    Validity validity)
  {
    if (rrset.empty())
      throw DnssecError(DnssecErrc::EmptyRrset);
    if (validity.inception >= validity.expiration)
      throw DnssecError(DnssecErrc::EmptyValidity);

    const auto covered = rrset.front().type();
    if (which == KeyRole::Ksk && covered != wire::RType::DNSKEY)
      throw DnssecError(
        DnssecErrc::KskMisuse,
        "KSK may only sign DNSKEY, not " + std::string(wire::to_string(covered)));

    const auto& owner = rrset.front().owner;
    const auto key =
      which == KeyRole::Ksk ? keys.ksk_dnskey() : keys.zsk_dnskey();
    const auto& pair = which == KeyRole::Ksk ? keys.ksk : keys.zsk;

    wire::RrsigRdata fields;
    fields.type_covered = covered;
    fields.algorithm = algorithm_ed25519;
    fields.labels = static_cast<uint8_t>(owner.label_count());
    fields.original_ttl = rrset.front().ttl;
    fields.expiration = validity.expiration;
    fields.inception = validity.inception;
    fields.key_tag = key.key_tag();
    fields.signer = keys.zone;

    fields.signature = pair.sign(rrsig_signed_data(fields, rrset));
    return Rrsig{owner, std::move(fields)};
  }

  VerifyResult verify_rrsig(
    std::span<const wire::ResourceRecord> rrset,
    const Rrsig& rrsig,
    const Dnskey& key,
    int64_t now)
  {
    const auto& f = rrsig.rdata;
    if (
      f.key_tag != key.key_tag() || f.algorithm != key.rdata.algorithm ||
      !(f.signer == key.owner) || !key.is_zone_key() ||
      key.rdata.protocol != dnskey_protocol)
      return {VerifyFailure::KeyMismatch};

    if (
      rrset.empty() || rrset.front().type() != f.type_covered ||
      !(rrset.front().owner == rrsig.owner))
      return {VerifyFailure::BadSignature};

    Bytes signed_data;
    try
    {
      signed_data = rrsig_signed_data(f, rrset);
    }
    catch (const wire::WireError&)
    {
      return {VerifyFailure::BadSignature};
    }

    if (
      key.rdata.algorithm != algorithm_ed25519 ||
      !crypto::ed25519_verify(key.rdata.public_key, signed_data, f.signature))
      return {VerifyFailure::BadSignature};

    if (now > int64_t(f.expiration))
      return {VerifyFailure::Expired};
    if (now < int64_t(f.inception))
      return {VerifyFailure::NotYetValid};
    return {};
  }

  Ds compute_ds(const Dnskey& child_dnskey, uint8_t digest_type)
  {
    if (digest_type != digest_sha256)
      throw DnssecError(
        DnssecErrc::UnsupportedDigest,
        "digest type " + std::to_string(digest_type));

    Bytes input = owner_wire(child_dnskey.owner);
    const Bytes rdata = wire::encode_rdata(child_dnskey.rdata);
    append(input, rdata);
    auto digest = crypto::sha256(input);

    wire::DsRdata ds;
    ds.key_tag = compute_key_tag(rdata);
    ds.algorithm = child_dnskey.rdata.algorithm;
    ds.digest_type = digest_type;
    ds.digest.assign(digest.begin(), digest.end());
    return Ds{child_dnskey.owner, std::move(ds)};
  }

  bool match_ds(const Ds& ds, const Dnskey& child_dnskey)
  {
    if (ds.rdata.digest_type != digest_sha256)
      return false;
    if (!(ds.owner == child_dnskey.owner))
      return false;
    const auto expected = compute_ds(child_dnskey, ds.rdata.digest_type);
    return expected.rdata.digest == ds.rdata.digest &&
      expected.rdata.key_tag == ds.rdata.key_tag &&
      expected.rdata.algorithm == ds.rdata.algorithm;
  }
}
