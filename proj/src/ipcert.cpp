// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/ipcert.h"

namespace islandbridge::ipcert
{
  namespace
  {
    std::string_view to_string(CertErrc code)
    {
      switch (code)
      {
        case CertErrc::EmptyValidity:
          return "EmptyValidity";
        case CertErrc::Malformed:
          return "Malformed";
        case CertErrc::UntrustedRoot:
          return "UntrustedRoot";
      }
      return "?";
    }

    Bytes root_signed_data(const std::string& name, const crypto::Key32& key)
    {
      Bytes out = to_bytes("ipcert-root");
      append(out, to_bytes(name));
      append(out, key);
      return out;
    }
  }

  CertError::CertError(CertErrc code, const std::string& detail) :
    std::runtime_error(std::string(to_string(code)) + ": " + detail),
    code_(code)
  {}

  std::string_view to_string(CertRejection r)
  {
    switch (r)
    {
      case CertRejection::IpMismatch:
        return "IpMismatch";
      case CertRejection::UnknownIssuer:
        return "UnknownIssuer";
      case CertRejection::BadSignature:
        return "BadSignature";
      case CertRejection::Expired:
        return "Expired";
      case CertRejection::NotYetValid:
        return "NotYetValid";
    }
    return "?";
  }

  Bytes IpCertificate::tbs_bytes() const
  {
    if (subject_public_key.size() > 0xFFFF || issuer.size() > 0xFF)
      throw CertError(CertErrc::Malformed, "field too long");
    Bytes out;
    put_u8(out, cert_version);
    append(out, subject_ip.octets);
    put_u16(out, static_cast<uint16_t>(subject_public_key.size()));
    append(out, subject_public_key);
    put_u8(out, static_cast<uint8_t>(issuer.size()));
    append(out, to_bytes(issuer));
    put_u64(out, serial);
    put_u64(out, static_cast<uint64_t>(validity.not_before));
    put_u64(out, static_cast<uint64_t>(validity.not_after));
    return out;
  }

  Bytes IpCertificate::encode() const
  {
    Bytes out = tbs_bytes();
    put_u16(out, static_cast<uint16_t>(signature.size()));
    append(out, signature);
    return out;
  }

  IpCertificate IpCertificate::decode(ByteView bytes)
  {
    ByteReader r(bytes);
    IpCertificate cert;
    try
    {
      if (r.u8() != cert_version)
        throw CertError(CertErrc::Malformed, "unknown version");
      for (auto& o : cert.subject_ip.octets)
        o = r.u8();
      cert.subject_public_key = r.bytes(r.u16());
      auto issuer = r.bytes(r.u8());
      cert.issuer.assign(issuer.begin(), issuer.end());
      cert.serial = r.u64();
      cert.validity.not_before = static_cast<int64_t>(r.u64());
      cert.validity.not_after = static_cast<int64_t>(r.u64());
      cert.signature = r.bytes(r.u16());
    }
    catch (const ReadPastEnd&)
    {
      throw CertError(CertErrc::Malformed, "truncated certificate");
    }
    if (!r.at_end())
      throw CertError(CertErrc::Malformed, "trailing bytes");
    return cert;
  }

  bool CaRoot::self_verifies() const
  {
    return crypto::ed25519_verify(
      public_key, root_signed_data(name, public_key), self_signature);
  }

  CaIdentity CaIdentity::create(std::string name, const crypto::Key32& seed)
  {
    if (name.empty() || name.size() > 0xFF)
      throw CertError(CertErrc::Malformed, "CA name length");
    CaIdentity ca;
    ca.keypair_ = crypto::Ed25519KeyPair::from_seed(seed);
    ca.root_.name = std::move(name);
    ca.root_.public_key = ca.keypair_.public_key;
    ca.root_.self_signature =
      ca.keypair_.sign(root_signed_data(ca.root_.name, ca.root_.public_key));
    return ca;
  }

  void TrustStore::add(const CaRoot& root)
  {
    if (!root.self_verifies())
      throw CertError(CertErrc::UntrustedRoot, root.name);
    roots_.push_back(root);
  }

  IpCertificate issue_cert(
    const CaIdentity& ca,
    Ipv4Address subject_ip,
    ByteView subject_key,
    Validity validity)
  {
    if (validity.not_before >= validity.not_after)
      throw CertError(CertErrc::EmptyValidity, "not_before >= not_after");

    IpCertificate cert;
    cert.subject_ip = subject_ip;
    cert.subject_public_key.assign(subject_key.begin(), subject_key.end());
    cert.issuer = ca.name();
    cert.validity = validity;

    // Serial: leading 8 bytes of SHA-256 over the serial-less body, so
    // reissuing identical content yields the same certificate.
    auto body = cert.tbs_bytes();
    auto h = crypto::sha256(body);
    ByteReader r(h);
    cert.serial = r.u64();

    cert.signature = ca.sign(cert.tbs_bytes());
    return cert;
  }

  CertVerdict verify_cert(
    const IpCertificate& cert,
    Ipv4Address expected_ip,
    const TrustStore& store,
    int64_t now)
  {
    if (cert.subject_ip != expected_ip)
      return {CertRejection::IpMismatch};

    bool issuer_known = false;
    bool signature_ok = false;
    Bytes tbs;
    try
    {
      tbs = cert.tbs_bytes();
    }
    catch (const CertError&)
    {
      return {CertRejection::BadSignature};
    }
    for (const auto& root : store.roots())
    {
      if (root.name != cert.issuer)
        continue;
      issuer_known = true;
      if (crypto::ed25519_verify(root.public_key, tbs, cert.signature))
      {
        signature_ok = true;
        break;
      }
    }
    if (!issuer_known)
      return {CertRejection::UnknownIssuer};
    if (!signature_ok)
      return {CertRejection::BadSignature};
    if (now > cert.validity.not_after)
      return {CertRejection::Expired};
    if (now < cert.validity.not_before)
      return {CertRejection::NotYetValid};
    return {};
  }
}
