// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/ipcert.h"

#include "oracle.h"

#include <doctest.h>

using namespace islandbridge;
using namespace islandbridge::ipcert;

namespace
{
  crypto::Key32 seed_of(uint8_t b)
  {
    crypto::Key32 k{};
    k.fill(b);
    return k;
  }

  const auto server_ip = *Ipv4Address::parse("192.0.2.53");
  const Bytes subject_key(32, 0x42);

  struct Fixture
  {
    CaIdentity ca = CaIdentity::create("Test CA", seed_of(1));
    TrustStore store;
    IpCertificate cert;

    Fixture()
    {
      store.add(ca.root());
      cert = issue_cert(ca, server_ip, subject_key, {1000, 2000});
    }
  };
}

TEST_CASE("certificate byte layout")
{
  Fixture f;
  const auto bytes = f.cert.encode();
  Bytes expected;
  put_u8(expected, 1);
  append(expected, Bytes{192, 0, 2, 53});
  put_u16(expected, 32);
  append(expected, subject_key);
  put_u8(expected, 7);
  append(expected, to_bytes("Test CA"));
  put_u64(expected, f.cert.serial);
  put_u64(expected, 1000);
  put_u64(expected, 2000);
  CHECK(f.cert.tbs_bytes() == expected);
  put_u16(expected, 64);
  append(expected, f.cert.signature);
  CHECK(bytes == expected);
  CHECK(oracle::ed25519_verify(f.ca.root().public_key, f.cert.tbs_bytes(), f.cert.signature));
  CHECK(IpCertificate::decode(bytes) == f.cert);
}

TEST_CASE("decode rejects truncation and trailing bytes")
{
  Fixture f;
  const auto bytes = f.cert.encode();
  for (size_t cut = 0; cut < bytes.size(); ++cut)
    CHECK_THROWS_AS(IpCertificate::decode(ByteView(bytes).first(cut)), CertError);
  auto longer = bytes;
  longer.push_back(0);
  CHECK_THROWS_AS(IpCertificate::decode(longer), CertError);
  auto bad_version = bytes;
  bad_version[0] = 2;
  CHECK_THROWS_AS(IpCertificate::decode(bad_version), CertError);
}

TEST_CASE("verification outcomes")
{
  Fixture f;
  CHECK(verify_cert(f.cert, server_ip, f.store, 1500).accepted());
  CHECK(verify_cert(f.cert, server_ip, f.store, 1000).accepted());
  CHECK(verify_cert(f.cert, server_ip, f.store, 2000).accepted());
  CHECK(verify_cert(f.cert, server_ip, f.store, 2001).rejection == CertRejection::Expired);
  CHECK(verify_cert(f.cert, server_ip, f.store, 999).rejection == CertRejection::NotYetValid);
  CHECK(
    verify_cert(f.cert, *Ipv4Address::parse("192.0.2.54"), f.store, 1500).rejection ==
    CertRejection::IpMismatch);

  const auto stranger = CaIdentity::create("Other CA", seed_of(2));
  const auto foreign = issue_cert(stranger, server_ip, subject_key, {1000, 2000});
  CHECK(verify_cert(foreign, server_ip, f.store, 1500).rejection == CertRejection::UnknownIssuer);

  const auto impersonator = CaIdentity::create("Test CA", seed_of(3));
  const auto forged = issue_cert(impersonator, server_ip, subject_key, {1000, 2000});
  CHECK(verify_cert(forged, server_ip, f.store, 1500).rejection == CertRejection::BadSignature);

  CHECK(verify_cert(f.cert, server_ip, TrustStore{}, 1500).rejection == CertRejection::UnknownIssuer);
}

TEST_CASE("every tbs bit is covered by the signature")
{
  Fixture f;
  const auto bytes = f.cert.encode();
  const size_t tbs = f.cert.tbs_bytes().size();
  size_t rejected = 0;
  for (size_t bit = 0; bit < tbs * 8; ++bit)
  {
    auto bad = bytes;
    bad[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
    IpCertificate c;
    try
    {
      c = IpCertificate::decode(bad);
    }
    catch (const CertError&)
    {
      ++rejected;
      continue;
    }
    if (!verify_cert(c, server_ip, f.store, 1500).accepted())
      ++rejected;
  }
  CHECK(rejected == tbs * 8);
}

TEST_CASE("reason priority: IP first, then issuer, signature, window")
{
  Fixture f;
  const auto stranger = CaIdentity::create("Other CA", seed_of(2));
  auto c = issue_cert(stranger, server_ip, subject_key, {1000, 2000});
  c.signature[0] ^= 1;
  CHECK(
    verify_cert(c, *Ipv4Address::parse("10.0.0.1"), f.store, 5000).rejection ==
    CertRejection::IpMismatch);
  CHECK(verify_cert(c, server_ip, f.store, 5000).rejection == CertRejection::UnknownIssuer);
  auto d = f.cert;
  d.signature[0] ^= 1;
  CHECK(verify_cert(d, server_ip, f.store, 5000).rejection == CertRejection::BadSignature);
}

TEST_CASE("trust store and issuance guards")
{
  Fixture f;
  auto root = f.ca.root();
  CHECK(root.self_verifies());
  root.public_key[0] ^= 1;
  CHECK_FALSE(root.self_verifies());
  TrustStore s;
  CHECK_THROWS_AS(s.add(root), CertError);
  CHECK(s.empty());
  CHECK_THROWS_AS(issue_cert(f.ca, server_ip, subject_key, {2000, 1000}), CertError);
}
