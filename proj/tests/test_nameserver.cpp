// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/nameserver.h"

#include <doctest.h>

using namespace islandbridge;
using namespace islandbridge::nameserver;
using wire::DomainName;
using wire::RType;

namespace
{
  constexpr int64_t now = 1500;
  const dnssec::Validity window{1000, 2000};
  const auto child_ip = *Ipv4Address::parse("192.0.2.53");
  const auto www_ip = *Ipv4Address::parse("192.0.2.1");

  crypto::Key32 seed_of(uint8_t b)
  {
    crypto::Key32 k{};
    k.fill(b);
    return k;
  }

  dnssec::ZoneKeys keys_for(const char* zone, uint8_t b)
  {
    return dnssec::generate_zone_keys(DomainName::parse(zone), seed_of(b));
  }

  ZoneConfig parent(bool parent_signed, bool publish, bool child_signed)
  {
    ZoneConfig com(
      DomainName::parse("com"),
      parent_signed ? std::optional(keys_for("com", 1)) : std::nullopt,
      window);
    Delegation d{
      DomainName::parse("example.com"), DomainName::parse("ns1.example.com"), child_ip, publish,
      child_signed ? std::optional(keys_for("example.com", 2).ksk_dnskey()) : std::nullopt};
    com.add_delegation(d);
    return com;
  }

  ZoneConfig child(bool with_bridge, bool is_signed = true)
  {
    ZoneConfig z(
      DomainName::parse("example.com"),
      is_signed ? std::optional(keys_for("example.com", 2)) : std::nullopt,
      window);
    z.add_address(DomainName::parse("www.example.com"), www_ip);
    if (with_bridge)
    {
      const auto ca = ipcert::CaIdentity::create("Test CA", seed_of(3));
      BridgeConfig b;
      b.port = 8853;
      b.identity.keypair = crypto::X25519KeyPair::from_seed(seed_of(4));
      b.identity.certificate =
        ipcert::issue_cert(
          ca, child_ip,
          Bytes(b.identity.keypair.public_key.begin(), b.identity.keypair.public_key.end()),
          {1000, 2000})
          .encode();
      z.set_bridge(b);
    }
    return z;
  }

  wire::DnsMessage query(const char* name, bool flagged = false, RType type = RType::A)
  {
    wire::DnsMessage q;
    q.header.txid = 4242;
    q.question = wire::Question{DomainName::parse(name), type};
    q.edns = std::vector<wire::EdnsOption>{};
    if (flagged)
      q.add_option(wire::ds_absent_option());
    return q;
  }

  size_t count(const std::vector<wire::ResourceRecord>& section, RType t)
  {
    size_t n = 0;
    for (const auto& rr : section)
      n += rr.type() == t ? 1 : 0;
    return n;
  }

  // Every RRSIG in the message verifies under the given zone's keys.
  void check_signatures(const wire::DnsMessage& m, const dnssec::ZoneKeys& keys)
  {
    std::vector<wire::ResourceRecord> all = m.answers;
    all.insert(all.end(), m.authority.begin(), m.authority.end());
    all.insert(all.end(), m.additional.begin(), m.additional.end());
    for (const auto& rr : all)
    {
      auto sig = dnssec::Rrsig::from_record(rr);
      if (!sig)
        continue;
      const auto covered = wire::select(all, rr.owner, sig->rdata.type_covered);
      const auto key = covered.front().type() == RType::DNSKEY ? keys.ksk_dnskey() : keys.zsk_dnskey();
      CHECK(dnssec::verify_rrsig(covered, *sig, key, now).valid());
    }
  }
}

TEST_CASE("DS is served only for signed parent, publish flag and signed child")
{
  for (int bits = 0; bits < 8; ++bits)
  {
    const bool ps = bits & 4, pub = bits & 2, cs = bits & 1;
    CAPTURE(bits);
    const auto com = parent(ps, pub, cs);
    const auto r = answer_query(com, query("www.example.com"));
    const bool expect_ds = ps && pub && cs;
    CHECK(com.serves_ds(com.delegations().front()) == expect_ds);
    CHECK(count(r.authority, RType::DS) == (expect_ds ? 1u : 0u));
    CHECK(count(r.authority, RType::NS) == 1);
    CHECK(count(r.additional, RType::A) == 1);
    CHECK(count(r.additional, RType::DNSKEY) == (ps ? 2u : 0u));
    CHECK(count(r.authority, RType::RRSIG) == (ps ? (expect_ds ? 2u : 1u) : 0u));
    CHECK_FALSE(r.header.aa);
    if (ps)
      check_signatures(r, *com.keys());
    if (expect_ds)
    {
      const auto ds = dnssec::Ds::from_record(wire::select(r.authority, DomainName::parse("example.com"), RType::DS).front());
      CHECK(dnssec::match_ds(*ds, keys_for("example.com", 2).ksk_dnskey()));
    }
  }
}

TEST_CASE("set_publish_ds toggles the DS RRset")
{
  auto com = parent(true, true, true);
  const auto child_name = DomainName::parse("example.com");
  CHECK(com.rrset(child_name, RType::DS));
  com.set_publish_ds(child_name, false);
  CHECK_FALSE(com.rrset(child_name, RType::DS));
  CHECK_FALSE(com.rrsig(child_name, RType::DS));
  com.set_publish_ds(child_name, true);
  CHECK(com.rrset(child_name, RType::DS));
}

TEST_CASE("referral layout order")
{
  const auto r = answer_query(parent(true, true, true), query("www.example.com"));
  REQUIRE(r.authority.size() == 4);
  CHECK(r.authority[0].type() == RType::NS);
  CHECK(r.authority[1].type() == RType::RRSIG);
  CHECK(r.authority[2].type() == RType::DS);
  CHECK(r.authority[3].type() == RType::RRSIG);
  REQUIRE(r.additional.size() == 5);
  CHECK(r.additional[0].type() == RType::A);
  CHECK(std::get<wire::ARdata>(r.additional[0].rdata).address == child_ip);
  CHECK(r.additional[1].type() == RType::RRSIG);
  CHECK(r.additional[2].type() == RType::DNSKEY);
  CHECK(r.additional[4].type() == RType::RRSIG);
  CHECK(r.header.txid == 4242);
  CHECK(r.header.qr);
  CHECK(r.edns);
}

TEST_CASE("authoritative answers and error codes")
{
  const auto z = child(false);
  auto r = answer_query(z, query("WWW.Example.com"));
  CHECK(r.header.aa);
  CHECK(r.header.rcode == wire::Rcode::NoError);
  REQUIRE(count(r.answers, RType::A) == 1);
  CHECK(count(r.answers, RType::RRSIG) == 1);
  check_signatures(r, *z.keys());

  CHECK(answer_query(z, query("nope.example.com")).header.rcode == wire::Rcode::NxDomain);
  CHECK(answer_query(z, query("example.org")).header.rcode == wire::Rcode::Refused);
  wire::DnsMessage empty;
  CHECK(answer_query(z, empty).header.rcode == wire::Rcode::FormErr);

  const auto plain = child(false, false);
  r = answer_query(plain, query("www.example.com"));
  CHECK(count(r.answers, RType::A) == 1);
  CHECK(count(r.answers, RType::RRSIG) == 0);
  CHECK(count(r.additional, RType::DNSKEY) == 0);
}

TEST_CASE("DS_ABSENT handling")
{
  SUBCASE("bridge offered, signatures kept")
  {
    const auto r = answer_query(child(true), query("www.example.com", true));
    CHECK(wire::bridge_port(r) == 8853);
    CHECK(count(r.answers, RType::RRSIG) == 1);
  }
  SUBCASE("no bridge: plain fallback")
  {
    const auto r = answer_query(child(false), query("www.example.com", true));
    CHECK_FALSE(wire::bridge_port(r));
    CHECK(count(r.answers, RType::A) == 1);
    CHECK(count(r.answers, RType::RRSIG) == 0);
    CHECK(count(r.additional, RType::DNSKEY) == 0);
  }
  SUBCASE("unflagged queries never see the bridge option")
  {
    CHECK_FALSE(wire::bridge_port(answer_query(child(true), query("www.example.com"))));
  }
  SUBCASE("sealed channel ignores the flag")
  {
    const auto r = answer_query(child(true), query("www.example.com", true), Channel::Sealed);
    CHECK_FALSE(wire::bridge_port(r));
    CHECK(count(r.answers, RType::RRSIG) == 1);
    CHECK(count(r.additional, RType::DNSKEY) == 2);
  }
}

TEST_CASE("zone configuration guards")
{
  auto com = parent(true, true, true);
  CHECK_THROWS_AS(
    com.add_delegation({DomainName::parse("example.org"), DomainName::parse("ns.example.org"), child_ip, true, std::nullopt}),
    NameserverError);
  CHECK_THROWS_AS(
    com.add_delegation({DomainName::parse("other.com"), DomainName::parse("ns.example.net"), child_ip, true, std::nullopt}),
    NameserverError);
  CHECK_THROWS_AS(com.add_address(DomainName::parse("www.example.com"), www_ip), NameserverError);
  CHECK_THROWS_AS(com.add_address(DomainName::parse("www.example.org"), www_ip), NameserverError);
  CHECK_THROWS_AS(ZoneConfig(DomainName::parse("org"), keys_for("com", 1), window), NameserverError);
  CHECK(com.find_delegation(DomainName::parse("a.b.example.com")));
  CHECK_FALSE(com.find_delegation(DomainName::parse("example2.com")));
}

TEST_CASE("tamper hooks copy and never re-sign")
{
  const auto com = parent(true, true, true);
  const auto child_name = DomainName::parse("example.com");
  const auto ns_host = DomainName::parse("ns1.example.com");
  const auto zsk = com.keys()->zsk_dnskey();

  SUBCASE("identity")
  {
    const auto same = tamper_hook(com, mutation::Identity{});
    CHECK(answer_query(same, query("www.example.com")) == answer_query(com, query("www.example.com")));
  }
  SUBCASE("corrupt rrsig")
  {
    const auto bad = tamper_hook(com, mutation::CorruptRrsig{child_name, RType::DS, 5, 0x10});
    const auto sig = *dnssec::Rrsig::from_record(*bad.rrsig(child_name, RType::DS));
    CHECK(dnssec::verify_rrsig(*bad.rrset(child_name, RType::DS), sig, zsk, now).failure == dnssec::VerifyFailure::BadSignature);
    const auto orig = *dnssec::Rrsig::from_record(*com.rrsig(child_name, RType::DS));
    CHECK(dnssec::verify_rrsig(*com.rrset(child_name, RType::DS), orig, zsk, now).valid());
    CHECK_THROWS_AS(tamper_hook(com, mutation::CorruptRrsig{DomainName::parse("x.com"), RType::A}), NameserverError);
  }
  SUBCASE("replace glue")
  {
    const auto rogue = *Ipv4Address::parse("203.0.113.53");
    const auto bad = tamper_hook(com, mutation::ReplaceGlue{child_name, rogue});
    const auto r = answer_query(bad, query("www.example.com"));
    CHECK(std::get<wire::ARdata>(r.additional[0].rdata).address == rogue);
    const auto sig = *dnssec::Rrsig::from_record(*bad.rrsig(ns_host, RType::A));
    CHECK_FALSE(dnssec::verify_rrsig(*bad.rrset(ns_host, RType::A), sig, zsk, now).valid());
    CHECK(bad.delegations().front().glue == rogue);
    CHECK(com.delegations().front().glue == child_ip);
    CHECK_THROWS_AS(tamper_hook(com, mutation::ReplaceGlue{DomainName::parse("x.com"), rogue}), NameserverError);
  }
  SUBCASE("swap keys")
  {
    const auto bad = tamper_hook(com, mutation::SwapKeys{keys_for("com", 9)});
    const auto& set = *bad.rrset(com.zone(), RType::DNSKEY);
    const auto sig = *dnssec::Rrsig::from_record(*bad.rrsig(com.zone(), RType::DNSKEY));
    for (const auto& rr : set)
      CHECK_FALSE(dnssec::verify_rrsig(set, sig, *dnssec::Dnskey::from_record(rr), now).valid());
  }
}

TEST_CASE("bridge server answers one sealed query then closes")
{
  const auto cfg = std::make_shared<const ZoneConfig>(child(true));
  ipcert::TrustStore store;
  store.add(ipcert::CaIdentity::create("Test CA", seed_of(3)).root());

  auto [client, hello] = bridge::BridgeSession::client_start(child_ip, store, to_bytes("c"));
  BridgeServer server(cfg, to_bytes("s"));

  auto to_frames = [](const bridge::Flight& f) {
    std::vector<Bytes> out;
    for (const auto& m : f)
      out.push_back(bridge::encode_frame(m));
    return out;
  };

  const auto reply1 = server.on_flight(std::vector<Bytes>{bridge::encode_frame(hello)}, now);
  REQUIRE(reply1.size() == 3);
  bridge::Flight f2;
  for (const auto& raw : reply1)
    f2 = client.deliver_frame(raw, now);
  auto frames = to_frames(f2);
  frames.push_back(bridge::encode_frame(client.seal(query("www.example.com", true))));
  const auto reply2 = server.on_flight(frames, now);
  REQUIRE(reply2.size() == 3);
  CHECK(server.closed());
  CHECK(server.sealed_answers() == 1);

  client.deliver_frame(reply2[0], now);
  client.deliver_frame(reply2[1], now);
  REQUIRE(client.state() == bridge::State::Established);
  const auto answer = client.open(std::get<bridge::EncryptedRecord>(bridge::decode_frame(reply2[2])));
  CHECK(answer == answer_query(*cfg, query("www.example.com", true), Channel::Sealed));
  check_signatures(answer, *cfg->keys());

  CHECK_THROWS_AS(server.on_flight(frames, now), ChannelClosed);
  CHECK_THROWS_AS(BridgeServer(std::make_shared<const ZoneConfig>(child(false)), to_bytes("s")), NameserverError);
}

TEST_CASE("bridge server closes on a bad flight without answering")
{
  const auto cfg = std::make_shared<const ZoneConfig>(child(true));
  BridgeServer server(cfg, to_bytes("s"));
  CHECK(server.on_flight(std::vector<Bytes>{Bytes{2, 0, 0}}, now).empty());
  CHECK(server.closed());
  CHECK(server.sealed_answers() == 0);
}
