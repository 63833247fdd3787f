// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/scenario.h"

#include <doctest.h>

using namespace islandbridge;
using namespace islandbridge::resolver;
using wire::DomainName;
using wire::RType;
using nlohmann::json;

namespace
{
  // Three-level chain; each flag switches one deployment property.
  json chain(bool root_signed, bool tld_signed, bool auth_signed, bool publish, bool bridge)
  {
    json auth = {
      {"name", "example.com"},
      {"server", "192.0.2.53"},
      {"signed", auth_signed},
      {"parent_publishes_ds", publish},
      {"records", json::array({{{"name", "www.example.com"}, {"a", "192.0.2.1"}}})}};
    if (bridge)
      auth["bridge"] = {{"port", 853}};
    return {
      {"scenario_version", 1},
      {"seed", 3},
      {"question", "www.example.com"},
      {"zones",
       json::array(
         {{{"name", "."}, {"server", "198.41.0.4"}, {"signed", root_signed}},
          {{"name", "com"}, {"server", "192.5.6.30"}, {"signed", tld_signed}},
          auth})}};
  }

  scenario::Report run(const json& doc)
  {
    return scenario::run(scenario::parse(doc));
  }

  CacheEntry entry(const char* name, Status s, int64_t at, uint32_t ttl)
  {
    return {
      DomainName::parse(name), RType::A,
      {{DomainName::parse(name), ttl, wire::ARdata{*Ipv4Address::parse("192.0.2.1")}}}, s, at, ttl};
  }

  class DeadTransport : public Transport
  {
  public:
    int64_t now_ms() const override
    {
      return 0;
    }
    std::vector<Bytes> exchange_datagram(Ipv4Address, ByteView) override
    {
      throw TransportError("unreachable");
    }
    uint64_t connect(Ipv4Address, uint16_t) override
    {
      throw TransportError("unreachable");
    }
    std::vector<Bytes> exchange_stream(
      uint64_t, std::span<const Bytes>, RttPurpose, std::optional<RttPurpose>) override
    {
      return {};
    }
    void close(uint64_t) override {}
  };

  class SilentTransport : public DeadTransport
  {
  public:
    std::vector<Bytes> exchange_datagram(Ipv4Address, ByteView) override
    {
      ++calls;
      return {};
    }
    size_t calls = 0;
  };
}

TEST_CASE("cache lifetime boundary and filtering")
{
  Cache c(4);
  c.insert(entry("a.example", Status::Secure, 100, 50));
  const auto a = DomainName::parse("A.Example");
  CHECK(c.lookup(a, RType::A, 100));
  CHECK(c.lookup(a, RType::A, 150));
  CHECK_FALSE(c.lookup(a, RType::A, 151));
  CHECK_FALSE(c.lookup(a, RType::NS, 120));

  c.insert(entry("b.example", Status::Insecure, 100, 50));
  const auto b = DomainName::parse("b.example");
  CHECK_FALSE(c.lookup(b, RType::A, 120));
  CHECK(c.lookup(b, RType::A, 120, true));

  c.insert(entry("c.example", Status::Bogus, 100, 50));
  c.insert(entry("d.example", Status::Aborted, 100, 50));
  CHECK(c.size() == 2);
  CHECK_FALSE(c.lookup(DomainName::parse("c.example"), RType::A, 120, true));

  for (const char* n : {"e.example", "f.example", "g.example"})
    c.insert(entry(n, Status::BridgedSecure, 100, 50));
  CHECK(c.size() == 4);
  CHECK_FALSE(c.lookup(a, RType::A, 120));
  CHECK(c.lookup(DomainName::parse("g.example"), RType::A, 120));

  Cache copy = c;
  CHECK(copy.size() == 4);
}

TEST_CASE("deployment outcomes and round trip accounting")
{
  struct Case
  {
    bool r, t, a, p, b;
    Status expected;
    size_t rtt;
  };
  const Case cases[] = {
    {true, true, true, true, false, Status::Secure, 3},
    {true, true, true, false, true, Status::BridgedSecure, 6},
    {true, false, true, false, true, Status::BridgedEncrypted, 6},
    {true, true, false, false, true, Status::BridgedEncrypted, 6},
    {true, true, true, false, false, Status::Insecure, 3},
    {false, false, false, false, false, Status::Insecure, 3},
  };
  for (const auto& c : cases)
  {
    CAPTURE(c.r);
    CAPTURE(c.t);
    CAPTURE(c.a);
    CAPTURE(c.p);
    CAPTURE(c.b);
    const auto rep = run(chain(c.r, c.t, c.a, c.p, c.b));
    REQUIRE(rep.queries.size() == 1);
    const auto& q = rep.queries[0];
    const auto& out = q.result.outcome;
    CHECK(out.status == c.expected);
    CHECK(out.rtt_count == c.rtt);
    CHECK(q.result.ledger.size() == out.rtt_count);
    CHECK(count_round_trips(out.transcript) == out.rtt_count);
    CHECK(q.baseline_rtt == 3);
    REQUIRE(out.answer);
    CHECK(std::get<wire::ARdata>(out.answer->front().rdata).address == *Ipv4Address::parse("192.0.2.1"));
    CHECK_FALSE(out.downgrade);
    CHECK(out.transcript.back().kind == EventKind::Outcome);
  }
}

TEST_CASE("bridged ledger names each extra round trip")
{
  const auto rep = run(chain(true, true, true, false, true));
  const auto& ledger = rep.queries[0].result.ledger;
  REQUIRE(ledger.size() == 6);
  for (size_t i = 0; i < 3; ++i)
    CHECK(ledger[i].purpose == RttPurpose::UdpQuery);
  CHECK(ledger[3].purpose == RttPurpose::TcpHandshake);
  CHECK(ledger[4].purpose == RttPurpose::TlsFlight1);
  CHECK(ledger[5].purpose == RttPurpose::TlsFlight2);
  CHECK(ledger[5].piggyback == RttPurpose::SealedQuery);
  CHECK(rep.queries[0].extra_rtt() == 3);
}

TEST_CASE("bridging switched off leaves the island insecure")
{
  auto doc = chain(true, true, true, false, true);
  doc["resolver"] = {{"bridging", false}};
  const auto out = run(doc).queries[0].result.outcome;
  CHECK(out.status == Status::Insecure);
  CHECK(out.rtt_count == 3);
}

TEST_CASE("missing trust anchor means nothing is secure")
{
  auto doc = chain(true, true, true, true, false);
  doc["resolver"] = {{"trust_anchor", false}};
  CHECK(run(doc).queries[0].result.outcome.status == Status::Insecure);
}

TEST_CASE("stripped bridge offer from an expected server is a downgrade")
{
  auto doc = chain(true, true, true, false, true);
  doc["resolver"] = {{"expected_bridges", json::array({"192.0.2.53"})}};
  doc["adversary"] = {{"mode", "bridge_strip"}, {"links", json::array({"192.0.2.53"})}};
  const auto out = run(doc).queries[0].result.outcome;
  CHECK(out.status == Status::Insecure);
  CHECK(out.downgrade);

  doc.erase("resolver");
  CHECK_FALSE(run(doc).queries[0].result.outcome.downgrade);
}

TEST_CASE("cache serves repeats until the TTL runs out")
{
  auto doc = chain(true, true, true, false, true);
  doc.erase("question");
  doc["queries"] = json::array(
    {{{"name", "www.example.com"}, {"at", 0}},
     {{"name", "www.example.com"}, {"at", 3600}},
     {{"name", "www.example.com"}, {"at", 3601}}});
  const auto rep = run(doc);
  REQUIRE(rep.queries.size() == 3);
  CHECK(rep.queries[0].result.outcome.rtt_count == 6);
  CHECK(rep.queries[1].result.outcome.rtt_count == 0);
  CHECK(rep.queries[1].result.outcome.status == Status::BridgedSecure);
  CHECK(rep.queries[1].result.ledger.empty());
  CHECK(rep.queries[2].result.outcome.rtt_count == 6);
}

TEST_CASE("referral depth limit")
{
  auto doc = chain(true, true, true, true, false);
  auto s = scenario::parse(doc);
  auto built = scenario::build(s);
  built.resolver.max_referrals = 1;
  try
  {
    simnet::run_scenario(built.topology, built.resolver, built.questions[0].question, built.adversary, s.time);
    FAIL("expected MaxDepthExceeded");
  }
  catch (const ResolveError& e)
  {
    CHECK(e.code() == ResolveErrc::MaxDepthExceeded);
  }
  built.resolver.max_referrals = 2;
  CHECK(
    simnet::run_scenario(built.topology, built.resolver, built.questions[0].question, built.adversary, s.time)
      .first.status == Status::Secure);
}

TEST_CASE("unreachable and silent networks")
{
  const wire::Question q{DomainName::parse("www.example.com"), RType::A};
  ResolverConfig cfg;
  cfg.root_hint = *Ipv4Address::parse("198.41.0.4");
  cfg.rng_seed = to_bytes("seed");

  Resolver r(cfg);
  DeadTransport dead;
  try
  {
    r.resolve(q, dead, 1700000000);
    FAIL("expected NoRoute");
  }
  catch (const ResolveError& e)
  {
    CHECK(e.code() == ResolveErrc::NoRoute);
  }

  SilentTransport silent;
  const auto out = r.resolve(q, silent, 1700000000);
  CHECK(silent.calls == 1);
  CHECK(out.rtt_count == 1);
  CHECK((out.status == Status::Aborted || out.status == Status::Bogus));
  CHECK_FALSE(out.answer);
  CHECK(r.cache().size() == 0);
}

TEST_CASE("outcome labels")
{
  ResolutionOutcome o;
  o.status = Status::Bogus;
  o.reason = "DsMismatch";
  CHECK(o.label() == "Bogus(DsMismatch)");
  o.status = Status::Secure;
  o.reason.clear();
  CHECK(o.label() == "Secure");
}
