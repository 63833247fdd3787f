// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include "islandbridge/simnet.h"

#include <json.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Scenario documents (schema version 1). See README.md for the field list.
// All key material is derived from the scenario seed, so a scenario file
// plus a seed fully determines every byte a run produces.

namespace islandbridge::scenario
{
  constexpr int schema_version = 1;

  /// Schema violation; path() is a JSON pointer to the offending field.
  class ScenarioError : public std::runtime_error
  {
  public:
    ScenarioError(std::string path, const std::string& message);

    const std::string& path() const
    {
      return path_;
    }

  private:
    std::string path_;
  };

  enum class Issuer
  {
    /// The CA in the resolver's trust store.
    Trusted,
    /// A CA under a name the resolver does not know.
    Unknown,
    /// A different key claiming the trusted CA's name.
    Forged,
  };

  struct CertSpec
  {
    /// Subject address; defaults to the server's own address.
    std::optional<Ipv4Address> ip;
    Issuer issuer = Issuer::Trusted;
    int64_t not_before_offset = -86400;
    int64_t not_after_offset = 365 * 86400;
  };

  struct BridgeSpec
  {
    uint16_t port = 853;
    CertSpec cert;
  };

  struct RecordSpec
  {
    wire::DomainName name;
    Ipv4Address address;
  };

  struct ZoneSpec
  {
    wire::DomainName name;
    Ipv4Address server;
    /// Defaults to "ns1.<zone>".
    std::optional<wire::DomainName> ns_host;
    bool is_signed = true;
    bool parent_publishes_ds = true;
    std::optional<BridgeSpec> bridge;
    std::vector<RecordSpec> records;
    uint32_t ttl = 3600;

    wire::DomainName host() const;
  };

  /// A server outside the delegation chain, claiming to serve `zone`.
  struct RogueSpec
  {
    Ipv4Address address;
    wire::DomainName zone;
    bool is_signed = true;
    std::optional<BridgeSpec> bridge;
    /// Present the certificate of the genuine server at this address
    /// instead of one issued for the rogue.
    std::optional<Ipv4Address> copy_cert_from;
    std::vector<RecordSpec> records;
  };

  struct ResolverSpec
  {
    Ipv4Address address = Ipv4Address::from_u32(0x0A000001);
    bool bridging = true;
    /// Install the root DS as trust anchor (only possible if the root is
    /// signed).
    bool trust_anchor = true;
    size_t cache_capacity = 256;
    bool accept_unvalidated = true;
    std::vector<Ipv4Address> expected_bridges;
  };

  enum class TamperKind
  {
    Identity,
    CorruptRrsig,
    ReplaceGlue,
    SwapKeys,
  };

  struct TamperSpec
  {
    wire::DomainName zone;
    TamperKind kind = TamperKind::Identity;
    wire::DomainName owner;
    wire::RType covered = wire::RType::A;
    size_t byte = 0;
    uint8_t mask = 0x01;
    wire::DomainName child;
    Ipv4Address address;
  };

  struct QuerySpec
  {
    wire::Question question;
    /// Seconds after the scenario start.
    int64_t offset = 0;
  };

  struct Scenario
  {
    std::string name;
    uint64_t seed = 1;
    /// Unix seconds at scenario start.
    int64_t time = 1700000000;
    std::vector<ZoneSpec> zones;
    std::vector<RogueSpec> rogues;
    ResolverSpec resolver;
    simnet::Adversary adversary;
    std::vector<TamperSpec> tamper;
    std::vector<QuerySpec> queries;
    int64_t default_latency_ms = 10;
    std::map<Ipv4Address, int64_t> latency_ms;
  };

  Scenario parse(const nlohmann::json& doc);
  /// Throws ScenarioError with path "" for unreadable or non-JSON files.
  Scenario load_file(const std::string& path);

  /// A scenario ready to run.
  struct Built
  {
    simnet::Topology topology;
    resolver::ResolverConfig resolver;
    simnet::Adversary adversary;
    std::vector<simnet::TimedQuestion> questions;
    /// Genuine zone configs by canonical zone name.
    std::map<std::string, simnet::ZonePtr> zones;
  };

  /// Throws ScenarioError for inconsistent documents (missing root, zone
  /// without parent, records out of bailiwick, dangling impostor).
  Built build(const Scenario& s);

  /// The same shape, fully signed with every DS published, no bridges, no
  /// rogues, no tampering and no adversary.
  Scenario baseline_of(const Scenario& s);

  struct QueryReport
  {
    simnet::QueryResult result;
    size_t baseline_rtt = 0;

    long extra_rtt() const
    {
      return static_cast<long>(result.outcome.rtt_count) -
        static_cast<long>(baseline_rtt);
    }
  };

  struct Report
  {
    std::string name;
    uint64_t seed = 0;
    std::vector<QueryReport> queries;
    simnet::SessionResult session;
  };

  Report run(const Scenario& s);
  Report run(const Built& built, const Scenario& s);

  /// `STATUS answer rtt=N extra_rtt=M` for one query.
  std::string outcome_line(const QueryReport& q);
  nlohmann::ordered_json to_json(const Report& r);

  /// 0 for Secure/BridgedSecure, 1 for BridgedEncrypted/Insecure, 2 for
  /// Bogus/Aborted.
  int exit_code(resolver::Status s);
}
