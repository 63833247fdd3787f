// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include "islandbridge/nameserver.h"
#include "islandbridge/resolver.h"

#include <json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <variant>
#include <vector>

// Deterministic in-memory network between one resolver and a set of
// nameservers. Time is virtual and advances only through link latency.
// Datagrams and stream flights are events on a single queue; every exchange
// runs the queue until it drains.

namespace islandbridge::simnet
{
  class TopologyError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  using ZonePtr = std::shared_ptr<const nameserver::ZoneConfig>;

  struct Topology
  {
    /// Nameserver nodes by address.
    std::map<Ipv4Address, ZonePtr> servers;
    Ipv4Address resolver_address;
    uint16_t resolver_port = 33333;
    /// One-way delay of the resolver <-> server link.
    int64_t default_latency_ms = 10;
    std::map<Ipv4Address, int64_t> latency_ms;
    uint64_t seed = 0;

    int64_t latency(Ipv4Address server) const;

    /// Throws TopologyError when a delegation's glue names no node, or
    /// names a node serving some other zone.
    void validate() const;
  };

  namespace adversary
  {
    struct None
    {};

    enum class Target
    {
      UdpQuery,
      UdpResponse,
      StreamToServer,
      StreamToClient,
    };

    /// Mutates (or drops) the `occurrence`-th message of `target` kind on
    /// the in-scope links. Stream occurrences count individual frames.
    struct OnPathTamper
    {
      std::set<Ipv4Address> links;
      Target target = Target::UdpResponse;
      size_t occurrence = 0;
      size_t offset = 0;
      uint8_t mask = 0x01;
      bool drop = false;
    };

    /// Blind injection of forged answers, timed to beat the genuine reply.
    /// Each forgery carries the right TXID with probability `rate`.
    struct OffPathSpoof
    {
      std::set<Ipv4Address> links;
      double rate = 1.0;
      Ipv4Address forged_address;
      size_t per_query = 1;
    };

    /// Removes BRIDGE_AVAILABLE from in-scope datagram responses.
    struct BridgeStrip
    {
      std::set<Ipv4Address> links;
    };

    /// Redirects stream connections aimed at `at` to the node `impostor`.
    struct ImpostorServer
    {
      Ipv4Address at;
      Ipv4Address impostor;
    };
  }

  using Adversary = std::variant<
    adversary::None,
    adversary::OnPathTamper,
    adversary::OffPathSpoof,
    adversary::BridgeStrip,
    adversary::ImpostorServer>;

  std::string_view mode_name(const Adversary& a);

  struct LedgerEntry
  {
    size_t id = 0;
    resolver::RttPurpose purpose = resolver::RttPurpose::UdpQuery;
    std::optional<resolver::RttPurpose> piggyback;
    friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
  };

  using RttLedger = std::vector<LedgerEntry>;

  nlohmann::ordered_json to_json(const RttLedger& ledger);

  enum class Fate
  {
    Delivered,
    Dropped,
    Pending,
  };

  /// One captured message. Stream flights are captured frame by frame.
  struct Capture
  {
    int64_t t_ms = 0;
    Ipv4Address src;
    Ipv4Address dst;
    bool stream = false;
    bool forged = false;
    bool tampered = false;
    Fate fate = Fate::Pending;
    Bytes payload;
  };

  nlohmann::ordered_json to_json(const Capture& c);

  /// Conservation: sent + injected == delivered + dropped + pending.
  struct NetStats
  {
    size_t sent = 0;
    size_t injected = 0;
    size_t delivered = 0;
    size_t dropped = 0;
    size_t pending = 0;
  };

  class Network : public resolver::Transport
  {
  public:
    Network(Topology topology, Adversary adversary);

    int64_t now_ms() const override
    {
      return now_;
    }

    std::vector<Bytes> exchange_datagram(
      Ipv4Address server, ByteView query) override;
    uint64_t connect(Ipv4Address server, uint16_t port) override;
    std::vector<Bytes> exchange_stream(
      uint64_t stream,
      std::span<const Bytes> frames,
      resolver::RttPurpose purpose,
      std::optional<resolver::RttPurpose> piggyback) override;
    void close(uint64_t stream) override;

    /// Starts a fresh ledger (one per resolution).
    RttLedger take_ledger();

    const RttLedger& ledger() const
    {
      return ledger_;
    }

    NetStats stats() const;
    const std::vector<Capture>& captures() const
    {
      return captures_;
    }

    /// EncryptedRecord frames the resolver put on the wire.
    size_t sealed_payloads_sent() const
    {
      return sealed_sent_;
    }

    size_t forgeries_injected() const
    {
      return stats_.injected;
    }

  private:
    struct Packet
    {
      Ipv4Address src;
      Ipv4Address dst;
      std::optional<uint64_t> stream;
      std::vector<Bytes> frames;
      std::vector<size_t> capture_ids;
    };

    struct Scheduled
    {
      int64_t at;
      uint64_t seq;
      bool operator>(const Scheduled& o) const
      {
        return at != o.at ? at > o.at : seq > o.seq;
      }
    };

    struct Stream
    {
      Ipv4Address server;
      std::unique_ptr<nameserver::BridgeServer> bridge;
      bool open = true;
    };

    void schedule(int64_t at, Packet p);
    void run_until_quiet();
    void deliver(Packet& p);
    void on_server_datagram(const Packet& p);
    void on_server_stream(const Packet& p);
    /// Applies the adversary to an outgoing message; false means dropped.
    bool intercept(Packet& p, Ipv4Address server, bool to_server);
    void inject_spoofs(Ipv4Address server, ByteView query);
    size_t capture(const Packet& p, size_t frame, bool forged);

    Topology topo_;
    Adversary adversary_;
    crypto::Drbg rng_;
    int64_t now_ = 0;
    uint64_t seq_ = 0;
    std::priority_queue<Scheduled, std::vector<Scheduled>, std::greater<>> queue_;
    std::map<uint64_t, Packet> packets_;
    std::vector<Bytes> inbox_;
    std::map<uint64_t, Stream> streams_;
    uint64_t next_stream_ = 1;
    std::map<adversary::Target, size_t> seen_;
    RttLedger ledger_;
    size_t next_ledger_id_ = 1;
    std::vector<Capture> captures_;
    NetStats stats_;
    size_t sealed_sent_ = 0;
  };

  struct QueryResult
  {
    resolver::ResolutionOutcome outcome;
    RttLedger ledger;
  };

  struct SessionResult
  {
    std::vector<QueryResult> queries;
    NetStats stats;
    std::vector<Capture> captures;
    size_t sealed_payloads_sent = 0;
    size_t forgeries_injected = 0;
  };

  struct TimedQuestion
  {
    wire::Question question;
    /// Unix seconds at which the stub asks.
    int64_t at = 0;
  };

  /// Several resolutions through one resolver (and cache) on one network.
  SessionResult run_session(
    const Topology& topology,
    const resolver::ResolverConfig& cfg,
    std::span<const TimedQuestion> questions,
    const Adversary& adversary);

  std::pair<resolver::ResolutionOutcome, RttLedger> run_scenario(
    const Topology& topology,
    const resolver::ResolverConfig& cfg,
    const wire::Question& question,
    const Adversary& adversary,
    int64_t now);
}
