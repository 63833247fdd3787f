// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include "islandbridge/dnssec.h"
#include "islandbridge/ipcert.h"
#include "islandbridge/transcript.h"
#include "islandbridge/wire.h"

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace islandbridge::resolver
{
  /// Why a round trip was spent.
  enum class RttPurpose
  {
    UdpQuery,
    TcpHandshake,
    TlsFlight1,
    TlsFlight2,
    SealedQuery,
  };

  std::string_view to_string(RttPurpose p);

  class TransportError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  /// What the resolver needs from a network. Every call below is exactly
  /// one round trip.
  class Transport
  {
  public:
    virtual ~Transport() = default;

    virtual int64_t now_ms() const = 0;

    /// Sends `query` and returns every datagram that reached the resolver's
    /// port before the network went quiet, in arrival order.
    virtual std::vector<Bytes> exchange_datagram(
      Ipv4Address server, ByteView query) = 0;

    /// Opens a reliable stream. Throws TransportError when nothing listens.
    virtual uint64_t connect(Ipv4Address server, uint16_t port) = 0;

    /// Sends one flight of frames and returns the peer's reply flight.
    virtual std::vector<Bytes> exchange_stream(
      uint64_t stream,
      std::span<const Bytes> frames,
      RttPurpose purpose,
      std::optional<RttPurpose> piggyback = std::nullopt) = 0;

    virtual void close(uint64_t stream) = 0;
  };

  enum class Status
  {
    Secure,
    BridgedSecure,
    BridgedEncrypted,
    Insecure,
    Bogus,
    Aborted,
  };

  std::string_view to_string(Status s);

  struct ResolutionOutcome
  {
    Status status = Status::Bogus;
    /// Set for Bogus and Aborted, e.g. "DsMismatch".
    std::string reason;
    std::optional<wire::RRset> answer;
    Transcript transcript;
    size_t rtt_count = 0;
    /// The expected bridge never showed up.
    bool downgrade = false;

    /// "Bogus(DsMismatch)" or just "Secure".
    std::string label() const;
  };

  enum class ResolveErrc
  {
    NoRoute,
    MaxDepthExceeded,
  };

  class ResolveError : public std::runtime_error
  {
  public:
    ResolveError(ResolveErrc code, const std::string& detail);

    ResolveErrc code() const
    {
      return code_;
    }

  private:
    ResolveErrc code_;
  };

  struct ResolverConfig
  {
    std::vector<dnssec::TrustAnchor> trust_anchors;
    ipcert::TrustStore trust_store;
    bool bridging_enabled = true;
    size_t cache_capacity = 256;
    /// Serve cached Insecure / BridgedEncrypted answers.
    bool accept_unvalidated = true;
    Ipv4Address root_hint;
    /// Servers known out of band to offer a bridge; a missing offer from one
    /// of them is reported as a downgrade.
    std::set<Ipv4Address> expected_bridges;
    size_t max_referrals = 16;
    Bytes rng_seed;
  };

  enum class Security
  {
    SecureSoFar,
    GapOpen,
    BrokenBogus,
  };

  struct ChainState
  {
    wire::DomainName current_zone;
    /// KSK of current_zone that the expected DS vouched for.
    std::optional<dnssec::Dnskey> validated_dnskey;
    /// DS RRset for current_zone; non-empty only while SecureSoFar.
    std::vector<dnssec::Ds> expected_ds;
    Security security = Security::SecureSoFar;
    /// Zone whose DS went missing (GapOpen).
    wire::DomainName gap_zone;
    /// The gap opened under a validated parent, not below an unsigned one.
    bool gap_parent_validated = false;
    std::string bogus_reason;

    static ChainState anchored(std::span<const dnssec::TrustAnchor> anchors);
  };

  /// Checks one response from the server for state.current_zone against
  /// `question`. At SecureSoFar every RRset must carry a valid signature
  /// (ZSK, or KSK for the DNSKEY RRset) and the DNSKEY RRset must match the
  /// expected DS. A referral moves current_zone to the child; a missing DS
  /// there opens a gap.
  ChainState validate_level(
    const ChainState& state,
    const wire::DnsMessage& response,
    const wire::Question& question,
    int64_t now);

  /// Validates a response that carries its own DNSKEY RRset, trusting any KSK
  /// in it. Returns the failure reason, or nothing when every RRset checks.
  std::optional<std::string> validate_self_signed(
    const wire::DnsMessage& response,
    const wire::DomainName& zone,
    int64_t now);

  struct CacheEntry
  {
    wire::DomainName name;
    wire::RType type = wire::RType::A;
    wire::RRset rrset;
    Status status = Status::Insecure;
    int64_t inserted = 0;
    uint32_t ttl = 0;
  };

  /// Answer cache keyed by (name, type). Thread-safe.
  class Cache
  {
  public:
    explicit Cache(size_t capacity) : capacity_(capacity) {}

    Cache(const Cache& other);
    Cache& operator=(const Cache& other);

    /// Hit only while now <= inserted + ttl, and only for Secure or
    /// BridgedSecure entries unless `accept_unvalidated` is set.
    std::optional<CacheEntry> lookup(
      const wire::DomainName& name,
      wire::RType type,
      int64_t now,
      bool accept_unvalidated = false) const;

    /// Bogus and Aborted entries are ignored. When full, the oldest entry
    /// is evicted.
    void insert(CacheEntry entry);

    size_t size() const;

  private:
    size_t capacity_;
    mutable std::mutex mu_;
    std::deque<CacheEntry> entries_;
  };

  class Resolver
  {
  public:
    explicit Resolver(ResolverConfig cfg);

    /// Resolves an A question. `now` is unix seconds for signature and cache
    /// windows. Throws ResolveError for NoRoute or a referral loop.
    ResolutionOutcome resolve(
      const wire::Question& question, Transport& net, int64_t now);

    const ResolverConfig& config() const
    {
      return cfg_;
    }

    Cache& cache()
    {
      return cache_;
    }

  private:
    ResolverConfig cfg_;
    Cache cache_;
    uint64_t resolutions_ = 0;
  };
}
