// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include "islandbridge/bridge.h"
#include "islandbridge/dnssec.h"
#include "islandbridge/wire.h"

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

// Authoritative nameserver behaviour for one zone.
//
// Response layout (signed zones add the RRSIG right after each RRset):
//   answer      A RRset for the question name
//   authority   referral NS RRset, then the child DS RRset when published
//   additional  glue A RRset, the zone's DNSKEY RRset, then OPT
//
// Every RRset a signed zone owns is signed with its ZSK, including NS, glue
// and DS; the DNSKEY RRset is signed with its KSK.

namespace islandbridge::nameserver
{
  class NameserverError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  /// The bridge accepted its one sealed query and is closed.
  class ChannelClosed : public NameserverError
  {
  public:
    ChannelClosed() : NameserverError("bridge channel closed") {}
  };

  struct BridgeConfig
  {
    uint16_t port = 853;
    bridge::ServerIdentity identity;
  };

  struct Delegation
  {
    wire::DomainName child;
    wire::DomainName ns_host;
    Ipv4Address glue;
    bool publish_ds = true;
    /// The child's KSK when the child is signed.
    std::optional<dnssec::Dnskey> child_ksk;
  };

  class ZoneConfig
  {
  public:
    ZoneConfig(
      wire::DomainName zone,
      std::optional<dnssec::ZoneKeys> keys,
      dnssec::Validity validity,
      uint32_t ttl = 3600);

    /// Mutators re-sign every RRset they touch.
    void add_address(const wire::DomainName& name, Ipv4Address address);
    /// Throws NameserverError for a child outside the zone or a host name
    /// outside the child (glue must be in bailiwick).
    void add_delegation(Delegation d);
    void set_publish_ds(const wire::DomainName& child, bool publish);
    void set_bridge(BridgeConfig bridge);

    const wire::DomainName& zone() const
    {
      return zone_;
    }

    bool is_signed() const
    {
      return keys_.has_value();
    }

    const std::optional<dnssec::ZoneKeys>& keys() const
    {
      return keys_;
    }

    const std::optional<BridgeConfig>& bridge() const
    {
      return bridge_;
    }

    const std::vector<Delegation>& delegations() const
    {
      return delegations_;
    }

    /// Closest enclosing delegation for `name`, if any.
    const Delegation* find_delegation(const wire::DomainName& name) const;

    /// Stored RRset and its signature (empty / nullopt when absent).
    const wire::RRset* rrset(const wire::DomainName& owner, wire::RType type) const;
    const wire::ResourceRecord* rrsig(
      const wire::DomainName& owner, wire::RType type) const;

    /// Whether a DS for `child` is served: parent signed, publish flag set
    /// and child signed.
    bool serves_ds(const Delegation& d) const;

  private:
    using Key = std::pair<std::string, wire::RType>;
    static Key key(const wire::DomainName& owner, wire::RType type);

    void put(wire::RRset rrset);
    void rebuild_delegation(const Delegation& d);

    friend struct TamperAccess;

    wire::DomainName zone_;
    std::optional<dnssec::ZoneKeys> keys_;
    dnssec::Validity validity_;
    uint32_t ttl_;
    std::vector<Delegation> delegations_;
    std::optional<BridgeConfig> bridge_;
    std::map<Key, wire::RRset> rrsets_;
    std::map<Key, wire::ResourceRecord> sigs_;
  };

  enum class Channel
  {
    /// Plain UDP: honours DS_ABSENT with BRIDGE_AVAILABLE or the unsigned
    /// fallback.
    Datagram,
    /// Inside an established bridge: always the full signed answer.
    Sealed,
  };

  wire::DnsMessage answer_query(
    const ZoneConfig& cfg,
    const wire::DnsMessage& query,
    Channel channel = Channel::Datagram);

  namespace mutation
  {
    struct Identity
    {};

    /// XOR one byte of the stored signature covering (owner, covered).
    struct CorruptRrsig
    {
      wire::DomainName owner;
      wire::RType covered = wire::RType::A;
      size_t byte_index = 0;
      uint8_t mask = 0x01;
    };

    /// Point a delegation's glue at another address.
    struct ReplaceGlue
    {
      wire::DomainName child;
      Ipv4Address address;
    };

    /// Publish another key pair's DNSKEY RRset under the old signatures.
    struct SwapKeys
    {
      dnssec::ZoneKeys replacement;
    };
  }

  using Mutation = std::variant<
    mutation::Identity,
    mutation::CorruptRrsig,
    mutation::ReplaceGlue,
    mutation::SwapKeys>;

  /// Returns a copy with the mutation applied. Never re-signs.
  ZoneConfig tamper_hook(const ZoneConfig& cfg, const Mutation& m);

  /// Server end of one bridge connection: runs the handshake, answers
  /// exactly one sealed query, then closes.
  class BridgeServer
  {
  public:
    BridgeServer(std::shared_ptr<const ZoneConfig> cfg, ByteView rng_seed);

    /// Consumes one client flight of encoded frames and returns the reply
    /// frames. Returns nothing once the session aborts. Throws ChannelClosed
    /// for frames arriving after the sealed answer went out.
    std::vector<Bytes> on_flight(std::span<const Bytes> frames, int64_t now);

    bool closed() const
    {
      return closed_;
    }

    size_t sealed_answers() const
    {
      return sealed_answers_;
    }

    const bridge::BridgeSession& session() const
    {
      return session_;
    }

  private:
    std::shared_ptr<const ZoneConfig> cfg_;
    bridge::BridgeSession session_;
    bool closed_ = false;
    size_t sealed_answers_ = 0;
  };
}
