// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/nameserver.h"

#include <algorithm>

namespace islandbridge::nameserver
{
  using wire::DomainName;
  using wire::ResourceRecord;
  using wire::RRset;
  using wire::RType;

  ZoneConfig::ZoneConfig(
    DomainName zone,
    std::optional<dnssec::ZoneKeys> keys,
    dnssec::Validity validity,
    uint32_t ttl) :
    zone_(std::move(zone)),
    keys_(std::move(keys)),
    validity_(validity),
    ttl_(ttl)
  {
    if (keys_)
    {
      if (!(keys_->zone == zone_))
        throw NameserverError("zone keys belong to " + keys_->zone.to_string());
      put(keys_->dnskey_rrset(ttl_));
    }
  }

  ZoneConfig::Key ZoneConfig::key(const DomainName& owner, RType type)
  {
    return {owner.canonical().to_string(), type};
  }

  void ZoneConfig::put(RRset rrset)
  {
    const auto k = key(rrset.front().owner, rrset.front().type());
    if (keys_)
    {
      const auto role = rrset.front().type() == RType::DNSKEY ?
        dnssec::KeyRole::Ksk :
        dnssec::KeyRole::Zsk;
      sigs_[k] = dnssec::sign_rrset(rrset, *keys_, role, validity_).to_record(ttl_);
    }
    rrsets_[k] = std::move(rrset);
  }

  void ZoneConfig::add_address(const DomainName& name, Ipv4Address address)
  {
    if (!name.is_subdomain_of(zone_))
      throw NameserverError(name.to_string() + " is outside " + zone_.to_string());
    if (find_delegation(name))
      throw NameserverError(name.to_string() + " lies below a delegation");

    RRset set;
    if (auto existing = rrset(name, RType::A))
      set = *existing;
    ResourceRecord rr{name, ttl_, wire::ARdata{address}};
    if (std::find(set.begin(), set.end(), rr) != set.end())
      return;
    set.push_back(std::move(rr));
    put(std::move(set));
  }

  void ZoneConfig::add_delegation(Delegation d)
  {
    if (!d.child.is_subdomain_of(zone_) || d.child == zone_)
      throw NameserverError(
        d.child.to_string() + " is not a child of " + zone_.to_string());
    if (!d.ns_host.is_subdomain_of(d.child))
      throw NameserverError(
        "glue host " + d.ns_host.to_string() + " is outside " +
        d.child.to_string());
    if (d.child_ksk && !(d.child_ksk->owner == d.child))
      throw NameserverError("child key owner mismatch");

    auto it = std::find_if(
      delegations_.begin(), delegations_.end(), [&](const Delegation& x) {
        return x.child == d.child;
      });
    if (it != delegations_.end())
      *it = d;
    else
      delegations_.push_back(d);
    rebuild_delegation(d);
  }

  void ZoneConfig::set_publish_ds(const DomainName& child, bool publish)
  {
    for (auto& d : delegations_)
    {
      if (d.child == child)
      {
        d.publish_ds = publish;
        rebuild_delegation(d);
        return;
      }
    }
    throw NameserverError("no delegation for " + child.to_string());
  }

  void ZoneConfig::set_bridge(BridgeConfig bridge)
  {
    bridge_ = std::move(bridge);
  }

  void ZoneConfig::rebuild_delegation(const Delegation& d)
  {
    put({ResourceRecord{d.child, ttl_, wire::NsRdata{d.ns_host}}});
    put({ResourceRecord{d.ns_host, ttl_, wire::ARdata{d.glue}}});

    const auto ds_key = key(d.child, RType::DS);
    if (serves_ds(d))
      put({dnssec::compute_ds(*d.child_ksk).to_record(ttl_)});
    else
    {
      rrsets_.erase(ds_key);
      sigs_.erase(ds_key);
    }
  }

  bool ZoneConfig::serves_ds(const Delegation& d) const
  {
    return keys_.has_value() && d.publish_ds && d.child_ksk.has_value();
  }

  const Delegation* ZoneConfig::find_delegation(const DomainName& name) const
  {
    const Delegation* best = nullptr;
    for (const auto& d : delegations_)
    {
      if (
        name.is_subdomain_of(d.child) &&
        (!best || d.child.label_count() > best->child.label_count()))
        best = &d;
    }
    return best;
  }

  const RRset* ZoneConfig::rrset(const DomainName& owner, RType type) const
  {
    auto it = rrsets_.find(key(owner, type));
    return it == rrsets_.end() ? nullptr : &it->second;
  }

  const ResourceRecord* ZoneConfig::rrsig(const DomainName& owner, RType type) const
  {
    auto it = sigs_.find(key(owner, type));
    return it == sigs_.end() ? nullptr : &it->second;
  }

  wire::DnsMessage answer_query(
    const ZoneConfig& cfg, const wire::DnsMessage& query, Channel channel)
  {
    wire::DnsMessage r;
    r.header.txid = query.header.txid;
    r.header.qr = true;
    r.header.opcode = query.header.opcode;
    r.header.rd = query.header.rd;
    r.header.cd = query.header.cd;
    r.question = query.question;
    if (query.edns)
      r.edns = std::vector<wire::EdnsOption>{};

    if (!query.question)
    {
      r.header.rcode = wire::Rcode::FormErr;
      return r;
    }
    const auto& q = *query.question;
    if (!q.name.is_subdomain_of(cfg.zone()))
    {
      r.header.rcode = wire::Rcode::Refused;
      return r;
    }

    const bool flagged =
      channel == Channel::Datagram && query.has_option(wire::opt_ds_absent);
    // Unsigned fallback: the resolver has no DS and there is no bridge to
    // offer, so hand back the plain records.
    const bool unsigned_fallback = flagged && !cfg.bridge();

    auto add = [&](std::vector<ResourceRecord>& section,
                   const DomainName& owner,
                   RType type) {
      auto set = cfg.rrset(owner, type);
      if (!set)
        return false;
      section.insert(section.end(), set->begin(), set->end());
      if (!unsigned_fallback)
        if (auto sig = cfg.rrsig(owner, type))
          section.push_back(*sig);
      return true;
    };

    if (auto d = cfg.find_delegation(q.name))
    {
      add(r.authority, d->child, RType::NS);
      if (cfg.serves_ds(*d))
        add(r.authority, d->child, RType::DS);
      add(r.additional, d->ns_host, RType::A);
    }
    else
    {
      r.header.aa = true;
      if (!add(r.answers, q.name, q.type))
        r.header.rcode = wire::Rcode::NxDomain;
    }

    if (cfg.is_signed() && !unsigned_fallback)
      add(r.additional, cfg.zone(), RType::DNSKEY);

    if (flagged && cfg.bridge())
      r.add_option(wire::bridge_available_option(cfg.bridge()->port));
    return r;
  }

  struct TamperAccess
  {
    static void apply(ZoneConfig&, const mutation::Identity&) {}

    static void apply(ZoneConfig& cfg, const mutation::CorruptRrsig& m)
    {
      auto it = cfg.sigs_.find(ZoneConfig::key(m.owner, m.covered));
      if (it == cfg.sigs_.end())
        throw NameserverError(
          "no signature over " + m.owner.to_string() + " " +
          std::string(wire::to_string(m.covered)));
      auto& sig = std::get<wire::RrsigRdata>(it->second.rdata).signature;
      if (sig.empty())
        return;
      sig[m.byte_index % sig.size()] ^= m.mask;
    }

    static void apply(ZoneConfig& cfg, const mutation::ReplaceGlue& m)
    {
      for (auto& d : cfg.delegations_)
      {
        if (!(d.child == m.child))
          continue;
        d.glue = m.address;
        auto it = cfg.rrsets_.find(ZoneConfig::key(d.ns_host, RType::A));
        if (it != cfg.rrsets_.end())
          for (auto& rr : it->second)
            rr.rdata = wire::ARdata{m.address};
        return;
      }
      throw NameserverError("no delegation for " + m.child.to_string());
    }

    static void apply(ZoneConfig& cfg, const mutation::SwapKeys& m)
    {
      auto set = m.replacement.dnskey_rrset(cfg.ttl_);
      for (auto& rr : set)
        rr.owner = cfg.zone_;
      cfg.rrsets_[ZoneConfig::key(cfg.zone_, RType::DNSKEY)] = std::move(set);
    }
  };

  ZoneConfig tamper_hook(const ZoneConfig& cfg, const Mutation& m)
  {
    ZoneConfig out = cfg;
    std::visit([&](const auto& mut) { TamperAccess::apply(out, mut); }, m);
    return out;
  }

  namespace
  {
    const BridgeConfig& require_bridge(const ZoneConfig& cfg)
    {
      if (!cfg.bridge())
        throw NameserverError(cfg.zone().to_string() + " has no bridge");
      return *cfg.bridge();
    }
  }

  BridgeServer::BridgeServer(
    std::shared_ptr<const ZoneConfig> cfg, ByteView rng_seed) :
    cfg_(std::move(cfg)),
    session_(bridge::BridgeSession::server(require_bridge(*cfg_).identity, rng_seed))
  {}

  std::vector<Bytes> BridgeServer::on_flight(
    std::span<const Bytes> frames, int64_t now)
  {
    if (closed_)
      throw ChannelClosed();

    std::vector<Bytes> out;
    for (const auto& raw : frames)
    {
      bridge::Frame frame;
      try
      {
        frame = bridge::decode_frame(raw);
      }
      catch (const bridge::BridgeError&)
      {
        session_.deliver_frame(raw, now);
        break;
      }

      auto rec = std::get_if<bridge::EncryptedRecord>(&frame);
      if (!rec || session_.state() != bridge::State::Established)
      {
        for (const auto& msg : session_.deliver_frame(raw, now))
          out.push_back(bridge::encode_frame(msg));
        if (session_.state() == bridge::State::Aborted)
          break;
        continue;
      }

      wire::DnsMessage query;
      try
      {
        query = session_.open(*rec);
      }
      catch (const bridge::BridgeError&)
      {
        break;
      }
      auto answer = answer_query(*cfg_, query, Channel::Sealed);
      out.push_back(bridge::encode_frame(session_.seal(answer)));
      ++sealed_answers_;
      closed_ = true;
      break;
    }

    if (session_.state() == bridge::State::Aborted)
    {
      closed_ = true;
      return {};
    }
    return out;
  }
}
