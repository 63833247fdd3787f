// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/simnet.h"

#include <algorithm>

namespace islandbridge::simnet
{
  using resolver::RttPurpose;
  using resolver::TransportError;

  int64_t Topology::latency(Ipv4Address server) const
  {
    auto it = latency_ms.find(server);
    return it == latency_ms.end() ? default_latency_ms : it->second;
  }

  void Topology::validate() const
  {
    for (const auto& [addr, zone] : servers)
    {
      if (!zone)
        throw TopologyError("no zone at " + addr.to_string());
      for (const auto& d : zone->delegations())
      {
        auto it = servers.find(d.glue);
        if (it == servers.end())
          throw TopologyError(
            "delegation " + d.child.to_string() + " in " +
            zone->zone().to_string() + " points at " + d.glue.to_string() +
            ", where no server runs");
        if (!(it->second->zone() == d.child))
          throw TopologyError(
            "delegation " + d.child.to_string() + " points at " +
            d.glue.to_string() + ", which serves " +
            it->second->zone().to_string());
      }
    }
  }

  std::string_view mode_name(const Adversary& a)
  {
    struct V
    {
      std::string_view operator()(const adversary::None&) const
      {
        return "none";
      }
      std::string_view operator()(const adversary::OnPathTamper&) const
      {
        return "on_path_tamper";
      }
      std::string_view operator()(const adversary::OffPathSpoof&) const
      {
        return "off_path_spoof";
      }
      std::string_view operator()(const adversary::BridgeStrip&) const
      {
        return "bridge_strip";
      }
      std::string_view operator()(const adversary::ImpostorServer&) const
      {
        return "impostor";
      }
    };
    return std::visit(V{}, a);
  }

  nlohmann::ordered_json to_json(const RttLedger& ledger)
  {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : ledger)
    {
      nlohmann::ordered_json j;
      j["id"] = e.id;
      j["purpose"] = std::string(resolver::to_string(e.purpose));
      if (e.piggyback)
        j["piggyback"] = std::string(resolver::to_string(*e.piggyback));
      arr.push_back(std::move(j));
    }
    return arr;
  }

  nlohmann::ordered_json to_json(const Capture& c)
  {
    nlohmann::ordered_json j;
    j["t_ms"] = c.t_ms;
    j["src"] = c.src.to_string();
    j["dst"] = c.dst.to_string();
    j["channel"] = c.stream ? "stream" : "datagram";
    if (c.stream && !c.payload.empty())
      j["frame"] =
        std::string(bridge::to_string(static_cast<bridge::MessageType>(c.payload[0])));
    j["bytes"] = c.payload.size();
    auto digest = crypto::sha256(c.payload);
    j["sha256"] = to_hex(ByteView(digest.data(), 8));
    if (c.forged)
      j["forged"] = true;
    if (c.tampered)
      j["tampered"] = true;
    j["fate"] = c.fate == Fate::Delivered ? "delivered" :
      c.fate == Fate::Dropped             ? "dropped" :
                                            "pending";
    return j;
  }

  namespace
  {
    bool in_scope(const std::set<Ipv4Address>& links, Ipv4Address server)
    {
      return links.empty() || links.count(server) > 0;
    }

    Bytes seed_bytes(uint64_t seed)
    {
      Bytes out;
      put_u64(out, seed);
      return out;
    }
  }

  Network::Network(Topology topology, Adversary adversary) :
    topo_(std::move(topology)),
    adversary_(std::move(adversary)),
    rng_(seed_bytes(topo_.seed), "simnet")
  {}

  size_t Network::capture(const Packet& p, size_t frame, bool forged)
  {
    Capture c;
    c.t_ms = now_;
    c.src = p.src;
    c.dst = p.dst;
    c.stream = p.stream.has_value();
    c.forged = forged;
    c.payload = p.frames[frame];
    captures_.push_back(std::move(c));
    return captures_.size() - 1;
  }

  void Network::schedule(int64_t at, Packet p)
  {
    const auto seq = seq_++;
    queue_.push({at, seq});
    packets_.emplace(seq, std::move(p));
  }

  void Network::run_until_quiet()
  {
    while (!queue_.empty())
    {
      auto next = queue_.top();
      queue_.pop();
      now_ = std::max(now_, next.at);
      auto node = packets_.extract(next.seq);
      deliver(node.mapped());
    }
  }

  void Network::deliver(Packet& p)
  {
    for (auto id : p.capture_ids)
      captures_[id].fate = Fate::Delivered;
    stats_.delivered += p.frames.size();

    if (p.dst == topo_.resolver_address)
    {
      for (auto& f : p.frames)
        inbox_.push_back(std::move(f));
      return;
    }
    if (p.stream)
      on_server_stream(p);
    else
      on_server_datagram(p);
  }

  bool Network::intercept(Packet& p, Ipv4Address server, bool to_server)
  {
    stats_.sent += p.frames.size();
    std::vector<bool> tampered(p.frames.size(), false);
    std::vector<bool> dropped(p.frames.size(), false);

    if (auto t = std::get_if<adversary::OnPathTamper>(&adversary_))
    {
      const auto target = p.stream ?
        (to_server ? adversary::Target::StreamToServer :
                     adversary::Target::StreamToClient) :
        (to_server ? adversary::Target::UdpQuery : adversary::Target::UdpResponse);
      if (t->target == target && in_scope(t->links, server))
      {
        for (size_t i = 0; i < p.frames.size(); ++i)
        {
          if (seen_[target]++ != t->occurrence)
            continue;
          if (t->drop)
            dropped[i] = true;
          else if (!p.frames[i].empty())
          {
            p.frames[i][t->offset % p.frames[i].size()] ^= t->mask;
            tampered[i] = true;
          }
        }
      }
    }
    else if (auto s = std::get_if<adversary::BridgeStrip>(&adversary_))
    {
      if (!p.stream && !to_server && in_scope(s->links, server))
      {
        try
        {
          auto m = wire::decode(p.frames[0]);
          if (m.remove_option(wire::opt_bridge_available) > 0)
          {
            p.frames[0] = wire::encode(m);
            tampered[0] = true;
          }
        }
        catch (const wire::WireError&)
        {}
      }
    }

    Packet kept{p.src, p.dst, p.stream, {}, {}};
    for (size_t i = 0; i < p.frames.size(); ++i)
    {
      auto id = capture(p, i, false);
      captures_[id].tampered = tampered[i];
      if (dropped[i])
      {
        captures_[id].fate = Fate::Dropped;
        ++stats_.dropped;
        continue;
      }
      kept.frames.push_back(std::move(p.frames[i]));
      kept.capture_ids.push_back(id);
    }
    p = std::move(kept);
    return !p.frames.empty();
  }

  void Network::inject_spoofs(Ipv4Address server, ByteView query)
  {
    auto spoof = std::get_if<adversary::OffPathSpoof>(&adversary_);
    if (!spoof || !in_scope(spoof->links, server))
      return;

    wire::DnsMessage q;
    try
    {
      q = wire::decode(query);
    }
    catch (const wire::WireError&)
    {
      return;
    }
    if (!q.question)
      return;

    for (size_t i = 0; i < spoof->per_query; ++i)
    {
      const double draw =
        static_cast<double>(rng_.next_u64() >> 11) / static_cast<double>(1ULL << 53);
      const uint16_t guess = static_cast<uint16_t>(rng_.next_u64());

      wire::DnsMessage forged;
      forged.header.txid = draw < spoof->rate ? q.header.txid : guess;
      forged.header.qr = true;
      forged.header.aa = true;
      forged.question = q.question;
      forged.answers.push_back(
        {q.question->name, 300, wire::ARdata{spoof->forged_address}});
      if (q.edns)
        forged.edns = std::vector<wire::EdnsOption>{};

      Packet p{server, topo_.resolver_address, std::nullopt, {wire::encode(forged)}, {}};
      p.capture_ids.push_back(capture(p, 0, true));
      ++stats_.injected;
      // Lands while the genuine query is still on its way out.
      schedule(now_ + topo_.latency(server), std::move(p));
    }
  }

  std::vector<Bytes> Network::exchange_datagram(Ipv4Address server, ByteView query)
  {
    if (!topo_.servers.count(server))
      throw TransportError("no route to " + server.to_string());

    ledger_.push_back({next_ledger_id_++, RttPurpose::UdpQuery, std::nullopt});
    inbox_.clear();

    inject_spoofs(server, query);
    Packet p{
      topo_.resolver_address, server, std::nullopt, {Bytes(query.begin(), query.end())}, {}};
    if (intercept(p, server, true))
      schedule(now_ + topo_.latency(server), std::move(p));
    run_until_quiet();
    return std::move(inbox_);
  }

  void Network::on_server_datagram(const Packet& p)
  {
    const auto& zone = topo_.servers.at(p.dst);
    wire::DnsMessage query;
    try
    {
      query = wire::decode(p.frames[0]);
    }
    catch (const wire::WireError&)
    {
      return;
    }
    if (query.header.qr)
      return;

    auto response = nameserver::answer_query(*zone, query);
    Packet reply{p.dst, p.src, std::nullopt, {wire::encode(response)}, {}};
    if (intercept(reply, p.dst, false))
      schedule(now_ + topo_.latency(p.dst), std::move(reply));
  }

  uint64_t Network::connect(Ipv4Address server, uint16_t port)
  {
    Ipv4Address target = server;
    if (auto imp = std::get_if<adversary::ImpostorServer>(&adversary_))
      if (imp->at == server)
        target = imp->impostor;

    ledger_.push_back({next_ledger_id_++, RttPurpose::TcpHandshake, std::nullopt});

    auto it = topo_.servers.find(target);
    if (it == topo_.servers.end())
      throw TransportError("no route to " + target.to_string());
    now_ += 2 * topo_.latency(target);

    const auto& bridge = it->second->bridge();
    if (!bridge || bridge->port != port)
      throw TransportError(
        "connection refused by " + target.to_string() + ":" + std::to_string(port));

    const auto id = next_stream_++;
    Stream s;
    s.server = target;
    s.bridge = std::make_unique<nameserver::BridgeServer>(it->second, rng_.generate(32));
    streams_.emplace(id, std::move(s));
    return id;
  }

  std::vector<Bytes> Network::exchange_stream(
    uint64_t stream,
    std::span<const Bytes> frames,
    RttPurpose purpose,
    std::optional<RttPurpose> piggyback)
  {
    auto it = streams_.find(stream);
    if (it == streams_.end() || !it->second.open)
      throw TransportError("stream " + std::to_string(stream) + " is closed");

    ledger_.push_back({next_ledger_id_++, purpose, piggyback});
    inbox_.clear();

    for (const auto& f : frames)
      if (!f.empty() && f[0] == static_cast<uint8_t>(bridge::MessageType::EncryptedRecord))
        ++sealed_sent_;

    const auto server = it->second.server;
    Packet p{
      topo_.resolver_address,
      server,
      stream,
      std::vector<Bytes>(frames.begin(), frames.end()),
      {}};
    if (intercept(p, server, true))
      schedule(now_ + topo_.latency(server), std::move(p));
    run_until_quiet();
    return std::move(inbox_);
  }

  void Network::on_server_stream(const Packet& p)
  {
    auto& s = streams_.at(*p.stream);
    if (!s.open)
      return;

    std::vector<Bytes> reply;
    try
    {
      reply = s.bridge->on_flight(p.frames, now_ / 1000);
    }
    catch (const nameserver::ChannelClosed&)
    {
      s.open = false;
      return;
    }
    if (s.bridge->closed())
      s.open = false;
    if (reply.empty())
      return;

    Packet out{p.dst, p.src, p.stream, std::move(reply), {}};
    if (intercept(out, p.dst, false))
      schedule(now_ + topo_.latency(p.dst), std::move(out));
  }

  void Network::close(uint64_t stream)
  {
    auto it = streams_.find(stream);
    if (it != streams_.end())
      it->second.open = false;
  }

  RttLedger Network::take_ledger()
  {
    RttLedger out = std::move(ledger_);
    ledger_.clear();
    next_ledger_id_ = 1;
    return out;
  }

  NetStats Network::stats() const
  {
    NetStats s = stats_;
    s.pending = static_cast<size_t>(std::count_if(
      captures_.begin(), captures_.end(), [](const Capture& c) {
        return c.fate == Fate::Pending;
      }));
    return s;
  }

  SessionResult run_session(
    const Topology& topology,
    const resolver::ResolverConfig& cfg,
    std::span<const TimedQuestion> questions,
    const Adversary& adversary)
  {
    topology.validate();
    Network net(topology, adversary);
    resolver::Resolver res(cfg);

    SessionResult out;
    for (const auto& q : questions)
    {
      auto outcome = res.resolve(q.question, net, q.at);
      out.queries.push_back({std::move(outcome), net.take_ledger()});
    }
    out.stats = net.stats();
    out.captures = net.captures();
    out.sealed_payloads_sent = net.sealed_payloads_sent();
    out.forgeries_injected = net.forgeries_injected();
    return out;
  }

  std::pair<resolver::ResolutionOutcome, RttLedger> run_scenario(
    const Topology& topology,
    const resolver::ResolverConfig& cfg,
    const wire::Question& question,
    const Adversary& adversary,
    int64_t now)
  {
    TimedQuestion q{question, now};
    auto session = run_session(topology, cfg, std::span(&q, 1), adversary);
    auto& r = session.queries.front();
    return {std::move(r.outcome), std::move(r.ledger)};
  }
}
