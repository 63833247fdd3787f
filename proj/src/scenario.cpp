// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/scenario.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace islandbridge::scenario
{
  using nlohmann::json;
  using wire::DomainName;

  ScenarioError::ScenarioError(std::string path, const std::string& message) :
    std::runtime_error(
      (path.empty() ? std::string("/") : path) + ": " + message),
    path_(std::move(path))
  {}

  DomainName ZoneSpec::host() const
  {
    return ns_host ? *ns_host : name.child("ns1");
  }

  namespace
  {
    std::string escape_pointer(std::string_view key)
    {
      std::string out;
      for (char c : key)
      {
        if (c == '~')
          out += "~0";
        else if (c == '/')
          out += "~1";
        else
          out += c;
      }
      return out;
    }

    // A JSON value together with its pointer, so every error names the field.
    class Node
    {
    public:
      Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

      const std::string& path() const
      {
        return path_;
      }

      [[noreturn]] void fail(const std::string& message) const
      {
        throw ScenarioError(path_, message);
      }

      void expect_object(std::initializer_list<std::string_view> allowed) const
      {
        if (!j_->is_object())
          fail("expected an object");
        for (const auto& [key, _] : j_->items())
        {
          if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ScenarioError(
              path_ + "/" + escape_pointer(key), "unknown field");
        }
      }

      std::optional<Node> get(std::string_view key) const
      {
        auto it = j_->find(key);
        if (it == j_->end() || it->is_null())
          return std::nullopt;
        return Node(*it, path_ + "/" + escape_pointer(key));
      }

      Node at(std::string_view key) const
      {
        auto n = get(key);
        if (!n)
          throw ScenarioError(
            path_ + "/" + escape_pointer(key), "required field is missing");
        return *n;
      }

      std::vector<Node> items() const
      {
        if (!j_->is_array())
          fail("expected an array");
        std::vector<Node> out;
        for (size_t i = 0; i < j_->size(); ++i)
          out.emplace_back((*j_)[i], path_ + "/" + std::to_string(i));
        return out;
      }

      bool is_string() const
      {
        return j_->is_string();
      }

      const json& raw() const
      {
        return *j_;
      }

      std::string str() const
      {
        if (!j_->is_string())
          fail("expected a string");
        return j_->get<std::string>();
      }

      bool boolean() const
      {
        if (!j_->is_boolean())
          fail("expected a boolean");
        return j_->get<bool>();
      }

      uint64_t u64() const
      {
        // Documents built in code hold signed integers even when positive.
        if (!j_->is_number_integer() ||
            (!j_->is_number_unsigned() && j_->get<int64_t>() < 0))
          fail("expected a non-negative integer");
        return j_->get<uint64_t>();
      }

      uint64_t u64_max(uint64_t max) const
      {
        auto v = u64();
        if (v > max)
          fail("must be at most " + std::to_string(max));
        return v;
      }

      int64_t i64() const
      {
        if (!j_->is_number_integer())
          fail("expected an integer");
        if (j_->is_number_unsigned() &&
            j_->get<uint64_t>() >
              static_cast<uint64_t>(std::numeric_limits<int64_t>::max()))
          fail("integer out of range");
        return j_->get<int64_t>();
      }

      double number() const
      {
        if (!j_->is_number())
          fail("expected a number");
        return j_->get<double>();
      }

      Ipv4Address ip() const
      {
        auto a = Ipv4Address::parse(str());
        if (!a)
          fail("expected a dotted-quad IPv4 address");
        return *a;
      }

      DomainName name() const
      {
        try
        {
          return DomainName::parse(str());
        }
        catch (const ScenarioError&)
        {
          throw;
        }
        catch (const std::exception& e)
        {
          fail(std::string("bad domain name: ") + e.what());
        }
      }

      wire::RType rtype() const
      {
        auto t = wire::rtype_from_string(str());
        if (!t)
          fail("unknown record type");
        return *t;
      }

    private:
      const json* j_;
      std::string path_;
    };

    std::set<Ipv4Address> parse_links(const Node& n)
    {
      std::set<Ipv4Address> out;
      if (auto links = n.get("links"))
        for (const auto& item : links->items())
          out.insert(item.ip());
      return out;
    }

    simnet::adversary::Target parse_target(const Node& n)
    {
      using simnet::adversary::Target;
      const auto s = n.str();
      if (s == "udp_query")
        return Target::UdpQuery;
      if (s == "udp_response")
        return Target::UdpResponse;
      if (s == "stream_to_server")
        return Target::StreamToServer;
      if (s == "stream_to_client")
        return Target::StreamToClient;
      n.fail(
        "expected udp_query, udp_response, stream_to_server or "
        "stream_to_client");
    }

    simnet::Adversary parse_adversary(const Node& n)
    {
      namespace adv = simnet::adversary;
      const auto mode = n.at("mode").str();
      if (mode == "none")
      {
        n.expect_object({"mode"});
        return adv::None{};
      }
      if (mode == "on_path_tamper")
      {
        n.expect_object(
          {"mode", "links", "target", "occurrence", "offset", "mask", "drop"});
        adv::OnPathTamper a;
        a.links = parse_links(n);
        if (auto t = n.get("target"))
          a.target = parse_target(*t);
        if (auto v = n.get("occurrence"))
          a.occurrence = v->u64();
        if (auto v = n.get("offset"))
          a.offset = v->u64();
        if (auto v = n.get("mask"))
          a.mask = static_cast<uint8_t>(v->u64_max(255));
        if (auto v = n.get("drop"))
          a.drop = v->boolean();
        if (!a.drop && a.mask == 0)
          n.at("mask").fail("a zero mask changes nothing");
        return a;
      }
      if (mode == "off_path_spoof")
      {
        n.expect_object({"mode", "links", "rate", "forged_address", "per_query"});
        adv::OffPathSpoof a;
        a.links = parse_links(n);
        if (auto v = n.get("rate"))
        {
          a.rate = v->number();
          if (a.rate < 0.0 || a.rate > 1.0)
            v->fail("rate must lie in [0, 1]");
        }
        a.forged_address = n.at("forged_address").ip();
        if (auto v = n.get("per_query"))
          a.per_query = v->u64_max(1000);
        return a;
      }
      if (mode == "bridge_strip")
      {
        n.expect_object({"mode", "links"});
        return adv::BridgeStrip{parse_links(n)};
      }
      if (mode == "impostor")
      {
        n.expect_object({"mode", "at", "impostor"});
        return adv::ImpostorServer{n.at("at").ip(), n.at("impostor").ip()};
      }
      n.at("mode").fail(
        "expected none, on_path_tamper, off_path_spoof, bridge_strip or "
        "impostor");
    }

    BridgeSpec parse_bridge(const Node& n)
    {
      n.expect_object({"port", "cert"});
      BridgeSpec b;
      if (auto v = n.get("port"))
      {
        b.port = static_cast<uint16_t>(v->u64_max(65535));
        if (b.port == 0)
          v->fail("port must be non-zero");
      }
      if (auto c = n.get("cert"))
      {
        c->expect_object({"ip", "issuer", "not_before_offset", "not_after_offset"});
        if (auto v = c->get("ip"))
          b.cert.ip = v->ip();
        if (auto v = c->get("issuer"))
        {
          const auto s = v->str();
          if (s == "trusted")
            b.cert.issuer = Issuer::Trusted;
          else if (s == "unknown")
            b.cert.issuer = Issuer::Unknown;
          else if (s == "forged")
            b.cert.issuer = Issuer::Forged;
          else
            v->fail("expected trusted, unknown or forged");
        }
        if (auto v = c->get("not_before_offset"))
          b.cert.not_before_offset = v->i64();
        if (auto v = c->get("not_after_offset"))
          b.cert.not_after_offset = v->i64();
      }
      return b;
    }

    std::vector<RecordSpec> parse_records(const Node& n)
    {
      std::vector<RecordSpec> out;
      for (const auto& r : n.items())
      {
        r.expect_object({"name", "a"});
        out.push_back({r.at("name").name(), r.at("a").ip()});
      }
      return out;
    }

    wire::Question parse_question(const Node& n)
    {
      if (n.is_string())
        return {n.name(), wire::RType::A};
      n.expect_object({"name", "type"});
      wire::Question q{n.at("name").name(), wire::RType::A};
      if (auto t = n.get("type"))
        q.type = t->rtype();
      return q;
    }

    TamperSpec parse_tamper(const Node& n)
    {
      TamperSpec t;
      t.zone = n.at("zone").name();
      const auto kind = n.at("kind").str();
      if (kind == "identity")
      {
        n.expect_object({"zone", "kind"});
        t.kind = TamperKind::Identity;
      }
      else if (kind == "corrupt_rrsig")
      {
        n.expect_object({"zone", "kind", "owner", "covered", "byte", "mask"});
        t.kind = TamperKind::CorruptRrsig;
        t.owner = n.at("owner").name();
        if (auto v = n.get("covered"))
          t.covered = v->rtype();
        if (auto v = n.get("byte"))
          t.byte = v->u64();
        if (auto v = n.get("mask"))
        {
          t.mask = static_cast<uint8_t>(v->u64_max(255));
          if (t.mask == 0)
            v->fail("a zero mask changes nothing");
        }
      }
      else if (kind == "replace_glue")
      {
        n.expect_object({"zone", "kind", "child", "address"});
        t.kind = TamperKind::ReplaceGlue;
        t.child = n.at("child").name();
        t.address = n.at("address").ip();
      }
      else if (kind == "swap_keys")
      {
        n.expect_object({"zone", "kind"});
        t.kind = TamperKind::SwapKeys;
      }
      else
        n.at("kind").fail(
          "expected identity, corrupt_rrsig, replace_glue or swap_keys");
      return t;
    }

    Bytes seed_bytes(uint64_t seed)
    {
      Bytes b;
      put_u64(b, seed);
      return b;
    }

    crypto::Key32 derive(uint64_t seed, std::string_view label)
    {
      return crypto::hmac_sha256(seed_bytes(seed), to_bytes(label));
    }

    std::string key_of(const DomainName& n)
    {
      return n.canonical().to_string();
    }
  }

  Scenario parse(const json& doc)
  {
    Node root(doc, "");
    root.expect_object(
      {"scenario_version",
       "name",
       "seed",
       "time",
       "question",
       "queries",
       "zones",
       "rogue_servers",
       "latency",
       "resolver",
       "adversary",
       "tamper"});

    const auto version = root.at("scenario_version");
    if (version.u64() != schema_version)
      version.fail("unsupported version (expected 1)");

    Scenario s;
    if (auto v = root.get("name"))
      s.name = v->str();
    if (auto v = root.get("seed"))
      s.seed = v->u64();
    if (auto v = root.get("time"))
    {
      s.time = v->i64();
      if (s.time < 86400 || s.time > 0xFFFFFFFFll - 31 * 86400ll)
        v->fail("time must fit the 32-bit signature validity window");
    }

    const auto zones = root.at("zones");
    for (const auto& z : zones.items())
    {
      z.expect_object(
        {"name",
         "server",
         "ns_host",
         "signed",
         "parent_publishes_ds",
         "bridge",
         "records",
         "ttl"});
      ZoneSpec zs;
      zs.name = z.at("name").name();
      zs.server = z.at("server").ip();
      if (auto v = z.get("ns_host"))
        zs.ns_host = v->name();
      if (auto v = z.get("signed"))
        zs.is_signed = v->boolean();
      if (auto v = z.get("parent_publishes_ds"))
        zs.parent_publishes_ds = v->boolean();
      if (auto v = z.get("bridge"))
        zs.bridge = parse_bridge(*v);
      if (auto v = z.get("records"))
        zs.records = parse_records(*v);
      if (auto v = z.get("ttl"))
        zs.ttl = static_cast<uint32_t>(v->u64_max(0x7FFFFFFF));
      s.zones.push_back(std::move(zs));
    }
    if (s.zones.empty())
      zones.fail("at least the root zone is required");

    if (auto rogues = root.get("rogue_servers"))
    {
      for (const auto& r : rogues->items())
      {
        r.expect_object(
          {"address", "zone", "signed", "bridge", "copy_cert_from", "records"});
        RogueSpec rs;
        rs.address = r.at("address").ip();
        rs.zone = r.at("zone").name();
        if (auto v = r.get("signed"))
          rs.is_signed = v->boolean();
        if (auto v = r.get("bridge"))
          rs.bridge = parse_bridge(*v);
        if (auto v = r.get("copy_cert_from"))
        {
          if (!rs.bridge)
            v->fail("a copied certificate needs a bridge");
          rs.copy_cert_from = v->ip();
        }
        if (auto v = r.get("records"))
          rs.records = parse_records(*v);
        s.rogues.push_back(std::move(rs));
      }
    }

    if (auto lat = root.get("latency"))
    {
      lat->expect_object({"default", "servers"});
      if (auto v = lat->get("default"))
        s.default_latency_ms = static_cast<int64_t>(v->u64_max(60000));
      if (auto servers = lat->get("servers"))
      {
        if (!servers->raw().is_object())
          servers->fail("expected an object of address: milliseconds");
        for (const auto& [addr, _] : servers->raw().items())
        {
          auto n = servers->at(addr);
          auto ip = Ipv4Address::parse(addr);
          if (!ip)
            n.fail("key is not an IPv4 address");
          s.latency_ms[*ip] = static_cast<int64_t>(n.u64_max(60000));
        }
      }
    }

    if (auto r = root.get("resolver"))
    {
      r->expect_object(
        {"address",
         "bridging",
         "trust_anchor",
         "cache_capacity",
         "accept_unvalidated",
         "expected_bridges"});
      if (auto v = r->get("address"))
        s.resolver.address = v->ip();
      if (auto v = r->get("bridging"))
        s.resolver.bridging = v->boolean();
      if (auto v = r->get("trust_anchor"))
        s.resolver.trust_anchor = v->boolean();
      if (auto v = r->get("cache_capacity"))
        s.resolver.cache_capacity = v->u64_max(1u << 20);
      if (auto v = r->get("accept_unvalidated"))
        s.resolver.accept_unvalidated = v->boolean();
      if (auto v = r->get("expected_bridges"))
        for (const auto& item : v->items())
          s.resolver.expected_bridges.push_back(item.ip());
    }

    if (auto a = root.get("adversary"))
      s.adversary = parse_adversary(*a);

    if (auto t = root.get("tamper"))
      for (const auto& item : t->items())
        s.tamper.push_back(parse_tamper(item));

    const auto question = root.get("question");
    const auto queries = root.get("queries");
    if (question && queries)
      queries->fail("give either question or queries, not both");
    if (question)
      s.queries.push_back({parse_question(*question), 0});
    else if (queries)
    {
      for (const auto& q : queries->items())
      {
        q.expect_object({"name", "type", "at"});
        QuerySpec qs;
        qs.question.name = q.at("name").name();
        if (auto t = q.get("type"))
          qs.question.type = t->rtype();
        if (auto v = q.get("at"))
          qs.offset = static_cast<int64_t>(v->u64_max(30 * 86400));
        s.queries.push_back(std::move(qs));
      }
      if (s.queries.empty())
        queries->fail("at least one query is required");
    }
    else
      throw ScenarioError("/question", "required field is missing");

    return s;
  }

  Scenario load_file(const std::string& path)
  {
    std::ifstream in(path);
    if (!in)
      throw ScenarioError("", "cannot open " + path);
    json doc;
    try
    {
      doc = json::parse(in);
    }
    catch (const json::parse_error& e)
    {
      throw ScenarioError("", std::string("invalid JSON: ") + e.what());
    }
    return parse(doc);
  }

  namespace
  {
    class Builder
    {
    public:
      explicit Builder(const Scenario& s) :
        s_(s),
        ca_(ipcert::CaIdentity::create(
          "IslandBridge Test CA", derive(s.seed, "ca"))),
        unknown_ca_(
          ipcert::CaIdentity::create("Unlisted CA", derive(s.seed, "ca:unknown"))),
        forged_ca_(ipcert::CaIdentity::create(
          "IslandBridge Test CA", derive(s.seed, "ca:forged"))),
        validity_{
          static_cast<uint32_t>(s.time - 86400),
          static_cast<uint32_t>(s.time + 30 * 86400)}
      {}

      Built build()
      {
        Built out;
        out.topology.resolver_address = s_.resolver.address;
        out.topology.default_latency_ms = s_.default_latency_ms;
        out.topology.latency_ms = s_.latency_ms;
        out.topology.seed = s_.seed;

        // Shallow zones first so every parent exists before its children.
        std::vector<size_t> order(s_.zones.size());
        for (size_t i = 0; i < order.size(); ++i)
          order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
          return s_.zones[a].name.label_count() < s_.zones[b].name.label_count();
        });

        std::map<std::string, size_t> index;
        for (size_t i : order)
        {
          const auto& z = s_.zones[i];
          const auto path = "/zones/" + std::to_string(i);
          if (!index.emplace(key_of(z.name), i).second)
            throw ScenarioError(path + "/name", "duplicate zone");
        }
        if (!index.count(key_of(DomainName::root())))
          throw ScenarioError("/zones", "no root zone");

        std::map<std::string, std::shared_ptr<nameserver::ZoneConfig>> cfgs;
        std::map<std::string, dnssec::ZoneKeys> keys;
        for (size_t i : order)
        {
          const auto& z = s_.zones[i];
          const auto path = "/zones/" + std::to_string(i);
          std::optional<dnssec::ZoneKeys> k;
          if (z.is_signed)
          {
            k = dnssec::generate_zone_keys(
              z.name, derive(s_.seed, "zone:" + key_of(z.name)));
            keys.emplace(key_of(z.name), *k);
          }
          auto cfg =
            std::make_shared<nameserver::ZoneConfig>(z.name, k, validity_, z.ttl);
          for (size_t j = 0; j < z.records.size(); ++j)
            add_record(*cfg, z.records[j], path + "/records/" + std::to_string(j));
          cfgs[key_of(z.name)] = cfg;

          if (!z.name.is_root())
          {
            auto parent = z.name.parent();
            while (!index.count(key_of(parent)))
              parent = parent.parent();
            nameserver::Delegation d;
            d.child = z.name;
            d.ns_host = z.host();
            d.glue = z.server;
            d.publish_ds = z.parent_publishes_ds;
            if (k)
              d.child_ksk = k->ksk_dnskey();
            try
            {
              cfgs.at(key_of(parent))->add_delegation(d);
            }
            catch (const nameserver::NameserverError& e)
            {
              throw ScenarioError(path + "/ns_host", e.what());
            }
          }
        }

        // Records added to a parent after the child exists would be caught
        // by add_address; records below a later delegation are caught here.
        for (size_t i : order)
        {
          const auto& z = s_.zones[i];
          const auto& cfg = *cfgs.at(key_of(z.name));
          for (size_t j = 0; j < z.records.size(); ++j)
            if (cfg.find_delegation(z.records[j].name))
              throw ScenarioError(
                "/zones/" + std::to_string(i) + "/records/" + std::to_string(j),
                "name lies below a delegation");
        }

        std::map<Ipv4Address, Bytes> genuine_certs;
        for (size_t i = 0; i < s_.zones.size(); ++i)
        {
          const auto& z = s_.zones[i];
          if (!z.bridge)
            continue;
          auto identity = make_identity(
            *z.bridge, z.server, "bridge:" + key_of(z.name));
          genuine_certs[z.server] = identity.certificate;
          cfgs.at(key_of(z.name))->set_bridge({z.bridge->port, identity});
        }

        for (size_t i = 0; i < s_.tamper.size(); ++i)
        {
          const auto& t = s_.tamper[i];
          const auto path = "/tamper/" + std::to_string(i);
          auto it = cfgs.find(key_of(t.zone));
          if (it == cfgs.end())
            throw ScenarioError(path + "/zone", "no such zone");
          try
          {
            it->second = std::make_shared<nameserver::ZoneConfig>(
              nameserver::tamper_hook(*it->second, mutation_of(t)));
          }
          catch (const nameserver::NameserverError& e)
          {
            throw ScenarioError(path, e.what());
          }
        }

        for (size_t i = 0; i < s_.zones.size(); ++i)
        {
          const auto& z = s_.zones[i];
          auto cfg = cfgs.at(key_of(z.name));
          if (!out.topology.servers.emplace(z.server, cfg).second)
            throw ScenarioError(
              "/zones/" + std::to_string(i) + "/server", "address already in use");
          out.zones[key_of(z.name)] = cfg;
        }

        for (size_t i = 0; i < s_.rogues.size(); ++i)
        {
          const auto path = "/rogue_servers/" + std::to_string(i);
          auto cfg = build_rogue(s_.rogues[i], genuine_certs, path);
          if (!out.topology.servers.emplace(s_.rogues[i].address, cfg).second)
            throw ScenarioError(path + "/address", "address already in use");
        }

        for (const auto& [addr, _] : s_.latency_ms)
          if (!out.topology.servers.count(addr))
            throw ScenarioError(
              "/latency/servers/" + addr.to_string(), "no server at this address");

        const auto& root = s_.zones[index.at(key_of(DomainName::root()))];
        auto& rc = out.resolver;
        if (s_.resolver.trust_anchor && root.is_signed)
          rc.trust_anchors.push_back(dnssec::make_trust_anchor(
            dnssec::compute_ds(keys.at(key_of(root.name)).ksk_dnskey())));
        rc.trust_store.add(ca_.root());
        rc.bridging_enabled = s_.resolver.bridging;
        rc.cache_capacity = s_.resolver.cache_capacity;
        rc.accept_unvalidated = s_.resolver.accept_unvalidated;
        rc.root_hint = root.server;
        rc.expected_bridges = {
          s_.resolver.expected_bridges.begin(), s_.resolver.expected_bridges.end()};
        const auto rs = derive(s_.seed, "resolver");
        rc.rng_seed.assign(rs.begin(), rs.end());

        out.adversary = s_.adversary;
        if (auto imp = std::get_if<simnet::adversary::ImpostorServer>(&out.adversary))
        {
          if (!out.topology.servers.count(imp->impostor))
            throw ScenarioError("/adversary/impostor", "no server at this address");
          if (!out.topology.servers.count(imp->at))
            throw ScenarioError("/adversary/at", "no server at this address");
        }

        for (const auto& q : s_.queries)
          out.questions.push_back({q.question, s_.time + q.offset});

        try
        {
          out.topology.validate();
        }
        catch (const simnet::TopologyError& e)
        {
          throw ScenarioError("/zones", e.what());
        }
        return out;
      }

    private:
      static void add_record(
        nameserver::ZoneConfig& cfg, const RecordSpec& r, const std::string& path)
      {
        try
        {
          cfg.add_address(r.name, r.address);
        }
        catch (const nameserver::NameserverError& e)
        {
          throw ScenarioError(path + "/name", e.what());
        }
      }

      const ipcert::CaIdentity& issuer(Issuer i) const
      {
        switch (i)
        {
          case Issuer::Unknown:
            return unknown_ca_;
          case Issuer::Forged:
            return forged_ca_;
          case Issuer::Trusted:
            break;
        }
        return ca_;
      }

      bridge::ServerIdentity make_identity(
        const BridgeSpec& b, Ipv4Address own, const std::string& label)
      {
        bridge::ServerIdentity id;
        id.keypair = crypto::X25519KeyPair::from_seed(derive(s_.seed, label));
        auto cert = ipcert::issue_cert(
          issuer(b.cert.issuer),
          b.cert.ip.value_or(own),
          id.keypair.public_key,
          {s_.time + b.cert.not_before_offset, s_.time + b.cert.not_after_offset});
        id.certificate = cert.encode();
        return id;
      }

      nameserver::Mutation mutation_of(const TamperSpec& t) const
      {
        switch (t.kind)
        {
          case TamperKind::Identity:
            return nameserver::mutation::Identity{};
          case TamperKind::CorruptRrsig:
            return nameserver::mutation::CorruptRrsig{
              t.owner, t.covered, t.byte, t.mask};
          case TamperKind::ReplaceGlue:
            return nameserver::mutation::ReplaceGlue{t.child, t.address};
          case TamperKind::SwapKeys:
            return nameserver::mutation::SwapKeys{dnssec::generate_zone_keys(
              t.zone, derive(s_.seed, "swap:" + key_of(t.zone)))};
        }
        return nameserver::mutation::Identity{};
      }

      simnet::ZonePtr build_rogue(
        const RogueSpec& r,
        const std::map<Ipv4Address, Bytes>& genuine_certs,
        const std::string& path)
      {
        std::optional<dnssec::ZoneKeys> k;
        const auto tag = r.address.to_string() + ":" + key_of(r.zone);
        if (r.is_signed)
          k = dnssec::generate_zone_keys(r.zone, derive(s_.seed, "rogue:" + tag));
        auto cfg = std::make_shared<nameserver::ZoneConfig>(r.zone, k, validity_);
        for (size_t j = 0; j < r.records.size(); ++j)
          add_record(*cfg, r.records[j], path + "/records/" + std::to_string(j));
        if (r.bridge)
        {
          auto id = make_identity(*r.bridge, r.address, "rogue-bridge:" + tag);
          if (r.copy_cert_from)
          {
            auto it = genuine_certs.find(*r.copy_cert_from);
            if (it == genuine_certs.end())
              throw ScenarioError(
                path + "/copy_cert_from", "no bridged server at this address");
            id.certificate = it->second;
          }
          cfg->set_bridge({r.bridge->port, id});
        }
        return cfg;
      }

      const Scenario& s_;
      ipcert::CaIdentity ca_;
      ipcert::CaIdentity unknown_ca_;
      ipcert::CaIdentity forged_ca_;
      dnssec::Validity validity_;
    };
  }

  Built build(const Scenario& s)
  {
    return Builder(s).build();
  }

  Scenario baseline_of(const Scenario& s)
  {
    Scenario b = s;
    for (auto& z : b.zones)
    {
      z.is_signed = true;
      z.parent_publishes_ds = true;
      z.bridge.reset();
    }
    b.rogues.clear();
    b.tamper.clear();
    b.adversary = simnet::adversary::None{};
    b.resolver.trust_anchor = true;
    b.resolver.expected_bridges.clear();
    for (auto it = b.latency_ms.begin(); it != b.latency_ms.end();)
    {
      const bool genuine = std::any_of(
        b.zones.begin(), b.zones.end(), [&](const ZoneSpec& z) {
          return z.server == it->first;
        });
      it = genuine ? std::next(it) : b.latency_ms.erase(it);
    }
    return b;
  }

  Report run(const Built& built, const Scenario& s)
  {
    Report r;
    r.name = s.name;
    r.seed = s.seed;
    r.session = simnet::run_session(
      built.topology, built.resolver, built.questions, built.adversary);

    const auto base_built = build(baseline_of(s));
    const auto base = simnet::run_session(
      base_built.topology,
      base_built.resolver,
      base_built.questions,
      base_built.adversary);

    for (size_t i = 0; i < r.session.queries.size(); ++i)
      r.queries.push_back({r.session.queries[i], base.queries[i].outcome.rtt_count});
    return r;
  }

  Report run(const Scenario& s)
  {
    return run(build(s), s);
  }

  namespace
  {
    std::string answer_text(const std::optional<wire::RRset>& answer)
    {
      if (!answer || answer->empty())
        return "-";
      std::string out;
      for (const auto& rr : *answer)
      {
        if (!out.empty())
          out += ',';
        if (auto a = std::get_if<wire::ARdata>(&rr.rdata))
          out += a->address.to_string();
        else
          out += std::string(wire::to_string(rr.type()));
      }
      return out;
    }
  }

  std::string outcome_line(const QueryReport& q)
  {
    const auto& o = q.result.outcome;
    std::ostringstream out;
    out << o.label() << ' ' << answer_text(o.answer) << " rtt=" << o.rtt_count
        << " extra_rtt=" << q.extra_rtt();
    return out.str();
  }

  nlohmann::ordered_json to_json(const Report& r)
  {
    nlohmann::ordered_json j;
    j["scenario_version"] = schema_version;
    j["name"] = r.name;
    j["seed"] = r.seed;
    auto& queries = j["queries"] = nlohmann::ordered_json::array();
    for (const auto& q : r.queries)
    {
      const auto& o = q.result.outcome;
      nlohmann::ordered_json e;
      e["status"] = std::string(resolver::to_string(o.status));
      e["label"] = o.label();
      e["reason"] = o.reason;
      auto& ans = e["answer"] = nlohmann::ordered_json::array();
      if (o.answer)
        for (const auto& rr : *o.answer)
          if (auto a = std::get_if<wire::ARdata>(&rr.rdata))
            ans.push_back(a->address.to_string());
      e["rtt"] = o.rtt_count;
      e["extra_rtt"] = q.extra_rtt();
      e["downgrade"] = o.downgrade;
      e["ledger"] = simnet::to_json(q.result.ledger);
      e["transcript"] = islandbridge::to_json(o.transcript);
      queries.push_back(std::move(e));
    }
    j["network"] = {
      {"sent", r.session.stats.sent},
      {"injected", r.session.stats.injected},
      {"delivered", r.session.stats.delivered},
      {"dropped", r.session.stats.dropped},
      {"pending", r.session.stats.pending},
      {"sealed_payloads_sent", r.session.sealed_payloads_sent},
    };
    return j;
  }

  int exit_code(resolver::Status s)
  {
    switch (s)
    {
      case resolver::Status::Secure:
      case resolver::Status::BridgedSecure:
        return 0;
      case resolver::Status::BridgedEncrypted:
      case resolver::Status::Insecure:
        return 1;
      case resolver::Status::Bogus:
      case resolver::Status::Aborted:
        break;
    }
    return 2;
  }
}
