// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/resolver.h"

#include "islandbridge/bridge.h"

#include <algorithm>
#include <sstream>
#include <variant>

namespace islandbridge::resolver
{
  using wire::DnsMessage;
  using wire::DomainName;
  using wire::ResourceRecord;
  using wire::RRset;
  using wire::RType;

  std::string_view to_string(RttPurpose p)
  {
    switch (p)
    {
      case RttPurpose::UdpQuery:
        return "udp_query";
      case RttPurpose::TcpHandshake:
        return "tcp_handshake";
      case RttPurpose::TlsFlight1:
        return "tls_flight_1";
      case RttPurpose::TlsFlight2:
        return "tls_flight_2";
      case RttPurpose::SealedQuery:
        return "sealed_query";
    }
    return "?";
  }

  std::string_view to_string(Status s)
  {
    switch (s)
    {
      case Status::Secure:
        return "Secure";
      case Status::BridgedSecure:
        return "BridgedSecure";
      case Status::BridgedEncrypted:
        return "BridgedEncrypted";
      case Status::Insecure:
        return "Insecure";
      case Status::Bogus:
        return "Bogus";
      case Status::Aborted:
        return "Aborted";
    }
    return "?";
  }

  std::string ResolutionOutcome::label() const
  {
    std::string out(to_string(status));
    if (!reason.empty())
      out += "(" + reason + ")";
    return out;
  }

  ResolveError::ResolveError(ResolveErrc code, const std::string& detail) :
    std::runtime_error(
      std::string(code == ResolveErrc::NoRoute ? "NoRoute" : "MaxDepthExceeded") +
      ": " + detail),
    code_(code)
  {}

  ChainState ChainState::anchored(std::span<const dnssec::TrustAnchor> anchors)
  {
    ChainState st;
    st.current_zone = DomainName::root();
    for (const auto& a : anchors)
      st.expected_ds.push_back(a.ds);
    if (st.expected_ds.empty())
    {
      // Nothing to anchor the root with: the walk starts inside a gap.
      st.security = Security::GapOpen;
      st.gap_zone = DomainName::root();
    }
    return st;
  }

  namespace
  {
    std::vector<ResourceRecord> all_records(const DnsMessage& m)
    {
      std::vector<ResourceRecord> out;
      out.reserve(m.answers.size() + m.authority.size() + m.additional.size());
      for (const auto* section : {&m.answers, &m.authority, &m.additional})
        out.insert(out.end(), section->begin(), section->end());
      return out;
    }

    struct Failure
    {
      std::string reason;
      std::string where;
    };

    std::string describe(const RRset& set)
    {
      return std::string(wire::to_string(set.front().type())) + " " +
        set.front().owner.to_string();
    }

    /// Tries every covering RRSIG with every candidate key.
    std::optional<Failure> verify_with(
      const RRset& rrset,
      std::span<const ResourceRecord> records,
      std::span<const dnssec::Dnskey> keys,
      int64_t now)
    {
      std::optional<dnssec::VerifyFailure> best;
      bool any_sig = false;
      for (const auto& rr : records)
      {
        auto sig = dnssec::Rrsig::from_record(rr);
        if (
          !sig || !(sig->owner == rrset.front().owner) ||
          sig->rdata.type_covered != rrset.front().type())
          continue;
        any_sig = true;
        for (const auto& key : keys)
        {
          auto r = dnssec::verify_rrsig(rrset, *sig, key, now);
          if (r.valid())
            return std::nullopt;
          // KeyMismatch only says "wrong key"; keep anything sharper.
          if (!best || *best == dnssec::VerifyFailure::KeyMismatch)
            best = r.failure;
        }
      }
      if (!any_sig)
        return Failure{"MissingRrsig", describe(rrset)};
      return Failure{
        best ? std::string(dnssec::to_string(*best)) : "KeyMismatch",
        describe(rrset)};
    }

    struct SignedCheck
    {
      std::optional<Failure> failure;
      std::vector<dnssec::Dnskey> ksks;
    };

    /// Every RRset in `m` must validate under `zone`'s keys. With
    /// `expected_ds` the KSK must match one of those DS records; without it
    /// any KSK in the RRset is taken at its word.
    SignedCheck check_signed(
      const DnsMessage& m,
      const DomainName& zone,
      const std::vector<dnssec::Ds>* expected_ds,
      int64_t now)
    {
      const auto records = all_records(m);
      std::vector<ResourceRecord> data;
      for (const auto& rr : records)
        if (rr.type() != RType::RRSIG)
          data.push_back(rr);
      const auto groups = wire::group_rrsets(data);

      const RRset* dnskey_set = nullptr;
      for (const auto& g : groups)
        if (g.front().type() == RType::DNSKEY && g.front().owner == zone)
          dnskey_set = &g;
      if (!dnskey_set)
        return {Failure{"MissingDnskey", zone.to_string()}, {}};

      std::vector<dnssec::Dnskey> zsks, ksks;
      for (const auto& rr : *dnskey_set)
      {
        auto key = dnssec::Dnskey::from_record(rr);
        if (!key->is_zone_key() || key->rdata.protocol != dnssec::dnskey_protocol)
          continue;
        if (!key->is_ksk())
          zsks.push_back(*key);
        else if (
          !expected_ds ||
          std::any_of(expected_ds->begin(), expected_ds->end(), [&](const auto& ds) {
            return dnssec::match_ds(ds, *key);
          }))
          ksks.push_back(*key);
      }
      if (ksks.empty())
        return {
          Failure{expected_ds ? "DsMismatch" : "MissingKsk", zone.to_string()},
          {}};

      if (auto f = verify_with(*dnskey_set, records, ksks, now))
        return {f, {}};

      for (const auto& g : groups)
      {
        if (&g == dnskey_set)
          continue;
        if (!g.front().owner.is_subdomain_of(zone))
          return {Failure{"OutOfBailiwick", describe(g)}, {}};
        if (auto f = verify_with(g, records, zsks, now))
          return {f, {}};
      }
      return {std::nullopt, ksks};
    }

    struct Referral
    {
      DomainName child;
      DomainName ns_host;
      std::optional<Ipv4Address> glue;
      std::vector<dnssec::Ds> ds;
    };

    enum class Shape
    {
      Answer,
      Referral,
      LameReferral,
      NoAnswer,
    };

    Shape shape_of(
      const DnsMessage& m, const DomainName& zone, const wire::Question& q)
    {
      if (!wire::select(m.answers, q.name, q.type).empty())
        return Shape::Answer;
      if (m.header.rcode != wire::Rcode::NoError || !m.answers.empty())
        return Shape::NoAnswer;
      for (const auto& rr : m.authority)
      {
        if (rr.type() != RType::NS)
          continue;
        if (
          rr.owner.is_subdomain_of(zone) && !(rr.owner == zone) &&
          q.name.is_subdomain_of(rr.owner))
          return Shape::Referral;
        return Shape::LameReferral;
      }
      return Shape::NoAnswer;
    }

    Referral referral_of(const DnsMessage& m)
    {
      Referral r;
      for (const auto& rr : m.authority)
      {
        if (auto ns = std::get_if<wire::NsRdata>(&rr.rdata))
        {
          r.child = rr.owner;
          r.ns_host = ns->host;
          break;
        }
      }
      for (const auto& rr : m.authority)
        if (auto ds = dnssec::Ds::from_record(rr); ds && ds->owner == r.child)
          r.ds.push_back(*ds);
      for (const auto& rr : m.additional)
      {
        if (auto a = std::get_if<wire::ARdata>(&rr.rdata); a && rr.owner == r.ns_host)
        {
          r.glue = a->address;
          break;
        }
      }
      return r;
    }

    std::string rcode_name(wire::Rcode rc)
    {
      switch (rc)
      {
        case wire::Rcode::NoError:
          return "NOERROR";
        case wire::Rcode::FormErr:
          return "FORMERR";
        case wire::Rcode::ServFail:
          return "SERVFAIL";
        case wire::Rcode::NxDomain:
          return "NXDOMAIN";
        case wire::Rcode::Refused:
          return "REFUSED";
      }
      return "RCODE" + std::to_string(static_cast<int>(rc));
    }

    std::string summarize(const DnsMessage& m)
    {
      std::ostringstream os;
      os << rcode_name(m.header.rcode) << " an=" << m.answers.size()
         << " ns=" << m.authority.size() << " ar=" << m.additional.size();
      if (auto port = wire::bridge_port(m))
        os << " +BRIDGE_AVAILABLE(" << *port << ")";
      return os.str();
    }

    std::string rrset_text(const RRset& set)
    {
      std::string out;
      for (const auto& rr : set)
      {
        if (!out.empty())
          out += ",";
        if (auto a = std::get_if<wire::ARdata>(&rr.rdata))
          out += a->address.to_string();
      }
      return out;
    }

    std::string flight_text(std::span<const Bytes> frames)
    {
      std::string out;
      for (const auto& f : frames)
      {
        if (!out.empty())
          out += ",";
        if (f.empty())
        {
          out += "?";
          continue;
        }
        out += std::string(bridge::to_string(static_cast<bridge::MessageType>(f[0])));
      }
      return out;
    }

    uint32_t min_ttl(const RRset& set)
    {
      uint32_t ttl = UINT32_MAX;
      for (const auto& rr : set)
        ttl = std::min(ttl, rr.ttl);
      return set.empty() ? 0 : ttl;
    }

    /// State of one resolution.
    class Walk
    {
    public:
      Walk(
        const ResolverConfig& cfg,
        Transport& net,
        const wire::Question& q,
        int64_t now,
        ByteView seed) :
        cfg_(cfg),
        net_(net),
        q_(q),
        now_(now),
        rng_(seed, "resolution")
      {}

      Transcript& transcript()
      {
        return t_;
      }

      void emit(
        EventKind kind,
        int step,
        std::string zone,
        std::string peer,
        std::string detail,
        bool round_trip = false)
      {
        t_.push_back(
          {net_.now_ms(),
           kind,
           step,
           std::move(zone),
           std::move(peer),
           std::move(detail),
           round_trip});
      }

      ResolutionOutcome finish(
        Status status, std::string reason, std::optional<RRset> answer = {})
      {
        ResolutionOutcome out;
        out.status = status;
        out.reason = std::move(reason);
        out.answer = std::move(answer);
        out.downgrade = downgrade_;
        std::string detail = out.label();
        if (out.answer)
          detail += " " + rrset_text(*out.answer);
        if (downgrade_)
          detail += " downgrade";
        emit(EventKind::Outcome, 0, "", "", detail);
        out.transcript = std::move(t_);
        out.rtt_count = count_round_trips(out.transcript);
        return out;
      }

      ResolutionOutcome run();

    private:
      using BridgeResult = std::variant<DnsMessage, std::string>;

      DnsMessage make_query(bool flagged)
      {
        DnsMessage m;
        m.header.txid = static_cast<uint16_t>(rng_.next_u64());
        m.question = q_;
        m.edns = std::vector<wire::EdnsOption>{};
        if (flagged)
          m.add_option(wire::ds_absent_option());
        return m;
      }

      bool matches(const DnsMessage& query, const DnsMessage& r) const
      {
        return r.header.qr && r.header.txid == query.header.txid &&
          r.question && *r.question == *query.question;
      }

      BridgeResult run_bridge(
        Ipv4Address server, uint16_t port, const DomainName& zone);

      const ResolverConfig& cfg_;
      Transport& net_;
      wire::Question q_;
      int64_t now_;
      crypto::Drbg rng_;
      Transcript t_;
      bool downgrade_ = false;
    };

    Walk::BridgeResult Walk::run_bridge(
      Ipv4Address server, uint16_t port, const DomainName& zone)
    {
      const auto zname = zone.to_string();
      const auto peer = server.to_string();

      emit(EventKind::TcpConnect, 8, zname, peer, "port " + std::to_string(port), true);
      const auto stream = net_.connect(server, port);

      auto seed = rng_.generate(32);
      auto [session, hello] =
        bridge::BridgeSession::client_start(server, cfg_.trust_store, seed);

      const std::vector<Bytes> flight1 = {bridge::encode_frame(hello)};
      emit(EventKind::HandshakeSend, 9, zname, peer, flight_text(flight1), true);
      const auto reply1 =
        net_.exchange_stream(stream, flight1, RttPurpose::TlsFlight1);
      emit(EventKind::HandshakeRecv, 10, zname, peer, flight_text(reply1));

      bridge::Flight flight2;
      for (const auto& frame : reply1)
      {
        flight2 = session.deliver_frame(frame, now_);
        if (session.state() == bridge::State::Aborted)
          break;
      }

      auto abort_with = [&](const std::string& reason, int step) {
        emit(EventKind::Abort, step, zname, peer, reason);
        net_.close(stream);
        return BridgeResult(reason);
      };

      if (session.state() == bridge::State::Aborted)
      {
        const auto& a = *session.abort_reason();
        if (a.reason == bridge::AbortReason::CertRejected)
          emit(
            EventKind::CertCheck,
            11,
            zname,
            peer,
            "rejected " + std::string(ipcert::to_string(*a.cert_rejection)));
        return abort_with(a.to_string(), 11);
      }
      if (session.state() != bridge::State::AwaitFinished)
        return abort_with("IncompleteServerFlight", 10);

      emit(
        EventKind::CertCheck,
        11,
        zname,
        peer,
        "accepted subject_ip=" + session.peer_certificate()->subject_ip.to_string());

      // The sealed query rides behind the client Finished.
      auto sealed_query = make_query(false);
      std::vector<Bytes> frames;
      for (const auto& m : flight2)
        frames.push_back(bridge::encode_frame(m));
      emit(EventKind::HandshakeSend, 12, zname, peer, flight_text(frames), true);
      frames.push_back(bridge::encode_frame(session.seal(sealed_query)));
      emit(EventKind::SealedQuery, 13, zname, peer, "piggybacked on tls_flight_2");

      const auto reply2 = net_.exchange_stream(
        stream, frames, RttPurpose::TlsFlight2, RttPurpose::SealedQuery);
      if (reply2.empty())
        return abort_with("PeerAborted", 12);

      std::optional<bridge::EncryptedRecord> record;
      std::vector<Bytes> handshake_frames;
      for (const auto& raw : reply2)
      {
        bridge::Frame f;
        try
        {
          f = bridge::decode_frame(raw);
        }
        catch (const bridge::BridgeError&)
        {
          session.deliver_frame(raw, now_);
          break;
        }
        if (auto rec = std::get_if<bridge::EncryptedRecord>(&f))
        {
          record = *rec;
          break;
        }
        handshake_frames.push_back(raw);
        session.deliver_frame(raw, now_);
        if (session.state() == bridge::State::Aborted)
          break;
      }
      if (session.state() == bridge::State::Aborted)
        return abort_with(session.abort_reason()->to_string(), 12);
      if (session.state() != bridge::State::Established)
        return abort_with("IncompleteServerFlight", 12);
      emit(EventKind::HandshakeRecv, 12, zname, peer, flight_text(handshake_frames));

      if (!record)
        return abort_with("NoSealedResponse", 14);

      DnsMessage response;
      try
      {
        response = session.open(*record);
      }
      catch (const bridge::BridgeError&)
      {
        return abort_with(session.abort_reason()->to_string(), 14);
      }
      net_.close(stream);

      if (!matches(sealed_query, response))
        return abort_with("MismatchedSealedResponse", 14);
      emit(EventKind::SealedResponse, 14, zname, peer, summarize(response));
      return response;
    }

    ResolutionOutcome Walk::run()
    {
      emit(
        EventKind::StubRequest,
        1,
        "",
        "",
        std::string(wire::to_string(q_.type)) + " " + q_.name.to_string());

      auto st = ChainState::anchored(cfg_.trust_anchors);
      Ipv4Address server = cfg_.root_hint;
      bool chain_restored = false;
      size_t referrals = 0;

      for (size_t level = 0;; ++level)
      {
        const auto zname = st.current_zone.to_string();
        const auto peer = server.to_string();
        const bool flagged =
          cfg_.bridging_enabled && st.security == Security::GapOpen;

        auto query = make_query(flagged);
        std::string qdetail =
          std::string(wire::to_string(q_.type)) + " " + q_.name.to_string();
        if (flagged)
          qdetail += " +DS_ABSENT";
        emit(
          EventKind::Query, flagged ? 6 : (level == 0 ? 2 : 0), zname, peer, qdetail, true);

        const auto raw = net_.exchange_datagram(server, wire::encode(query));

        std::vector<DnsMessage> candidates;
        bool malformed = false;
        for (const auto& bytes : raw)
        {
          DnsMessage m;
          try
          {
            m = wire::decode(bytes);
          }
          catch (const wire::WireError& e)
          {
            malformed = true;
            emit(EventKind::Discarded, 0, zname, peer, std::string("malformed: ") + e.what());
            continue;
          }
          if (!matches(query, m))
          {
            emit(EventKind::Discarded, 0, zname, peer, "txid or question mismatch");
            continue;
          }
          candidates.push_back(std::move(m));
        }

        auto response_step = [&](const DnsMessage& m) {
          if (flagged || wire::bridge_port(m))
            return 7;
          if (level == 0)
            return 3;
          return shape_of(m, st.current_zone, q_) == Shape::Referral ? 5 : 0;
        };

        const DnsMessage* chosen = nullptr;
        ChainState next;
        std::optional<DnsMessage> sealed;

        if (st.security == Security::SecureSoFar)
        {
          std::string first_failure;
          for (const auto& c : candidates)
          {
            emit(EventKind::Response, response_step(c), zname, peer, summarize(c));
            auto ns = validate_level(st, c, q_, now_);
            if (ns.security != Security::BrokenBogus)
            {
              chosen = &c;
              next = std::move(ns);
              break;
            }
            if (first_failure.empty())
              first_failure = ns.bogus_reason;
          }
          const bool final_level =
            chosen && shape_of(*chosen, st.current_zone, q_) != Shape::Referral;
          if (!chosen)
          {
            auto reason = !first_failure.empty() ?
              first_failure :
              (malformed ? "MalformedResponse" : "NoResponse");
            emit(EventKind::Validation, 4, zname, peer, "failed: " + reason);
            return finish(Status::Bogus, reason);
          }
          emit(
            EventKind::Validation,
            4,
            zname,
            peer,
            final_level ? "answer signatures valid" : "DNSKEY matches DS, RRsets signed");
        }
        else
        {
          for (const auto& c : candidates)
            emit(EventKind::Response, response_step(c), zname, peer, summarize(c));
          if (cfg_.bridging_enabled)
            for (const auto& c : candidates)
              if (wire::bridge_port(c))
              {
                chosen = &c;
                break;
              }
          if (!chosen && !candidates.empty())
            chosen = &candidates.front();
          if (!chosen)
          {
            emit(EventKind::Abort, 0, zname, peer, "NoUsableResponse");
            return finish(Status::Aborted, "NoUsableResponse");
          }

          const auto port = wire::bridge_port(*chosen);
          if (flagged && !port && cfg_.expected_bridges.count(server))
          {
            downgrade_ = true;
            emit(EventKind::Downgrade, 7, zname, peer, "expected BRIDGE_AVAILABLE missing");
          }

          if (port && cfg_.bridging_enabled)
          {
            emit(EventKind::BridgeAvailable, 7, zname, peer, "port " + std::to_string(*port));
            auto result = run_bridge(server, *port, st.current_zone);
            if (auto reason = std::get_if<std::string>(&result))
              return finish(Status::Aborted, *reason);
            sealed = std::get<DnsMessage>(std::move(result));
            chosen = &*sealed;

            const bool signed_answer =
              !wire::select(sealed->additional, st.current_zone, RType::DNSKEY).empty();
            if (signed_answer)
            {
              if (auto failure = validate_self_signed(*sealed, st.current_zone, now_))
              {
                emit(EventKind::FinalValidation, 15, zname, peer, "failed: " + *failure);
                return finish(Status::Bogus, *failure);
              }
              const bool zero_gap =
                st.gap_zone == st.current_zone && st.gap_parent_validated;
              if (zero_gap)
              {
                // The authenticated channel stands in for the missing DS.
                auto restored = st;
                restored.security = Security::SecureSoFar;
                restored.expected_ds.clear();
                for (const auto& rr : sealed->additional)
                  if (auto key = dnssec::Dnskey::from_record(rr);
                      key && key->is_ksk() && key->owner == st.current_zone)
                    restored.expected_ds.push_back(dnssec::compute_ds(*key));
                st = std::move(restored);
                chain_restored = true;
              }
              emit(
                EventKind::FinalValidation,
                15,
                zname,
                peer,
                zero_gap ? "in-channel DNSKEY accepted; chain restored" :
                           "signatures valid, not anchored");
            }
            else
              emit(EventKind::FinalValidation, 15, zname, peer, "unsigned");
          }
          next = validate_level(st, *chosen, q_, now_);
          if (next.security == Security::BrokenBogus)
            return finish(Status::Bogus, next.bogus_reason);
        }

        switch (shape_of(*chosen, st.current_zone, q_))
        {
          case Shape::Answer:
          {
            auto answer = wire::select(chosen->answers, q_.name, q_.type);
            Status status;
            if (next.security == Security::SecureSoFar)
              status = chain_restored ? Status::BridgedSecure : Status::Secure;
            else
              status = sealed ? Status::BridgedEncrypted : Status::Insecure;
            return finish(status, "", std::move(answer));
          }
          case Shape::Referral:
          {
            auto ref = referral_of(*chosen);
            if (!ref.glue)
              return finish(Status::Bogus, "MissingGlue");
            if (++referrals > cfg_.max_referrals)
              throw ResolveError(
                ResolveErrc::MaxDepthExceeded,
                std::to_string(cfg_.max_referrals) + " referrals");
            if (
              st.security == Security::SecureSoFar &&
              next.security == Security::GapOpen)
              emit(
                EventKind::GapOpened,
                5,
                ref.child.to_string(),
                peer,
                "no DS for " + ref.child.to_string());
            st = std::move(next);
            server = *ref.glue;
            continue;
          }
          case Shape::LameReferral:
            return finish(Status::Bogus, "LameReferral");
          case Shape::NoAnswer:
            return finish(
              Status::Bogus, "NoAnswer(" + rcode_name(chosen->header.rcode) + ")");
        }
      }
    }
  }

  ChainState validate_level(
    const ChainState& state,
    const DnsMessage& response,
    const wire::Question& question,
    int64_t now)
  {
    if (state.security == Security::BrokenBogus)
      return state;

    ChainState next = state;
    if (state.security == Security::SecureSoFar)
    {
      auto chk = check_signed(response, state.current_zone, &state.expected_ds, now);
      if (chk.failure)
      {
        next.security = Security::BrokenBogus;
        next.bogus_reason = chk.failure->reason;
        return next;
      }
      next.validated_dnskey = chk.ksks.front();
    }

    if (shape_of(response, state.current_zone, question) != Shape::Referral)
      return next;

    auto ref = referral_of(response);
    next.current_zone = ref.child;
    next.validated_dnskey.reset();
    next.expected_ds.clear();
    if (state.security == Security::SecureSoFar)
    {
      if (!ref.ds.empty())
        next.expected_ds = std::move(ref.ds);
      else
      {
        next.security = Security::GapOpen;
        next.gap_zone = ref.child;
        next.gap_parent_validated = true;
      }
    }
    return next;
  }

  std::optional<std::string> validate_self_signed(
    const DnsMessage& response, const DomainName& zone, int64_t now)
  {
    auto chk = check_signed(response, zone, nullptr, now);
    if (chk.failure)
      return chk.failure->reason;
    return std::nullopt;
  }

  Cache::Cache(const Cache& other)
  {
    std::lock_guard lock(other.mu_);
    capacity_ = other.capacity_;
    entries_ = other.entries_;
  }

  Cache& Cache::operator=(const Cache& other)
  {
    if (this == &other)
      return *this;
    std::scoped_lock lock(mu_, other.mu_);
    capacity_ = other.capacity_;
    entries_ = other.entries_;
    return *this;
  }

  std::optional<CacheEntry> Cache::lookup(
    const DomainName& name, RType type, int64_t now, bool accept_unvalidated) const
  {
    std::lock_guard lock(mu_);
    for (const auto& e : entries_)
    {
      if (!(e.name == name) || e.type != type)
        continue;
      if (now > e.inserted + int64_t(e.ttl))
        return std::nullopt;
      const bool validated =
        e.status == Status::Secure || e.status == Status::BridgedSecure;
      if (!validated && !accept_unvalidated)
        return std::nullopt;
      return e;
    }
    return std::nullopt;
  }

  void Cache::insert(CacheEntry entry)
  {
    if (entry.status == Status::Bogus || entry.status == Status::Aborted)
      return;
    std::lock_guard lock(mu_);
    if (capacity_ == 0)
      return;
    std::erase_if(entries_, [&](const CacheEntry& e) {
      return e.name == entry.name && e.type == entry.type;
    });
    while (entries_.size() >= capacity_)
      entries_.pop_front();
    entries_.push_back(std::move(entry));
  }

  size_t Cache::size() const
  {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  Resolver::Resolver(ResolverConfig cfg) :
    cfg_(std::move(cfg)),
    cache_(cfg_.cache_capacity)
  {}

  ResolutionOutcome Resolver::resolve(
    const wire::Question& question, Transport& net, int64_t now)
  {
    Bytes seed = cfg_.rng_seed;
    put_u64(seed, resolutions_++);
    Walk walk(cfg_, net, question, now, seed);

    if (auto hit = cache_.lookup(question.name, question.type, now, cfg_.accept_unvalidated))
    {
      walk.emit(
        EventKind::StubRequest,
        1,
        "",
        "",
        std::string(wire::to_string(question.type)) + " " + question.name.to_string());
      walk.emit(
        EventKind::CacheHit,
        0,
        "",
        "",
        std::string(to_string(hit->status)) + " ttl_left=" +
          std::to_string(hit->inserted + int64_t(hit->ttl) - now));
      return walk.finish(hit->status, "", hit->rrset);
    }

    ResolutionOutcome out;
    try
    {
      out = walk.run();
    }
    catch (const TransportError& e)
    {
      throw ResolveError(ResolveErrc::NoRoute, e.what());
    }

    if (out.answer)
      cache_.insert(
        {question.name, question.type, *out.answer, out.status, now, min_ttl(*out.answer)});
    return out;
  }
}
