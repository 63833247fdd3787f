// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/sweep.h"

#include "parallel.h"

#include <map>

namespace islandbridge::sweep
{
  using simnet::adversary::OnPathTamper;
  using simnet::adversary::Target;

  namespace
  {
    std::string answer_text(const resolver::ResolutionOutcome& o)
    {
      std::string out;
      if (o.answer)
        for (const auto& rr : *o.answer)
          out += to_hex(wire::encode_rdata(rr.rdata)) + ";";
      return out;
    }

    std::string_view target_name(Target t)
    {
      switch (t)
      {
        case Target::UdpQuery:
          return "udp_query";
        case Target::UdpResponse:
          return "udp_response";
        case Target::StreamToServer:
          return "stream_to_server";
        case Target::StreamToClient:
          return "stream_to_client";
      }
      return "?";
    }

    // Signed records of a response the resolver validates. Responses that
    // offer a bridge are skipped: their plaintext records are superseded by
    // the sealed answer.
    std::vector<wire::RecordSpan> signed_spans(ByteView payload)
    {
      wire::DnsMessage msg;
      try
      {
        msg = wire::decode(payload);
      }
      catch (const wire::WireError&)
      {
        return {};
      }
      if (msg.has_option(wire::opt_bridge_available))
        return {};
      std::set<std::pair<std::string, wire::RType>> covered;
      for (const auto* section : {&msg.answers, &msg.authority, &msg.additional})
        for (const auto& rr : *section)
          if (auto sig = std::get_if<wire::RrsigRdata>(&rr.rdata))
            covered.emplace(rr.owner.canonical().to_string(), sig->type_covered);
      if (covered.empty())
        return {};

      std::vector<wire::RecordSpan> out;
      for (const auto& span : wire::record_layout(payload))
      {
        if (span.type == wire::RType::OPT)
          continue;
        const auto& section = span.section == wire::Section::Answer ?
          msg.answers :
          span.section == wire::Section::Authority ? msg.authority :
                                                     msg.additional;
        const auto& rr = section.at(span.index);
        if (span.type == wire::RType::RRSIG ||
            covered.count({rr.owner.canonical().to_string(), span.type}))
          out.push_back(span);
      }
      return out;
    }
  }

  std::vector<TamperCase> tamper_cases(const scenario::Built& built)
  {
    if (built.questions.empty())
      throw std::invalid_argument("tamper sweep needs a question");
    const auto honest = simnet::run_session(
      built.topology,
      built.resolver,
      std::span(built.questions.data(), 1),
      built.adversary);

    const auto honest_answer = answer_text(honest.queries.front().outcome);
    std::vector<TamperCase> out;
    std::map<std::pair<Ipv4Address, Target>, size_t> seen;
    for (const auto& c : honest.captures)
    {
      if (c.forged)
        continue;
      const bool to_server = c.src == built.topology.resolver_address;
      const auto server = to_server ? c.dst : c.src;
      const auto target = c.stream ?
        (to_server ? Target::StreamToServer : Target::StreamToClient) :
        (to_server ? Target::UdpQuery : Target::UdpResponse);
      const size_t occurrence = seen[{server, target}]++;
      const auto where = std::string(target_name(target)) + "[" +
        std::to_string(occurrence) + "]@" + server.to_string();

      auto flip = [&](size_t offset, std::string what) {
        TamperCase tc;
        tc.description = where + " " + what + " +" + std::to_string(offset);
        tc.honest_answer = honest_answer;
        tc.adversary = OnPathTamper{{server}, target, occurrence, offset, 0x01, false};
        out.push_back(std::move(tc));
      };

      if (target == Target::UdpResponse)
      {
        for (const auto& span : signed_spans(c.payload))
        {
          const auto what = std::string(wire::to_string(span.section)) + "/" +
            std::to_string(span.index) + " " + std::string(wire::to_string(span.type));
          for (size_t off = span.offset; off < span.offset + span.length; ++off)
          {
            // TTLs are outside every signature by design.
            if (off >= span.ttl_offset && off < span.ttl_offset + 4)
              continue;
            flip(off, what);
          }
        }
      }
      else if (c.stream)
      {
        const auto what = c.payload.empty() ?
          std::string("frame") :
          std::string(bridge::to_string(static_cast<bridge::MessageType>(c.payload[0])));
        for (size_t off = 0; off < c.payload.size(); ++off)
          flip(off, what);
      }
    }

    // Server-side signature corruption, which also reaches records that only
    // travel inside the sealed channel.
    for (const auto& [addr, zone] : built.topology.servers)
    {
      if (!zone->is_signed())
        continue;
      auto corrupt = [&](const wire::DomainName& owner, wire::RType type) {
        if (!zone->rrsig(owner, type))
          return;
        for (size_t byte : {size_t{0}, size_t{17}, size_t{31}, size_t{32}, size_t{63}})
        {
          TamperCase tc;
          tc.description = "rrsig " + owner.to_string() + " " +
            std::string(wire::to_string(type)) + " @" + addr.to_string() + " byte " +
            std::to_string(byte);
          tc.honest_answer = honest_answer;
          tc.hook = {{addr, nameserver::mutation::CorruptRrsig{owner, type, byte, 0x01}}};
          out.push_back(std::move(tc));
        }
      };
      corrupt(zone->zone(), wire::RType::DNSKEY);
      corrupt(built.questions.front().question.name, built.questions.front().question.type);
      for (const auto& d : zone->delegations())
      {
        corrupt(d.child, wire::RType::NS);
        corrupt(d.child, wire::RType::DS);
        corrupt(d.ns_host, wire::RType::A);
      }
    }
    return out;
  }

  TamperRun run_tamper_case(const scenario::Built& built, const TamperCase& c)
  {
    TamperRun r;
    r.description = c.description;
    try
    {
      auto topology = built.topology;
      if (c.hook)
      {
        auto& slot = topology.servers.at(c.hook->first);
        slot = std::make_shared<nameserver::ZoneConfig>(
          nameserver::tamper_hook(*slot, c.hook->second));
      }
      const auto& q = built.questions.front();
      auto [outcome, ledger] =
        simnet::run_scenario(topology, built.resolver, q.question, c.adversary, q.at);
      r.status = outcome.status;
      r.label = outcome.label();
      r.answer_changed = answer_text(outcome) != c.honest_answer;
    }
    catch (const std::exception& e)
    {
      r.error = e.what();
    }
    return r;
  }

  std::vector<TamperRun> run_tamper_serial(
    const scenario::Built& built, std::span<const TamperCase> cases)
  {
    std::vector<TamperRun> out;
    out.reserve(cases.size());
    for (const auto& c : cases)
      out.push_back(run_tamper_case(built, c));
    return out;
  }

  std::vector<TamperRun> run_tamper_parallel(
    const scenario::Built& built, std::span<const TamperCase> cases)
  {
    return detail::parallel_map<TamperRun>(
      cases.size(), [&](size_t i) { return run_tamper_case(built, cases[i]); });
  }
}
