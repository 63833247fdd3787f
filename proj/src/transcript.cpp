// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/transcript.h"

#include <algorithm>
#include <sstream>

namespace islandbridge
{
  std::string_view to_string(EventKind kind)
  {
    switch (kind)
    {
      case EventKind::StubRequest:
        return "stub_request";
      case EventKind::CacheHit:
        return "cache_hit";
      case EventKind::Query:
        return "query";
      case EventKind::Response:
        return "response";
      case EventKind::Discarded:
        return "discarded";
      case EventKind::Validation:
        return "validation";
      case EventKind::GapOpened:
        return "gap_opened";
      case EventKind::BridgeAvailable:
        return "bridge_available";
      case EventKind::Downgrade:
        return "downgrade";
      case EventKind::TcpConnect:
        return "tcp_connect";
      case EventKind::HandshakeSend:
        return "handshake_send";
      case EventKind::HandshakeRecv:
        return "handshake_recv";
      case EventKind::CertCheck:
        return "cert_check";
      case EventKind::SealedQuery:
        return "sealed_query";
      case EventKind::SealedResponse:
        return "sealed_response";
      case EventKind::FinalValidation:
        return "final_validation";
      case EventKind::Abort:
        return "abort";
      case EventKind::Outcome:
        return "outcome";
    }
    return "?";
  }

  size_t count_round_trips(const Transcript& t)
  {
    return static_cast<size_t>(std::count_if(
      t.begin(), t.end(), [](const auto& e) { return e.round_trip; }));
  }

  nlohmann::ordered_json to_json(const TranscriptEvent& e)
  {
    nlohmann::ordered_json j;
    j["t_ms"] = e.t_ms;
    j["kind"] = std::string(to_string(e.kind));
    if (e.step)
      j["step"] = e.step;
    if (!e.zone.empty())
      j["zone"] = e.zone;
    if (!e.peer.empty())
      j["peer"] = e.peer;
    if (!e.detail.empty())
      j["detail"] = e.detail;
    if (e.round_trip)
      j["round_trip"] = true;
    return j;
  }

  nlohmann::ordered_json to_json(const Transcript& t)
  {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : t)
      arr.push_back(to_json(e));
    return arr;
  }

  std::string format_event(const TranscriptEvent& e)
  {
    std::ostringstream os;
    os << "[t=" << e.t_ms << "ms] ";
    if (e.step)
      os << "step " << e.step << (e.step < 10 ? "  " : " ");
    else
      os << "        ";
    os << to_string(e.kind);
    if (!e.zone.empty())
      os << "  " << e.zone;
    if (!e.peer.empty())
      os << " @" << e.peer;
    if (!e.detail.empty())
      os << "  " << e.detail;
    return os.str();
  }
}
