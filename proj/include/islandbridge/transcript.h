// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace islandbridge
{
  enum class EventKind
  {
    StubRequest,
    CacheHit,
    Query,
    Response,
    Discarded,
    Validation,
    GapOpened,
    BridgeAvailable,
    Downgrade,
    TcpConnect,
    HandshakeSend,
    HandshakeRecv,
    CertCheck,
    SealedQuery,
    SealedResponse,
    FinalValidation,
    Abort,
    Outcome,
  };

  std::string_view to_string(EventKind kind);

  /// One resolver-side event. `step` numbers the protocol step, or is 0
  /// when the event has none:
  ///    1 stub request            9 handshake flight 1 sent
  ///    2 query to the root      10 server flight received
  ///    3 root response          11 certificate checked
  ///    4 chain validation       12 handshake flight 2 / server Finished
  ///    5 referral, DS missing   13 sealed query
  ///    6 query with DS_ABSENT   14 sealed response
  ///    7 BRIDGE_AVAILABLE seen  15 final validation
  ///    8 TCP connect
  /// `round_trip` marks events that cost one network round trip.
  struct TranscriptEvent
  {
    int64_t t_ms = 0;
    EventKind kind = EventKind::Query;
    int step = 0;
    std::string zone;
    std::string peer;
    std::string detail;
    bool round_trip = false;

    friend bool operator==(const TranscriptEvent&, const TranscriptEvent&) =
      default;
  };

  using Transcript = std::vector<TranscriptEvent>;

  size_t count_round_trips(const Transcript& t);

  nlohmann::ordered_json to_json(const TranscriptEvent& e);
  nlohmann::ordered_json to_json(const Transcript& t);

  /// "[t=40ms] step 6  query  example.com @192.0.2.53  A www.example.com +DS_ABSENT"
  std::string format_event(const TranscriptEvent& e);
}
