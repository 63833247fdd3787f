// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include "islandbridge/scenario.h"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

// Exhaustive single-fault sweeps. An honest run of a scenario is captured,
// then every byte of every signed record (except TTLs) on every datagram the
// resolver validates, every byte of every bridge frame, and a set of
// server-side signature corruptions are each applied in a fresh run.

namespace islandbridge::sweep
{
  struct TamperCase
  {
    std::string description;
    simnet::Adversary adversary;
    /// Replaces the zone served at this address with a tampered copy.
    std::optional<std::pair<Ipv4Address, nameserver::Mutation>> hook;
    /// Answer rdata of the honest run, for spotting silent substitutions.
    std::string honest_answer;
  };

  /// Derives the cases from an honest run of `built` (first question only).
  std::vector<TamperCase> tamper_cases(const scenario::Built& built);

  struct TamperRun
  {
    std::string description;
    resolver::Status status = resolver::Status::Bogus;
    std::string label;
    /// The answer differs from the honest one.
    bool answer_changed = false;
    std::string error;

    friend bool operator==(const TamperRun&, const TamperRun&) = default;
  };

  TamperRun run_tamper_case(const scenario::Built& built, const TamperCase& c);

  /// Reference implementation.
  std::vector<TamperRun> run_tamper_serial(
    const scenario::Built& built, std::span<const TamperCase> cases);
  /// OpenMP; results are in input order and identical to the serial run.
  std::vector<TamperRun> run_tamper_parallel(
    const scenario::Built& built, std::span<const TamperCase> cases);
}
