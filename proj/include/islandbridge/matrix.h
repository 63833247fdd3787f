// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include "islandbridge/scenario.h"

#include <span>
#include <string>
#include <vector>

// The deployment matrix: root (R), TLD (T) and authoritative (A) signing,
// whether the TLD publishes the authoritative DS (P), and whether the
// authoritative server runs a bridge (B). Each cell is a three-level
// scenario resolving www.example.com.

namespace islandbridge::matrix
{
  enum class CellAdversary
  {
    None,
    /// Strips BRIDGE_AVAILABLE on the authoritative link.
    BridgeStrip,
    /// Blind spoofing on the authoritative link with a known TXID.
    OffPathSpoof,
  };

  std::string_view to_string(CellAdversary a);
  std::optional<CellAdversary> adversary_from_string(std::string_view s);

  struct Cell
  {
    bool root_signed = true;
    bool tld_signed = true;
    bool auth_signed = true;
    bool tld_publishes_ds = true;
    bool auth_bridge = false;
    CellAdversary adversary = CellAdversary::None;

    /// "R1T1A1P0B1", with ":<adversary>" appended when there is one.
    std::string key() const;
    static std::optional<Cell> from_key(std::string_view key);

    friend bool operator==(const Cell&, const Cell&) = default;
  };

  /// All 32 cells in key order (R outermost, B innermost).
  std::vector<Cell> all_cells(CellAdversary adversary = CellAdversary::None);

  resolver::Status expected_outcome(const Cell& c);

  constexpr std::string_view cell_question = "www.example.com";
  constexpr std::string_view cell_answer = "192.0.2.1";
  constexpr std::string_view cell_forged_answer = "203.0.113.66";

  scenario::Scenario cell_scenario(const Cell& c, uint64_t seed);

  struct CellResult
  {
    std::string key;
    resolver::Status status = resolver::Status::Bogus;
    std::string label;
    std::string answer;
    size_t rtt = 0;
    long extra_rtt = 0;
    /// Set when the run threw instead of producing an outcome.
    std::string error;

    friend bool operator==(const CellResult&, const CellResult&) = default;
  };

  CellResult run_cell(const Cell& c, uint64_t seed);

  /// Reference implementation.
  std::vector<CellResult> run_cells_serial(std::span<const Cell> cells, uint64_t seed);
  /// OpenMP; results are in input order and identical to the serial run.
  std::vector<CellResult> run_cells_parallel(
    std::span<const Cell> cells, uint64_t seed);

  /// Expected outcomes by cell key, as stored in scenarios/matrix.json.
  struct MatrixFile
  {
    uint64_t seed = 1;
    CellAdversary adversary = CellAdversary::None;
    std::vector<std::pair<std::string, resolver::Status>> expected;
  };

  MatrixFile load_matrix(const std::string& path);
  std::optional<resolver::Status> status_from_string(std::string_view s);
}
