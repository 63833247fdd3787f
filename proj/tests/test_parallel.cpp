// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/matrix.h"
#include "islandbridge/sweep.h"

#include <doctest.h>

using namespace islandbridge;
using resolver::Status;

namespace
{
  const std::string corpus = ISLANDBRIDGE_SCENARIO_DIR;
}

TEST_CASE("cell keys round trip and cover every deployment")
{
  for (auto adv : {matrix::CellAdversary::None, matrix::CellAdversary::BridgeStrip, matrix::CellAdversary::OffPathSpoof})
  {
    const auto cells = matrix::all_cells(adv);
    REQUIRE(cells.size() == 32);
    for (size_t i = 0; i < cells.size(); ++i)
    {
      CHECK(matrix::Cell::from_key(cells[i].key()) == cells[i]);
      if (i > 0)
        CHECK(cells[i - 1].key() < cells[i].key());
    }
    CHECK(matrix::adversary_from_string(matrix::to_string(adv)) == adv);
  }
  CHECK(matrix::all_cells().front().key() == "R0T0A0P0B0");
  CHECK(matrix::all_cells().back().key() == "R1T1A1P1B1");
  CHECK_FALSE(matrix::Cell::from_key("R1T1A1P1"));
  CHECK_FALSE(matrix::Cell::from_key("R1T1A1P1B2"));
  CHECK_FALSE(matrix::Cell::from_key("R1T1A1P1B1:laser"));
}

TEST_CASE("expected outcome rule")
{
  for (const auto& c : matrix::all_cells())
  {
    const bool chain = c.root_signed && c.tld_signed && c.auth_signed;
    Status want = Status::Insecure;
    if (chain && c.tld_publishes_ds)
      want = Status::Secure;
    else if (c.auth_bridge)
      want = chain ? Status::BridgedSecure : Status::BridgedEncrypted;
    CHECK(matrix::expected_outcome(c) == want);
  }
}

TEST_CASE("serial and parallel matrix runs agree")
{
  for (auto adv : {matrix::CellAdversary::None, matrix::CellAdversary::BridgeStrip, matrix::CellAdversary::OffPathSpoof})
  {
    const auto cells = matrix::all_cells(adv);
    const auto serial = matrix::run_cells_serial(cells, 1);
    const auto parallel = matrix::run_cells_parallel(cells, 1);
    CHECK(serial == parallel);
    for (size_t i = 0; i < cells.size(); ++i)
    {
      CAPTURE(serial[i].key);
      CHECK(serial[i].error.empty());
      CHECK(serial[i].status == matrix::expected_outcome(cells[i]));
    }
  }
}

TEST_CASE("matrix file loads")
{
  const auto m = matrix::load_matrix(corpus + "/matrix.json");
  CHECK(m.expected.size() == 32);
  CHECK(m.adversary == matrix::CellAdversary::None);
  for (const auto& [key, status] : m.expected)
    CHECK(matrix::expected_outcome(*matrix::Cell::from_key(key)) == status);
  CHECK(matrix::status_from_string("BridgedSecure") == Status::BridgedSecure);
  CHECK_FALSE(matrix::status_from_string("Maybe"));
}

TEST_CASE("serial and parallel tamper sweeps agree")
{
  const auto s = scenario::load_file(corpus + "/zero_gap_bridge.json");
  const auto built = scenario::build(s);
  auto cases = sweep::tamper_cases(built);
  REQUIRE(cases.size() > 100);
  // A spread-out subset keeps this quick; the acceptance run covers all.
  std::vector<sweep::TamperCase> subset;
  for (size_t i = 0; i < cases.size(); i += 7)
    subset.push_back(cases[i]);
  const auto serial = sweep::run_tamper_serial(built, subset);
  const auto parallel = sweep::run_tamper_parallel(built, subset);
  CHECK(serial == parallel);
  for (const auto& r : serial)
    CHECK(r.error.empty());
}
