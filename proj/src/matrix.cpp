// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/matrix.h"

#include "parallel.h"

#include <fstream>

namespace islandbridge::matrix
{
  using resolver::Status;

  std::string_view to_string(CellAdversary a)
  {
    switch (a)
    {
      case CellAdversary::None:
        return "none";
      case CellAdversary::BridgeStrip:
        return "bridge_strip";
      case CellAdversary::OffPathSpoof:
        return "off_path_spoof";
    }
    return "?";
  }

  std::optional<CellAdversary> adversary_from_string(std::string_view s)
  {
    for (auto a :
         {CellAdversary::None, CellAdversary::BridgeStrip, CellAdversary::OffPathSpoof})
      if (to_string(a) == s)
        return a;
    return std::nullopt;
  }

  std::string Cell::key() const
  {
    std::string k;
    k += root_signed ? "R1" : "R0";
    k += tld_signed ? "T1" : "T0";
    k += auth_signed ? "A1" : "A0";
    k += tld_publishes_ds ? "P1" : "P0";
    k += auth_bridge ? "B1" : "B0";
    if (adversary != CellAdversary::None)
      k += ":" + std::string(to_string(adversary));
    return k;
  }

  std::optional<Cell> Cell::from_key(std::string_view key)
  {
    Cell c;
    auto colon = key.find(':');
    if (colon != std::string_view::npos)
    {
      auto a = adversary_from_string(key.substr(colon + 1));
      if (!a)
        return std::nullopt;
      c.adversary = *a;
      key = key.substr(0, colon);
    }
    constexpr std::string_view letters = "RTAPB";
    if (key.size() != 10)
      return std::nullopt;
    bool* fields[] = {
      &c.root_signed, &c.tld_signed, &c.auth_signed, &c.tld_publishes_ds, &c.auth_bridge};
    for (size_t i = 0; i < 5; ++i)
    {
      if (key[2 * i] != letters[i] || (key[2 * i + 1] != '0' && key[2 * i + 1] != '1'))
        return std::nullopt;
      *fields[i] = key[2 * i + 1] == '1';
    }
    return c;
  }

  std::vector<Cell> all_cells(CellAdversary adversary)
  {
    std::vector<Cell> out;
    for (unsigned bits = 0; bits < 32; ++bits)
    {
      Cell c;
      c.root_signed = bits & 16;
      c.tld_signed = bits & 8;
      c.auth_signed = bits & 4;
      c.tld_publishes_ds = bits & 2;
      c.auth_bridge = bits & 1;
      c.adversary = adversary;
      out.push_back(c);
    }
    return out;
  }

  Status expected_outcome(const Cell& c)
  {
    const bool bridge = c.auth_bridge && c.adversary != CellAdversary::BridgeStrip;
    const bool signed_chain = c.root_signed && c.tld_signed && c.auth_signed;
    if (signed_chain && c.tld_publishes_ds)
      return Status::Secure;
    if (!bridge)
      return Status::Insecure;
    // Only a gap of exactly one link (the missing DS) can be closed in-band.
    if (signed_chain)
      return Status::BridgedSecure;
    return Status::BridgedEncrypted;
  }

  scenario::Scenario cell_scenario(const Cell& c, uint64_t seed)
  {
    using wire::DomainName;
    const auto auth_server = *Ipv4Address::parse("192.0.2.53");

    scenario::Scenario s;
    s.name = "matrix " + c.key();
    s.seed = seed;

    scenario::ZoneSpec root;
    root.name = DomainName::root();
    root.server = *Ipv4Address::parse("198.41.0.4");
    root.is_signed = c.root_signed;

    scenario::ZoneSpec tld;
    tld.name = DomainName::parse("com");
    tld.server = *Ipv4Address::parse("192.5.6.30");
    tld.is_signed = c.tld_signed;

    scenario::ZoneSpec auth;
    auth.name = DomainName::parse("example.com");
    auth.server = auth_server;
    auth.is_signed = c.auth_signed;
    auth.parent_publishes_ds = c.tld_publishes_ds;
    if (c.auth_bridge)
      auth.bridge = scenario::BridgeSpec{};
    auth.records.push_back(
      {DomainName::parse(cell_question), *Ipv4Address::parse(cell_answer)});

    s.zones = {root, tld, auth};
    s.queries.push_back({{DomainName::parse(cell_question), wire::RType::A}, 0});

    switch (c.adversary)
    {
      case CellAdversary::None:
        break;
      case CellAdversary::BridgeStrip:
        s.adversary = simnet::adversary::BridgeStrip{{auth_server}};
        break;
      case CellAdversary::OffPathSpoof:
        s.adversary = simnet::adversary::OffPathSpoof{
          {auth_server}, 1.0, *Ipv4Address::parse(cell_forged_answer), 1};
        break;
    }
    return s;
  }

  CellResult run_cell(const Cell& c, uint64_t seed)
  {
    CellResult r;
    r.key = c.key();
    try
    {
      const auto report = scenario::run(cell_scenario(c, seed));
      const auto& q = report.queries.front();
      const auto& o = q.result.outcome;
      r.status = o.status;
      r.label = o.label();
      r.rtt = o.rtt_count;
      r.extra_rtt = q.extra_rtt();
      if (o.answer)
        for (const auto& rr : *o.answer)
          if (auto a = std::get_if<wire::ARdata>(&rr.rdata))
            r.answer += (r.answer.empty() ? "" : ",") + a->address.to_string();
    }
    catch (const std::exception& e)
    {
      r.error = e.what();
    }
    return r;
  }

  std::vector<CellResult> run_cells_serial(std::span<const Cell> cells, uint64_t seed)
  {
    std::vector<CellResult> out;
    out.reserve(cells.size());
    for (const auto& c : cells)
      out.push_back(run_cell(c, seed));
    return out;
  }

  std::vector<CellResult> run_cells_parallel(std::span<const Cell> cells, uint64_t seed)
  {
    return detail::parallel_map<CellResult>(
      cells.size(), [&](size_t i) { return run_cell(cells[i], seed); });
  }

  std::optional<Status> status_from_string(std::string_view s)
  {
    for (auto st :
         {Status::Secure,
          Status::BridgedSecure,
          Status::BridgedEncrypted,
          Status::Insecure,
          Status::Bogus,
          Status::Aborted})
      if (resolver::to_string(st) == s)
        return st;
    return std::nullopt;
  }

  MatrixFile load_matrix(const std::string& path)
  {
    using scenario::ScenarioError;
    std::ifstream in(path);
    if (!in)
      throw ScenarioError("", "cannot open " + path);
    nlohmann::json doc;
    try
    {
      doc = nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::parse_error& e)
    {
      throw ScenarioError("", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object())
      throw ScenarioError("", "expected an object");
    for (const auto& [k, _] : doc.items())
      if (k != "scenario_version" && k != "seed" && k != "adversary" && k != "expected")
        throw ScenarioError("/" + k, "unknown field");

    auto version = doc.find("scenario_version");
    if (version == doc.end())
      throw ScenarioError("/scenario_version", "required field is missing");
    if (!version->is_number_unsigned() || version->get<uint64_t>() != scenario::schema_version)
      throw ScenarioError("/scenario_version", "unsupported version (expected 1)");

    MatrixFile m;
    if (auto it = doc.find("seed"); it != doc.end())
    {
      if (!it->is_number_unsigned())
        throw ScenarioError("/seed", "expected a non-negative integer");
      m.seed = it->get<uint64_t>();
    }
    if (auto it = doc.find("adversary"); it != doc.end())
    {
      auto a = it->is_string() ? adversary_from_string(it->get<std::string>()) :
                                 std::nullopt;
      if (!a)
        throw ScenarioError(
          "/adversary", "expected none, bridge_strip or off_path_spoof");
      m.adversary = *a;
    }
    auto expected = doc.find("expected");
    if (expected == doc.end() || !expected->is_object())
      throw ScenarioError("/expected", "expected an object of cell: status");
    for (const auto& [k, v] : expected->items())
    {
      const auto path = "/expected/" + k;
      auto cell = Cell::from_key(k);
      if (!cell || cell->adversary != CellAdversary::None)
        throw ScenarioError(path, "cell keys look like R1T1A1P0B1");
      auto st = v.is_string() ? status_from_string(v.get<std::string>()) : std::nullopt;
      if (!st)
        throw ScenarioError(path, "unknown status");
      m.expected.emplace_back(k, *st);
    }
    return m;
  }
}
