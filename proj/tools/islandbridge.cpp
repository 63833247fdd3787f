// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

// Command-line driver: run a scenario, print its transcript, or run the
// deployment matrix.
//
// Exit codes: 0 Secure/BridgedSecure, 1 BridgedEncrypted/Insecure,
// 2 Bogus/Aborted (or a matrix mismatch), 3 harness error.

#include "islandbridge/matrix.h"
#include "islandbridge/scenario.h"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace
{
  using namespace islandbridge;

  constexpr int exit_harness = 3;

  struct HarnessError : std::runtime_error
  {
    using std::runtime_error::runtime_error;
  };

  // Flag beats environment beats file.
  std::optional<uint64_t> seed_override(const std::optional<uint64_t>& flag)
  {
    if (flag)
      return flag;
    const char* env = std::getenv("ISLANDBRIDGE_SEED");
    if (!env || !*env)
      return std::nullopt;
    try
    {
      size_t used = 0;
      const auto v = std::stoull(env, &used, 0);
      if (used != std::string_view(env).size() || env[0] == '-')
        throw std::invalid_argument("trailing characters");
      return v;
    }
    catch (const std::exception&)
    {
      throw HarnessError(
        "ISLANDBRIDGE_SEED: expected a non-negative integer, got \"" +
        std::string(env) + "\"");
    }
  }

  void write_json(const std::string& path, const nlohmann::ordered_json& j)
  {
    if (path == "-")
    {
      std::cout << j.dump(2) << "\n";
      return;
    }
    std::ofstream out(path);
    if (!out)
      throw HarnessError("cannot write " + path);
    out << j.dump(2) << "\n";
  }

  scenario::Scenario load(const std::string& path, const std::optional<uint64_t>& seed)
  {
    auto s = scenario::load_file(path);
    if (auto o = seed_override(seed))
      s.seed = *o;
    return s;
  }

  int worst_exit(const scenario::Report& r)
  {
    int code = 0;
    for (const auto& q : r.queries)
      code = std::max(code, scenario::exit_code(q.result.outcome.status));
    return code;
  }

  int cmd_run(
    const std::string& file,
    const std::optional<uint64_t>& seed,
    const std::string& transcript,
    bool quiet)
  {
    const auto report = scenario::run(load(file, seed));
    if (!quiet)
      for (const auto& q : report.queries)
        std::cout << scenario::outcome_line(q) << "\n";
    if (!transcript.empty())
      write_json(transcript, scenario::to_json(report));
    return worst_exit(report);
  }

  int cmd_trace(
    const std::string& file,
    const std::optional<uint64_t>& seed,
    const std::string& transcript,
    bool quiet)
  {
    const auto report = scenario::run(load(file, seed));
    if (!quiet)
    {
      for (size_t i = 0; i < report.queries.size(); ++i)
      {
        const auto& q = report.queries[i];
        std::cout << "# query " << i << "\n";
        for (const auto& e : q.result.outcome.transcript)
          std::cout << format_event(e) << "\n";
        std::cout << "# ledger";
        for (const auto& l : q.result.ledger)
        {
          std::cout << " " << resolver::to_string(l.purpose);
          if (l.piggyback)
            std::cout << "+" << resolver::to_string(*l.piggyback);
        }
        std::cout << "\n" << scenario::outcome_line(q) << "\n";
      }
    }
    if (!transcript.empty())
      write_json(transcript, scenario::to_json(report));
    return worst_exit(report);
  }

  int cmd_matrix(
    const std::string& file,
    const std::optional<uint64_t>& seed,
    const std::string& transcript,
    bool quiet,
    bool serial)
  {
    matrix::MatrixFile m;
    if (!file.empty())
      m = matrix::load_matrix(file);
    else
      for (const auto& c : matrix::all_cells())
        m.expected.emplace_back(c.key(), matrix::expected_outcome(c));
    if (auto o = seed_override(seed))
      m.seed = *o;

    std::vector<matrix::Cell> cells;
    for (const auto& [key, _] : m.expected)
    {
      auto c = *matrix::Cell::from_key(key);
      c.adversary = m.adversary;
      cells.push_back(c);
    }
    const auto results = serial ? matrix::run_cells_serial(cells, m.seed) :
                                  matrix::run_cells_parallel(cells, m.seed);

    size_t mismatches = 0;
    nlohmann::ordered_json j;
    j["seed"] = m.seed;
    j["adversary"] = std::string(matrix::to_string(m.adversary));
    auto& arr = j["cells"] = nlohmann::ordered_json::array();
    for (size_t i = 0; i < results.size(); ++i)
    {
      const auto& r = results[i];
      if (!r.error.empty())
        throw HarnessError(r.key + ": " + r.error);
      const auto expected = m.expected[i].second;
      const bool ok = r.status == expected;
      mismatches += ok ? 0 : 1;
      if (!quiet)
        std::cout << r.key << "  expected=" << resolver::to_string(expected)
                  << "  got=" << r.label << "  answer=" << (r.answer.empty() ? "-" : r.answer)
                  << "  rtt=" << r.rtt << "  extra_rtt=" << r.extra_rtt
                  << (ok ? "  ok" : "  MISMATCH") << "\n";
      arr.push_back(
        {{"cell", r.key},
         {"expected", std::string(resolver::to_string(expected))},
         {"got", r.label},
         {"answer", r.answer},
         {"rtt", r.rtt},
         {"extra_rtt", r.extra_rtt},
         {"match", ok}});
    }
    j["mismatches"] = mismatches;
    if (!quiet)
      std::cout << results.size() - mismatches << "/" << results.size()
                << " cells match\n";
    if (!transcript.empty())
      write_json(transcript, j);
    return mismatches == 0 ? 0 : 2;
  }
}

int main(int argc, char** argv)
{
  CLI::App app{"IslandBridge: DNSSEC island bridging simulator"};
  app.require_subcommand(1);

  std::optional<uint64_t> seed;
  std::string transcript;
  bool quiet = false;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Override the scenario seed");
    sub->add_option(
      "--transcript", transcript, "Write the full JSON report here ('-' for stdout)");
    sub->add_flag("--quiet,-q", quiet, "Suppress human-readable output");
  };

  std::string file;
  auto run = app.add_subcommand("run", "Resolve a scenario and print the outcome");
  run->add_option("scenario", file, "Scenario JSON file")->required();
  common(run);

  auto trace = app.add_subcommand("trace", "Resolve a scenario and print every step");
  trace->add_option("scenario", file, "Scenario JSON file")->required();
  common(trace);

  bool serial = false;
  auto mat = app.add_subcommand("matrix", "Run the 32-cell deployment matrix");
  mat->add_option("expected", file, "Matrix JSON with expected outcomes");
  mat->add_flag("--serial", serial, "Use the serial reference runner");
  common(mat);

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_harness;
  }

  try
  {
    if (*run)
      return cmd_run(file, seed, transcript, quiet);
    if (*trace)
      return cmd_trace(file, seed, transcript, quiet);
    return cmd_matrix(file, seed, transcript, quiet, serial);
  }
  // ScenarioError messages already lead with the JSON path.
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << "\n";
  }
  return exit_harness;
}
