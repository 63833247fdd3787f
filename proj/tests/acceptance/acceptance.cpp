// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

// Acceptance gate. Prints one PASS/FAIL line per criterion with its pinned
// runtime limit and exits non-zero when any criterion fails.
//
// Usage: islandbridge_acceptance <scenario dir>

#include "islandbridge/bridge.h"
#include "islandbridge/matrix.h"
#include "islandbridge/sweep.h"

#include "../generators.h"
#include "../oracle.h"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

namespace
{
  using namespace islandbridge;
  using resolver::Status;
  using nlohmann::json;

  struct Verdict
  {
    bool pass = false;
    std::string detail;
  };

  struct Criterion
  {
    int id;
    std::string name;
    double limit_s;
    std::function<Verdict()> check;
  };

  std::string scenario_dir;

  std::string answer_of(const resolver::ResolutionOutcome& o)
  {
    if (!o.answer || o.answer->empty())
      return "";
    return std::get<wire::ARdata>(o.answer->front().rdata).address.to_string();
  }

  scenario::Scenario corpus(const std::string& name)
  {
    return scenario::load_file(scenario_dir + "/" + name + ".json");
  }

  // 1. Extra RTT of every zero-gap bridged topology is exactly 3.
  Verdict rtt_overhead()
  {
    size_t checked = 0;
    std::ostringstream bad;
    for (const auto& c : matrix::all_cells())
    {
      if (!(c.root_signed && c.tld_signed && c.auth_signed && !c.tld_publishes_ds && c.auth_bridge))
        continue;
      for (uint64_t seed = 1; seed <= 10; ++seed)
      {
        const auto r = matrix::run_cell(c, seed);
        ++checked;
        if (r.status != Status::BridgedSecure || r.extra_rtt != 3)
          bad << " " << r.key << "/seed" << seed << ":" << r.label << ",extra=" << r.extra_rtt;
      }
    }
    for (const char* name : {"zero_gap_bridge", "deep_delegation", "spoof_bridged", "cached_repeat"})
    {
      const auto rep = scenario::run(corpus(name));
      const auto& q = rep.queries.front();
      ++checked;
      if (q.result.outcome.status != Status::BridgedSecure || q.extra_rtt() != 3)
        bad << " " << name << ":" << q.result.outcome.label() << ",extra=" << q.extra_rtt();
    }
    const auto b = bad.str();
    return {b.empty(), std::to_string(checked) + " zero-gap runs, extra_rtt=3 in all" + (b.empty() ? "" : "; mismatches:" + b)};
  }

  // 2. The 32-cell matrix matches the expected-outcome table.
  Verdict outcome_matrix()
  {
    const auto m = matrix::load_matrix(scenario_dir + "/matrix.json");
    std::vector<matrix::Cell> cells;
    for (const auto& [key, _] : m.expected)
    {
      auto c = *matrix::Cell::from_key(key);
      c.adversary = m.adversary;
      cells.push_back(c);
    }
    const auto results = matrix::run_cells_parallel(cells, m.seed);
    size_t ok = 0;
    std::ostringstream bad;
    for (size_t i = 0; i < results.size(); ++i)
    {
      const bool match = results[i].error.empty() && results[i].status == m.expected[i].second &&
        matrix::expected_outcome(cells[i]) == m.expected[i].second;
      ok += match ? 1 : 0;
      if (!match)
        bad << " " << results[i].key << ":" << results[i].label << results[i].error;
    }
    const bool pass = ok == 32 && results.size() == 32;
    return {pass, std::to_string(ok) + "/" + std::to_string(results.size()) + " cells match" + bad.str()};
  }

  // 3. Every mutation of signed data in Secure/BridgedSecure runs ends
  // Bogus or Aborted.
  Verdict tamper_soundness()
  {
    size_t total = 0, detected = 0;
    std::map<std::string, size_t> by_label;
    std::ostringstream missed;
    size_t missed_shown = 0;
    for (const char* name : {"secure_chain", "zero_gap_bridge", "deep_delegation"})
    {
      const auto built = scenario::build(corpus(name));
      const auto cases = sweep::tamper_cases(built);
      const auto runs = sweep::run_tamper_parallel(built, cases);
      for (const auto& r : runs)
      {
        ++total;
        const bool caught = r.error.empty() && (r.status == Status::Bogus || r.status == Status::Aborted);
        detected += caught ? 1 : 0;
        ++by_label[r.error.empty() ? std::string(resolver::to_string(r.status)) : "error"];
        if (!caught && missed_shown++ < 5)
          missed << " [" << name << ": " << r.description << " -> " << r.label << r.error << "]";
      }
    }
    std::ostringstream d;
    d << total << " mutations, " << detected << " detected, rate="
      << (total ? static_cast<double>(detected) / static_cast<double>(total) : 0.0) << " (";
    bool first = true;
    for (const auto& [label, n] : by_label)
    {
      d << (first ? "" : ", ") << label << "=" << n;
      first = false;
    }
    d << ")" << missed.str();
    return {total >= 500 && detected == total, d.str()};
  }

  // 4. Impostors with certificates for any other IP abort before sealing.
  Verdict impostor_abort()
  {
    std::mt19937_64 rng(404);
    size_t aborted = 0, sealed = 0;
    std::ostringstream bad;
    auto random_ip = [&](uint32_t avoid) {
      uint32_t v;
      do
        v = static_cast<uint32_t>(rng());
      while (v == avoid || v == 0);
      return Ipv4Address::from_u32(v).to_string();
    };
    for (int i = 0; i < 100; ++i)
    {
      const bool via_glue = i % 2 == 0;
      const auto rogue = "203.0.113." + std::to_string(100 + rng() % 100);
      const uint32_t expected = via_glue ? Ipv4Address::parse(rogue)->to_u32() : Ipv4Address::parse("192.0.2.53")->to_u32();
      const auto cert_ip = (rng() % 4 == 0) ? (via_glue ? std::string("192.0.2.53") : rogue) : random_ip(expected);

      json doc = {
        {"scenario_version", 1},
        {"seed", rng()},
        {"question", "www.example.com"},
        {"latency", {{"default", 1 + rng() % 50}}},
        {"zones",
         json::array(
           {{{"name", "."}, {"server", "198.41.0.4"}},
            {{"name", "com"}, {"server", "192.5.6.30"}, {"signed", !via_glue}},
            {{"name", "example.com"},
             {"server", "192.0.2.53"},
             {"parent_publishes_ds", false},
             {"bridge", {{"port", 853}}},
             {"records", json::array({{{"name", "www.example.com"}, {"a", "192.0.2.1"}}})}}})},
        {"rogue_servers",
         json::array(
           {{{"address", rogue},
             {"zone", "example.com"},
             {"signed", rng() % 2 == 0},
             {"bridge", {{"port", 853}, {"cert", {{"ip", cert_ip}}}}},
             {"records", json::array({{{"name", "www.example.com"}, {"a", "203.0.113.66"}}})}}})}};
      if (via_glue)
        doc["tamper"] = json::array(
          {{{"zone", "com"}, {"kind", "replace_glue"}, {"child", "example.com"}, {"address", rogue}}});
      else
        doc["adversary"] = {{"mode", "impostor"}, {"at", "192.0.2.53"}, {"impostor", rogue}};

      const auto rep = scenario::run(scenario::parse(doc));
      const auto& out = rep.queries.front().result.outcome;
      sealed += rep.session.sealed_payloads_sent;
      const bool ok = out.status == Status::Aborted && out.reason == "CertRejected(IpMismatch)" &&
        rep.session.sealed_payloads_sent == 0;
      aborted += ok ? 1 : 0;
      if (!ok)
        bad << " [#" << i << (via_glue ? " glue" : " redirect") << " cert=" << cert_ip << " -> " << out.label() << "]";
    }
    return {aborted == 100 && sealed == 0,
            std::to_string(aborted) + "/100 Aborted(CertRejected(IpMismatch)), sealed payloads=" +
              std::to_string(sealed) + bad.str()};
  }

  // 5. Crypto against independent OpenSSL oracles.
  Verdict crypto_oracles()
  {
    std::mt19937_64 rng(505);
    size_t ds_ok = 0, sign_ok = 0, seal_ok = 0, flips = 0, flips_rejected = 0;

    for (int i = 0; i < 100; ++i)
    {
      crypto::Key32 seed;
      for (auto& x : seed)
        x = static_cast<uint8_t>(rng());
      const auto owner = gen::name(rng);
      const auto ksk = dnssec::generate_zone_keys(owner, seed).ksk_dnskey();
      Bytes input;
      for (const auto& label : owner.labels())
      {
        input.push_back(static_cast<uint8_t>(label.size()));
        for (char c : label)
          input.push_back(static_cast<uint8_t>(std::tolower(static_cast<unsigned char>(c))));
      }
      input.push_back(0);
      put_u16(input, dnssec::flag_zone_key | dnssec::flag_sep);
      put_u8(input, dnssec::dnskey_protocol);
      put_u8(input, dnssec::algorithm_ed25519);
      append(input, ksk.rdata.public_key);
      ds_ok += dnssec::compute_ds(ksk).rdata.digest == oracle::sha256(input) ? 1 : 0;
    }

    for (int i = 0; i < 1000; ++i)
    {
      crypto::Key32 seed;
      for (auto& x : seed)
        x = static_cast<uint8_t>(rng());
      const auto msg = gen::bytes(rng, rng() % 200);
      const auto kp = crypto::Ed25519KeyPair::from_seed(seed);
      const auto sig = kp.sign(msg);
      sign_ok += crypto::ed25519_verify(kp.public_key, msg, sig) &&
          oracle::ed25519_verify(kp.public_key, msg, sig) ? 1 : 0;

      crypto::Key32 key;
      crypto::Nonce12 nonce;
      for (auto& x : key)
        x = static_cast<uint8_t>(rng());
      for (auto& x : nonce)
        x = static_cast<uint8_t>(rng());
      const auto ad = gen::bytes(rng, rng() % 32);
      const auto pt = gen::bytes(rng, rng() % 64);
      const auto ct = crypto::aead_seal(key, nonce, ad, pt);
      seal_ok += ct == oracle::chacha_seal(key, nonce, ad, pt) && crypto::aead_open(key, nonce, ad, ct) == pt ? 1 : 0;
      for (size_t bit = 0; bit < ct.size() * 8; ++bit)
      {
        auto bad = ct;
        bad[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
        ++flips;
        flips_rejected += crypto::aead_open(key, nonce, ad, bad) ? 0 : 1;
      }
    }
    std::ostringstream d;
    d << "DS " << ds_ok << "/100, sign/verify " << sign_ok << "/1000, seal/open " << seal_ok
      << "/1000, bit flips rejected " << flips_rejected << "/" << flips;
    return {ds_ok == 100 && sign_ok == 1000 && seal_ok == 1000 && flips == flips_rejected, d.str()};
  }

  // 6. decode(encode(m)) == m over a generated corpus.
  Verdict codec_round_trip()
  {
    std::mt19937_64 rng(606);
    size_t ok = 0;
    const size_t n = 10000;
    std::map<wire::RType, size_t> types;
    size_t ds_absent = 0, bridge_opt = 0, other_opt = 0;
    for (size_t i = 0; i < n; ++i)
    {
      const auto force = i % 2 ? std::optional(gen::record_types[(i / 2) % 5]) : std::nullopt;
      const auto m = gen::message(rng, force);
      const auto b = wire::encode(m);
      ok += wire::decode(b) == m ? 1 : 0;
      for (const auto* s : {&m.answers, &m.authority, &m.additional})
        for (const auto& rr : *s)
          ++types[rr.type()];
      if (m.edns)
      {
        ++types[wire::RType::OPT];
        for (const auto& o : *m.edns)
        {
          ds_absent += o.code == wire::opt_ds_absent ? 1 : 0;
          bridge_opt += o.code == wire::opt_bridge_available ? 1 : 0;
          other_opt += o.code != wire::opt_ds_absent && o.code != wire::opt_bridge_available ? 1 : 0;
        }
      }
    }
    std::ostringstream d;
    d << ok << "/" << n << " round trips; records";
    for (const auto& [t, c] : types)
      d << " " << wire::to_string(t) << "=" << c;
    d << "; options DS_ABSENT=" << ds_absent << " BRIDGE_AVAILABLE=" << bridge_opt << " other=" << other_opt;
    const bool covered = types.size() == 6 && ds_absent && bridge_opt && other_opt;
    return {ok == n && covered, d.str()};
  }

  // 7. Same seed, same bytes, for every scenario in the corpus.
  Verdict determinism()
  {
    size_t files = 0, identical = 0;
    std::ostringstream bad;
    std::vector<std::filesystem::path> paths;
    for (const auto& e : std::filesystem::directory_iterator(scenario_dir))
      if (e.path().extension() == ".json" && e.path().filename() != "matrix.json")
        paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths)
    {
      ++files;
      const auto s = scenario::load_file(p.string());
      const auto a = scenario::run(s);
      const auto b = scenario::run(s);
      bool same = scenario::to_json(a).dump() == scenario::to_json(b).dump() &&
        a.session.captures.size() == b.session.captures.size();
      for (size_t i = 0; same && i < a.session.captures.size(); ++i)
        same = a.session.captures[i].payload == b.session.captures[i].payload &&
          a.session.captures[i].t_ms == b.session.captures[i].t_ms;
      identical += same ? 1 : 0;
      if (!same)
        bad << " " << p.filename().string();
    }
    return {files > 0 && identical == files,
            std::to_string(identical) + "/" + std::to_string(files) +
              " scenarios byte-identical across two runs (transcripts, ledgers, wire captures)" + bad.str()};
  }

  // 8. Every reordering of the handshake is rejected; only the honest order
  // establishes.
  Verdict handshake_ordering()
  {
    const auto ca = ipcert::CaIdentity::create("Test CA", crypto::Key32{1});
    ipcert::TrustStore store;
    store.add(ca.root());
    const auto ip = *Ipv4Address::parse("192.0.2.53");
    bridge::ServerIdentity id;
    id.keypair = crypto::X25519KeyPair::from_seed(crypto::Key32{2});
    id.certificate =
      ipcert::issue_cert(ca, ip, Bytes(id.keypair.public_key.begin(), id.keypair.public_key.end()), {0, 1000}).encode();

    // Honest frames in each direction.
    std::vector<Bytes> to_server, to_client;
    {
      auto [client, hello] = bridge::BridgeSession::client_start(ip, store, to_bytes("c"));
      auto server = bridge::BridgeSession::server(id, to_bytes("s"));
      to_server.push_back(bridge::encode_frame(hello));
      bridge::Flight f1 = server.deliver(hello), f2, f3;
      for (const auto& m : f1)
      {
        to_client.push_back(bridge::encode_frame(m));
        f2 = client.deliver(m, 10);
      }
      wire::DnsMessage q;
      q.question = wire::Question{wire::DomainName::parse("www.example.com"), wire::RType::A};
      for (const auto& m : f2)
      {
        to_server.push_back(bridge::encode_frame(m));
        f3 = server.deliver(m);
      }
      to_server.push_back(bridge::encode_frame(client.seal(q)));
      for (const auto& m : f3)
        to_client.push_back(bridge::encode_frame(m));
    }

    // Every permutation of each direction's sequence (a superset of the
    // single-message moves).
    size_t orders = 0, rejected = 0, honest_established = 0, keys_after_abort = 0;
    auto sweep = [&](const std::vector<Bytes>& frames, bool client_side) {
      std::vector<size_t> order(frames.size());
      std::iota(order.begin(), order.end(), 0);
      do
      {
        const bool honest = std::is_sorted(order.begin(), order.end());
        auto session = client_side ? bridge::BridgeSession::client_start(ip, store, to_bytes("c")).first :
                                     bridge::BridgeSession::server(id, to_bytes("s"));
        bool opened = false;
        for (auto i : order)
        {
          const auto f = bridge::decode_frame(frames[i]);
          if (auto rec = std::get_if<bridge::EncryptedRecord>(&f); rec && session.state() == bridge::State::Established)
          {
            try
            {
              session.open(*rec);
              opened = true;
            }
            catch (const bridge::BridgeError&)
            {
            }
            continue;
          }
          session.deliver_frame(frames[i], 10);
        }
        const bool established = session.state() == bridge::State::Established;
        if (honest)
        {
          honest_established += established && (client_side || opened) ? 1 : 0;
          continue;
        }
        ++orders;
        const bool out_of_order = session.state() == bridge::State::Aborted &&
          session.abort_reason()->reason == bridge::AbortReason::OutOfOrder;
        rejected += out_of_order ? 1 : 0;
        keys_after_abort += session.traffic_keys() || session.has_handshake_secret() ? 1 : 0;
      } while (std::next_permutation(order.begin(), order.end()));
    };
    sweep(to_client, true);
    sweep(to_server, false);
    std::ostringstream d;
    d << rejected << "/" << orders << " reorderings aborted OutOfOrder, honest order established "
      << honest_established << "/2, sessions holding keys after abort=" << keys_after_abort;
    return {orders == 2 * 119 && rejected == orders && honest_established == 2 && keys_after_abort == 0, d.str()};
  }

  // 9. Off-path spoofing with a known TXID wins against an unsigned island
  // and never against a validated path.
  Verdict spoofing()
  {
    auto doc_for = [](bool all_signed, bool bridged, uint64_t seed, size_t per_query) {
      json auth = {
        {"name", "example.com"},
        {"server", "192.0.2.53"},
        {"signed", all_signed},
        {"parent_publishes_ds", !bridged},
        {"records", json::array({{{"name", "www.example.com"}, {"a", "192.0.2.1"}}})}};
      if (bridged)
        auth["bridge"] = {{"port", 853}};
      return json{
        {"scenario_version", 1},
        {"seed", seed},
        {"question", "www.example.com"},
        {"adversary",
         {{"mode", "off_path_spoof"},
          {"links", json::array({"198.41.0.4", "192.5.6.30", "192.0.2.53"})},
          {"rate", 1.0},
          {"forged_address", matrix::cell_forged_answer},
          {"per_query", per_query}}},
        {"zones",
         json::array(
           {{{"name", "."}, {"server", "198.41.0.4"}, {"signed", all_signed}},
            {{"name", "com"}, {"server", "192.5.6.30"}, {"signed", all_signed}},
            auth})}};
    };

    size_t island_runs = 0, island_won = 0;
    for (uint64_t seed = 1; seed <= 20; ++seed)
    {
      const auto rep = scenario::run(scenario::parse(doc_for(false, false, seed, 1)));
      ++island_runs;
      island_won += answer_of(rep.queries.front().result.outcome) == matrix::cell_forged_answer ? 1 : 0;
    }

    size_t attempts = 0, accepted = 0, wrong_status = 0;
    for (bool bridged : {false, true})
      for (uint64_t seed = 1; seed <= 100; ++seed)
      {
        const auto rep = scenario::run(scenario::parse(doc_for(true, bridged, seed, 2)));
        const auto& out = rep.queries.front().result.outcome;
        attempts += rep.session.forgeries_injected;
        accepted += answer_of(out) == matrix::cell_forged_answer ? 1 : 0;
        wrong_status += out.status == (bridged ? Status::BridgedSecure : Status::Secure) &&
            answer_of(out) == matrix::cell_answer ? 0 : 1;
      }
    std::ostringstream d;
    d << "unsigned island poisoned " << island_won << "/" << island_runs << "; Secure/BridgedSecure: "
      << accepted << " accepted of " << attempts << " forgeries, " << wrong_status << " runs with a changed outcome";
    return {island_won == island_runs && attempts >= 1000 && accepted == 0 && wrong_status == 0, d.str()};
  }
}

int main(int argc, char** argv)
{
  if (argc != 2)
  {
    std::cerr << "usage: islandbridge_acceptance <scenario dir>\n";
    return 3;
  }
  scenario_dir = argv[1];

  const std::vector<Criterion> criteria = {
    {1, "RTT overhead of zero-gap bridging", 1.0, rtt_overhead},
    {2, "deployment outcome matrix", 5.0, outcome_matrix},
    {3, "tamper soundness", 30.0, tamper_soundness},
    {4, "impostor abort on IP mismatch", 10.0, impostor_abort},
    {5, "crypto oracles", 30.0, crypto_oracles},
    {6, "codec round trip", 10.0, codec_round_trip},
    {7, "determinism", 10.0, determinism},
    {8, "handshake ordering", 5.0, handshake_ordering},
    {9, "spoofing demonstration", 10.0, spoofing},
  };

  int failed = 0;
  for (const auto& c : criteria)
  {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try
    {
      v = c.check();
    }
    catch (const std::exception& e)
    {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = v.pass && in_time;
    failed += pass ? 0 : 1;
    std::ostringstream t;
    t.precision(3);
    t << std::fixed << secs << "s";
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << v.detail << " ("
              << t.str() << ", limit " << c.limit_s << "s" << (in_time ? "" : ", OVER LIMIT") << ")"
              << std::endl;
  }
  std::cout << (failed ? "FAIL" : "PASS") << " acceptance: " << (9 - failed) << "/9 criteria" << std::endl;
  return failed ? 1 : 0;
}
