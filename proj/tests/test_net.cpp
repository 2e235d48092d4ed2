#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <future>
#include <random>
#include <thread>

#include "doctest.h"
#include "dopf/admm/engine.hpp"
#include "dopf/harness/loopback.hpp"
#include "dopf/model/case.hpp"
#include "dopf/net/agent.hpp"
#include "dopf/net/aggregator.hpp"
#include "dopf/net/link_model.hpp"
#include "dopf/net/transport.hpp"
#include "dopf/net/wire.hpp"

using namespace dopf;
using namespace std::chrono;

namespace {

std::unique_ptr<net::Transport> loop_udp() {
  net::Endpoint ep = net::parse_endpoint("127.0.0.1:0");
  return net::make_udp_transport(&ep);
}

bool history_values_equal(const std::vector<admm::IterationRecord>& a,
                          const std::vector<admm::IterationRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].k != b[i].k || a[i].r_norm != b[i].r_norm || a[i].s_norm != b[i].s_norm ||
        a[i].eps_pri != b[i].eps_pri || a[i].eps_dual != b[i].eps_dual ||
        a[i].rho != b[i].rho || a[i].objective != b[i].objective)
      return false;
  return true;
}

struct ScriptResult {
  bool assigned = false;
  bool got_done = false;
  bool got_error = false;
  int served = 0;
};

// Minimal hand-rolled agent: registers, answers TARGETS with a zero profile
// up to reply_upto_k, then plays dead until the aggregator broadcasts.
ScriptResult run_scripted_agent(net::Endpoint server, std::uint16_t id, int nt,
                                int reply_upto_k) {
  ScriptResult out;
  auto tr = loop_udp();
  net::Message hello;
  hello.kind = net::MsgKind::hello;
  hello.agent_id = id;
  const auto frame = net::encode(hello);

  const auto deadline = steady_clock::now() + seconds(10);
  std::uint64_t run_id = 0;
  while (!out.assigned && steady_clock::now() < deadline) {
    tr->send_to(server, frame);
    auto d = tr->recv(100);
    if (!d) continue;
    auto m = net::decode(d->bytes);
    if (m && m->kind == net::MsgKind::assign && m->agent_id == id) {
      run_id = m->run_id;
      out.assigned = true;
    }
  }
  if (!out.assigned) return out;

  while (steady_clock::now() < deadline) {
    auto d = tr->recv(200);
    if (!d) continue;
    auto m = net::decode(d->bytes);
    if (!m || m->run_id != run_id) continue;
    if (m->kind == net::MsgKind::done) {
      out.got_done = true;
      return out;
    }
    if (m->kind == net::MsgKind::error) {
      out.got_error = true;
      return out;
    }
    if (m->kind == net::MsgKind::targets && (int)m->k <= reply_upto_k) {
      net::Message pr;
      pr.kind = net::MsgKind::profile;
      pr.run_id = run_id;
      pr.agent_id = id;
      pr.k = m->k;
      pr.payload.assign(nt, 0.0f);
      tr->send_to(server, net::encode(pr));
      ++out.served;
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("net") {

TEST_CASE("frame sizes and the documented payload budgets") {
  CHECK(net::frame_size(0) == 24);
  CHECK(net::frame_size(1) == 28);
  // TARGETS carries 2|T|+1 floats, PROFILE carries |T|
  CHECK(net::frame_size(2 * 48 + 1) == 412);  // half-hourly targets
  CHECK(net::frame_size(48) == 216);          // half-hourly profile
  CHECK(net::frame_size(2 * 96 + 1) == 796);  // quarter-hourly targets
  CHECK(net::frame_size(96) == 408);          // quarter-hourly profile
  CHECK(net::frame_size(2 * 48 + 1) <= 1024);
  CHECK(net::frame_size(2 * 96 + 1) <= 2048);
}

TEST_CASE("header layout is little-endian at fixed offsets") {
  net::Message m;
  m.kind = net::MsgKind::targets;
  m.run_id = 0x0102030405060708ULL;
  m.agent_id = 0xBEEF;
  m.k = 0x00C0FFEEu;
  m.payload = {1.0f, -2.0f};
  const auto f = net::encode(m);
  REQUIRE(f.size() == net::frame_size(2));
  CHECK(f[0] == 1);  // version
  CHECK(f[1] == 3);  // targets
  const std::uint8_t run_le[8] = {0x08, 0x07, 0x06, 0x05, 0x04, 0x03, 0x02, 0x01};
  for (int i = 0; i < 8; ++i) CHECK(f[2 + i] == run_le[i]);
  CHECK(f[10] == 0xEF);
  CHECK(f[11] == 0xBE);
  CHECK(f[12] == 0xEE);
  CHECK(f[13] == 0xFF);
  CHECK(f[14] == 0xC0);
  CHECK(f[15] == 0x00);
  CHECK(f[16] == 2);  // payload count
  CHECK(f[17] == 0);
  // 1.0f little-endian
  CHECK(f[20] == 0x00);
  CHECK(f[21] == 0x00);
  CHECK(f[22] == 0x80);
  CHECK(f[23] == 0x3F);
}

TEST_CASE("encode/decode round-trips randomized messages") {
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<float> uf(-10.0f, 10.0f);
  for (int trial = 0; trial < 200; ++trial) {
    net::Message m;
    m.kind = (net::MsgKind)(1 + (int)(rng() % 6));
    m.run_id = rng();
    m.agent_id = (std::uint16_t)rng();
    m.k = (std::uint32_t)rng();
    m.payload.resize(rng() % 300);
    for (auto& v : m.payload) v = uf(rng);
    const auto f = net::encode(m);
    const auto back = net::decode(f);
    REQUIRE(back.has_value());
    CHECK(*back == m);
  }
}

TEST_CASE("decode rejects malformed frames with a reason") {
  net::Message m;
  m.kind = net::MsgKind::profile;
  m.run_id = 7;
  m.agent_id = 3;
  m.k = 9;
  m.payload = {0.5f, 1.5f, 2.5f};
  const auto good = net::encode(m);
  std::string err;

  CHECK(!net::decode(good.data(), 10, &err));
  CHECK(!err.empty());

  auto bad_ver = good;
  bad_ver[0] = 2;
  CHECK(!net::decode(bad_ver, &err));

  auto bad_kind = good;
  bad_kind[1] = 42;
  // kind is CRC-protected, so re-decode fails either way
  CHECK(!net::decode(bad_kind, &err));

  auto bad_count = good;
  bad_count[16] = 99;
  CHECK(!net::decode(bad_count, &err));

  auto bad_crc = good;
  bad_crc[22] ^= 0x01;
  CHECK(!net::decode(bad_crc, &err));

  auto truncated = good;
  truncated.pop_back();
  CHECK(!net::decode(truncated, &err));

  // an oversize count field cannot be satisfied by any sane buffer
  auto huge = good;
  huge[16] = 0xFF;
  huge[17] = 0xFF;
  huge[18] = 0xFF;
  huge[19] = 0x7F;
  CHECK(!net::decode(huge, &err));

  net::Message big;
  big.payload.resize(net::kMaxPayloadFloats + 1);
  CHECK_THROWS_AS(net::encode(big), std::invalid_argument);
}

TEST_CASE("message kind names") {
  CHECK(std::string(net::to_string(net::MsgKind::hello)) == "HELLO");
  CHECK(std::string(net::to_string(net::MsgKind::assign)) == "ASSIGN");
  CHECK(std::string(net::to_string(net::MsgKind::targets)) == "TARGETS");
  CHECK(std::string(net::to_string(net::MsgKind::profile)) == "PROFILE");
  CHECK(std::string(net::to_string(net::MsgKind::done)) == "DONE");
  CHECK(std::string(net::to_string(net::MsgKind::error)) == "ERROR");
}

TEST_CASE("endpoint parsing") {
  const net::Endpoint e = net::parse_endpoint("127.0.0.1:7401");
  CHECK(e.ip == 0x7F000001u);
  CHECK(e.port == 7401);
  CHECK(e.to_string() == "127.0.0.1:7401");
  CHECK(net::parse_endpoint("localhost:80").ip == 0x7F000001u);
  CHECK_THROWS_AS(net::parse_endpoint("no-port-here"), std::runtime_error);
  CHECK_THROWS_AS(net::parse_endpoint("127.0.0.1:notaport"), std::runtime_error);
  CHECK_THROWS_AS(net::parse_endpoint("definitely.not.a.host.invalid:80"), std::runtime_error);
}

TEST_CASE("udp transport delivers datagrams on loopback") {
  auto a = loop_udp();
  auto b = loop_udp();
  REQUIRE(b->local().port != 0);
  const std::vector<std::uint8_t> frame = {1, 2, 3, 4, 5};
  a->send_to(b->local(), frame);
  auto d = b->recv(2000);
  REQUIRE(d.has_value());
  CHECK(d->bytes == frame);
  CHECK(d->from.ip == 0x7F000001u);
  CHECK(d->from.port == a->local().port);
  CHECK(!b->recv(50).has_value());  // nothing else queued
}

TEST_CASE("link model validates its parameters") {
  CHECK_THROWS_AS(net::with_link_model(loop_udp(), net::LinkModel{0, 0, 1.0, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(net::with_link_model(loop_udp(), net::LinkModel{-5.0, -5.0, 0.0, 0}),
                  std::invalid_argument);
  CHECK(net::LinkModel{}.is_identity());
  CHECK(!net::LinkModel::fixed(10.0).is_identity());
}

TEST_CASE("identity link model passes traffic through") {
  auto shaped = net::with_link_model(loop_udp(), net::LinkModel{});
  auto peer = loop_udp();
  shaped->send_to(peer->local(), {9, 9, 9});
  auto d = peer->recv(2000);
  REQUIRE(d.has_value());
  CHECK(d->bytes == std::vector<std::uint8_t>{9, 9, 9});
}

TEST_CASE("fixed latency delays delivery") {
  net::LinkStats stats;
  auto shaped = net::with_link_model(loop_udp(), net::LinkModel::fixed(40.0), &stats);
  auto peer = loop_udp();
  const auto t0 = steady_clock::now();
  shaped->send_to(peer->local(), {1});
  auto d = peer->recv(3000);
  const double ms = duration<double, std::milli>(steady_clock::now() - t0).count();
  REQUIRE(d.has_value());
  CHECK(ms >= 35.0);
  CHECK(stats.snapshot().sent == 1);
}

TEST_CASE("latency jitter reorders but never loses") {
  net::LinkStats stats;
  auto shaped = net::with_link_model(loop_udp(), net::LinkModel{1.0, 6.0, 0.0, 99}, &stats);
  auto peer = loop_udp();
  const int n = 50;
  for (std::uint8_t i = 0; i < n; ++i) shaped->send_to(peer->local(), {i});
  std::vector<int> got;
  while ((int)got.size() < n) {
    auto d = peer->recv(2000);
    REQUIRE(d.has_value());
    got.push_back(d->bytes[0]);
  }
  std::sort(got.begin(), got.end());
  for (int i = 0; i < n; ++i) CHECK(got[i] == i);
  CHECK(stats.snapshot().sent == n);
  CHECK(stats.snapshot().dropped_tx == 0);
}

TEST_CASE("seeded loss is deterministic") {
  auto run_once = [](std::uint64_t seed) {
    net::LinkStats stats;
    auto shaped = net::with_link_model(loop_udp(), net::LinkModel{0.0, 0.0, 0.5, seed}, &stats);
    auto peer = loop_udp();
    const int n = 120;
    for (int i = 0; i < n; ++i)
      shaped->send_to(peer->local(), {(std::uint8_t)i, (std::uint8_t)(i >> 8)});
    std::vector<int> got;
    for (;;) {
      auto d = peer->recv(300);
      if (!d) break;
      got.push_back(d->bytes[0] | (d->bytes[1] << 8));
    }
    std::sort(got.begin(), got.end());
    const auto snap = stats.snapshot();
    CHECK(snap.sent == (std::uint64_t)n);
    CHECK(snap.dropped_tx == (std::uint64_t)(n - (int)got.size()));
    return got;
  };
  const auto first = run_once(31337);
  const auto second = run_once(31337);
  CHECK(first == second);
  CHECK(first.size() > 20);   // loss=0.5 leaves a healthy sample
  CHECK(first.size() < 100);  // and actually drops traffic
}

TEST_CASE("agent answers DONE immediately and serves duplicates from cache") {
  const model::Case c = model::build_case("minimal-1", "T1/4", 6);
  const int nt = c.horizon.steps;
  const std::uint16_t id = (std::uint16_t)c.prosumers[0].id;

  auto fake = loop_udp();
  net::AgentConfig acfg;
  acfg.server = fake->local();
  acfg.prosumer_id = c.prosumers[0].id;
  acfg.hello_interval_ms = 50;
  acfg.reg_timeout_ms = 8000;
  acfg.idle_timeout_ms = 8000;
  auto fut = std::async(std::launch::async, [&] { return net::run_agent(c, acfg); });

  // registration
  net::Endpoint agent_ep{};
  std::uint64_t run_id = 0xD0D0CAFEULL;
  bool hello_seen = false;
  const auto deadline = steady_clock::now() + seconds(8);
  while (!hello_seen && steady_clock::now() < deadline) {
    auto d = fake->recv(500);
    if (!d) continue;
    auto m = net::decode(d->bytes);
    if (m && m->kind == net::MsgKind::hello && m->agent_id == id) {
      agent_ep = d->from;
      hello_seen = true;
    }
  }
  REQUIRE(hello_seen);
  net::Message assign;
  assign.kind = net::MsgKind::assign;
  assign.run_id = run_id;
  assign.agent_id = id;
  fake->send_to(agent_ep, net::encode(assign));

  // garbage barrage: the agent must shrug all of it off
  std::mt19937_64 rng(1);
  for (int i = 0; i < 40; ++i) {
    std::vector<std::uint8_t> junk(rng() % 80);
    for (auto& b : junk) b = (std::uint8_t)rng();
    fake->send_to(agent_ep, junk);
  }
  {
    net::Message wrong_run;
    wrong_run.kind = net::MsgKind::targets;
    wrong_run.run_id = run_id + 1;
    wrong_run.agent_id = id;
    wrong_run.k = 1;
    wrong_run.payload.assign(2 * nt + 1, 0.0f);
    fake->send_to(agent_ep, net::encode(wrong_run));
    net::Message short_payload;
    short_payload.kind = net::MsgKind::targets;
    short_payload.run_id = run_id;
    short_payload.agent_id = id;
    short_payload.k = 1;
    short_payload.payload.assign(nt, 0.0f);  // wrong length
    fake->send_to(agent_ep, net::encode(short_payload));
  }

  // a real round, then the same round again
  net::Message targets;
  targets.kind = net::MsgKind::targets;
  targets.run_id = run_id;
  targets.agent_id = id;
  targets.k = 1;
  targets.payload.assign(2 * nt + 1, 0.0f);
  targets.payload[2 * nt] = 1.0f;  // rho
  fake->send_to(agent_ep, net::encode(targets));

  auto recv_profile = [&]() -> std::vector<std::uint8_t> {
    const auto dl = steady_clock::now() + seconds(8);
    while (steady_clock::now() < dl) {
      auto d = fake->recv(500);
      if (!d) continue;
      auto m = net::decode(d->bytes);
      if (m && m->kind == net::MsgKind::profile && m->agent_id == id) {
        CHECK(m->run_id == run_id);
        CHECK(m->k == 1);
        CHECK((int)m->payload.size() == nt);
        return d->bytes;
      }
    }
    return {};
  };
  const auto first = recv_profile();
  REQUIRE(!first.empty());
  fake->send_to(agent_ep, net::encode(targets));  // duplicate
  const auto second = recv_profile();
  REQUIRE(!second.empty());
  CHECK(first == second);  // byte-identical cached reply

  net::Message done;
  done.kind = net::MsgKind::done;
  done.run_id = run_id;
  done.agent_id = id;
  done.k = 1;
  fake->send_to(agent_ep, net::encode(done));

  const net::AgentOutcome out = fut.get();
  CHECK(out.ok);
  CHECK(out.message == "done");
  CHECK(out.rounds == 1);  // the duplicate never re-solved
}

TEST_CASE("agent gives up when nobody assigns it") {
  const model::Case c = model::build_case("minimal-1", "T1/4", 6);
  auto blackhole = loop_udp();  // bound but never answers
  net::AgentConfig acfg;
  acfg.server = blackhole->local();
  acfg.prosumer_id = c.prosumers[0].id;
  acfg.hello_interval_ms = 50;
  acfg.reg_timeout_ms = 300;
  const net::AgentOutcome out = net::run_agent(c, acfg);
  CHECK(!out.ok);
  CHECK(out.message.find("ASSIGN") != std::string::npos);
}

TEST_CASE("agent refuses a case it does not belong to") {
  const model::Case c = model::build_case("minimal-1", "T1/4", 6);
  net::AgentConfig acfg;
  acfg.server = net::parse_endpoint("127.0.0.1:1");
  acfg.prosumer_id = 555;
  const net::AgentOutcome out = net::run_agent(c, acfg);
  CHECK(!out.ok);
  CHECK(out.message.find("not in case") != std::string::npos);
}

TEST_CASE("aggregator registration window expires with the missing ids") {
  const model::Case c = model::build_case("minimal-2", "T1/4", 6);
  net::AggregatorConfig cfg;
  cfg.bind = net::parse_endpoint("127.0.0.1:0");
  cfg.reg_timeout_ms = 250;
  net::RemoteBackend backend(c, cfg);
  CHECK(backend.run_id() != 0);
  try {
    backend.register_agents();
    FAIL("expected registration to time out");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("missing agents") != std::string::npos);
    CHECK(msg.find(std::to_string(c.prosumers[0].id)) != std::string::npos);
    CHECK(msg.find(std::to_string(c.prosumers[1].id)) != std::string::npos);
  }
}

TEST_CASE("rounds against unregistered agents fail as transport faults") {
  const model::Case c = model::build_case("minimal-2", "T1/4", 6);
  net::AggregatorConfig cfg;
  cfg.bind = net::parse_endpoint("127.0.0.1:0");
  net::RemoteBackend backend(c, cfg);
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, c.horizon.steps);
  const auto round = backend.solve_round(1, z, z, 1.0);
  CHECK(!round.ok);
  CHECK(round.transport_fault);
  CHECK(round.error.find("never registered") != std::string::npos);
}

TEST_CASE("an agent that goes mute mid-run aborts the fleet") {
  const model::Case c = model::build_case("minimal-2", "T1/4", 6);
  const int nt = c.horizon.steps;
  net::AggregatorConfig cfg;
  cfg.bind = net::parse_endpoint("127.0.0.1:0");
  cfg.reg_timeout_ms = 8000;
  cfg.initial_rto_ms = 50;
  net::RemoteBackend backend(c, cfg);
  const net::Endpoint server = backend.local();

  auto healthy = std::async(std::launch::async, [&] {
    return run_scripted_agent(server, (std::uint16_t)c.prosumers[0].id, nt, 1 << 20);
  });
  auto mute = std::async(std::launch::async, [&] {
    return run_scripted_agent(server, (std::uint16_t)c.prosumers[1].id, nt, 1);
  });

  backend.register_agents();
  admm::AdmmConfig acfg;
  acfg.eps_abs = 1e-4;
  acfg.k_max = 50;
  const admm::AdmmResult res = admm::run_admm(c, acfg, backend);
  CHECK(res.status == admm::RunStatus::transport_failure);
  CHECK(res.failed_agent == c.prosumers[1].id);
  CHECK(res.message.find("unreachable") != std::string::npos);
  CHECK(res.iterations() >= 1);

  const ScriptResult h = healthy.get();
  const ScriptResult m = mute.get();
  CHECK(h.assigned);
  CHECK(m.assigned);
  CHECK(h.got_error);  // abort broadcast reached the healthy agent
  CHECK(m.got_error);
  CHECK(m.served == 1);
}

TEST_CASE("an agent reporting a solver failure aborts without a transport fault") {
  const model::Case c = model::build_case("minimal-2", "T1/4", 6);
  const int nt = c.horizon.steps;
  net::AggregatorConfig cfg;
  cfg.bind = net::parse_endpoint("127.0.0.1:0");
  cfg.reg_timeout_ms = 8000;
  net::RemoteBackend backend(c, cfg);
  const net::Endpoint server = backend.local();

  auto healthy = std::async(std::launch::async, [&] {
    return run_scripted_agent(server, (std::uint16_t)c.prosumers[0].id, nt, 1 << 20);
  });
  // scripted failure: register, then answer the first TARGETS with ERROR
  auto broken = std::async(std::launch::async, [&, server] {
    ScriptResult out;
    auto tr = loop_udp();
    net::Message hello;
    hello.kind = net::MsgKind::hello;
    hello.agent_id = (std::uint16_t)c.prosumers[1].id;
    std::uint64_t run_id = 0;
    const auto dl = steady_clock::now() + seconds(10);
    while (!out.assigned && steady_clock::now() < dl) {
      tr->send_to(server, net::encode(hello));
      auto d = tr->recv(100);
      if (!d) continue;
      auto m = net::decode(d->bytes);
      if (m && m->kind == net::MsgKind::assign && m->agent_id == hello.agent_id) {
        run_id = m->run_id;
        out.assigned = true;
      }
    }
    while (steady_clock::now() < dl) {
      auto d = tr->recv(200);
      if (!d) continue;
      auto m = net::decode(d->bytes);
      if (!m || m->run_id != run_id) continue;
      if (m->kind == net::MsgKind::error) {
        out.got_error = true;
        return out;
      }
      if (m->kind == net::MsgKind::targets) {
        net::Message err;
        err.kind = net::MsgKind::error;
        err.run_id = run_id;
        err.agent_id = hello.agent_id;
        err.k = m->k;
        tr->send_to(server, net::encode(err));
      }
    }
    return out;
  });

  backend.register_agents();
  admm::AdmmConfig acfg;
  acfg.k_max = 10;
  const admm::AdmmResult res = admm::run_admm(c, acfg, backend);
  CHECK(res.status == admm::RunStatus::solver_error);
  CHECK(res.failed_agent == c.prosumers[1].id);
  CHECK(res.message.find("solver failure") != std::string::npos);
  healthy.get();
  CHECK(broken.get().got_error);
}

TEST_CASE("loopback deployment replays the in-process iterate sequence exactly") {
  const model::Case c = model::build_case("minimal-2", "T1/6", 12);
  admm::AdmmConfig cfg;
  cfg.eps_abs = 1e-3;

  const admm::AdmmResult local = admm::run_admm(c, cfg);
  REQUIRE(local.status == admm::RunStatus::converged);

  harness::LoopbackRun remote = harness::run_loopback(c, cfg);
  REQUIRE(remote.result.status == admm::RunStatus::converged);
  CHECK(history_values_equal(local.history, remote.result.history));
  CHECK(local.p_kw == remote.result.p_kw);
  CHECK(local.p_hat_kw == remote.result.p_hat_kw);
  CHECK(remote.wall_ms > 0.0);

  REQUIRE(remote.agents.size() == 2);
  for (const auto& a : remote.agents) {
    CHECK(a.ok);
    CHECK(a.message == "done");
    CHECK(a.rounds == remote.result.iterations());
  }
  // per-iteration traffic: TARGETS down, PROFILE up, per agent
  const std::size_t targets_frame = net::frame_size(2 * c.horizon.steps + 1);
  const std::size_t profile_frame = net::frame_size(c.horizon.steps);
  for (const auto& rec : remote.result.history) {
    CHECK(rec.bytes_down >= 2 * targets_frame);
    CHECK(rec.bytes_up >= 2 * profile_frame);
  }
}

TEST_CASE("a lossy link changes traffic but not one iterate") {
  const model::Case c = model::build_case("minimal-2", "T1/6", 12);
  admm::AdmmConfig cfg;
  cfg.eps_abs = 1e-3;
  const admm::AdmmResult local = admm::run_admm(c, cfg);
  REQUIRE(local.status == admm::RunStatus::converged);

  harness::LoopbackOptions opts;
  opts.aggregator_link = net::LinkModel{0.0, 0.0, 0.10, 2026};
  opts.initial_rto_ms = 60;
  opts.idle_timeout_ms = 3000;
  harness::LoopbackRun lossy = harness::run_loopback(c, cfg, opts);
  REQUIRE(lossy.result.status == admm::RunStatus::converged);
  CHECK(history_values_equal(local.history, lossy.result.history));
  CHECK(local.p_kw == lossy.result.p_kw);
  CHECK(lossy.link_counters.dropped_tx + lossy.link_counters.dropped_rx > 0);

  std::uint64_t clean_down = 0, lossy_down = 0;
  for (const auto& r : local.history) clean_down += r.bytes_down;
  for (const auto& r : lossy.result.history) lossy_down += r.bytes_down;
  CHECK(lossy_down > clean_down);  // retransmissions cost bytes
}

TEST_CASE("environment overrides") {
  setenv("DOPF_REG_TIMEOUT_MS", "1234", 1);
  setenv("DOPF_IDLE_TIMEOUT_MS", "4321", 1);
  setenv("DOPF_RTO_MS", "77", 1);

  net::AgentConfig acfg;
  net::apply_env_overrides(acfg);
  CHECK(acfg.reg_timeout_ms == 1234);
  CHECK(acfg.idle_timeout_ms == 4321);

  net::AggregatorConfig gcfg;
  net::apply_env_overrides(gcfg);
  CHECK(gcfg.reg_timeout_ms == 1234);
  CHECK(gcfg.initial_rto_ms == 77);

  setenv("DOPF_REG_TIMEOUT_MS", "not-a-number", 1);
  net::AgentConfig fallback;
  net::apply_env_overrides(fallback);
  CHECK(fallback.reg_timeout_ms == 30000);

  unsetenv("DOPF_REG_TIMEOUT_MS");
  unsetenv("DOPF_IDLE_TIMEOUT_MS");
  unsetenv("DOPF_RTO_MS");
  net::AgentConfig clean;
  net::apply_env_overrides(clean);
  CHECK(clean.reg_timeout_ms == 30000);
  CHECK(clean.idle_timeout_ms == 60000);
}

}  // TEST_SUITE
