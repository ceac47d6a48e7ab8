#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <thread>

#include "doctest.h"
#include "fsbs/protocol.hpp"

using namespace fsbs;

namespace {

RandomSource test_rng(std::uint8_t tag) {
  Seed s{};
  s[0] = tag;
  s[1] = 0x9d;
  return RandomSource(s);
}

struct Fixture {
  SetupResult sr;
  SignerContext ctx;

  Fixture() {
    RandomSource rng = test_rng(0xf0);
    sr = setup(2, 2, 257, 16, 4, rng);
    ctx = make_signer_context(sr.pk, sr.sk, 0);
  }
};

Fixture& fix() {
  static Fixture f;
  return f;
}

}  // namespace

TEST_CASE("pipe carries framed messages both ways") {
  auto [a, b] = make_pipe();
  send_message(*a, {MsgKind::E, {1, 2, 3}});
  auto m = recv_message(*b);
  REQUIRE(m.has_value());
  CHECK(m->kind == MsgKind::E);
  CHECK(m->payload == Bytes{1, 2, 3});
  send_message(*b, {MsgKind::Abort, {}});
  CHECK(recv_message(*a)->kind == MsgKind::Abort);
  a->close();
  CHECK_FALSE(recv_message(*b).has_value());  // clean EOF
}

TEST_CASE("honest pipe session yields a verifying signature and legal transcript") {
  Fixture& f = fix();
  auto [su, us] = make_pipe();
  RandomSource srng = test_rng(1), urng = test_rng(2);
  UserOutcome uo;
  std::thread user([&] { uo = run_user_session(*us, f.sr.pk, 0, Bytes{'p', 'q'}, urng); });
  SignerOutcome so = run_signer_session(*su, f.ctx, srng);
  user.join();

  CHECK(so.kind == SignerOutcome::Kind::Completed);
  REQUIRE(uo.ok);
  CHECK(uo.t == 0);
  CHECK(verify(f.sr.pk, 0, Bytes{'p', 'q'}, uo.sig));
  CHECK(transcript_grammar_ok(so.transcript));
  CHECK(transcript_grammar_ok(uo.transcript));
  CHECK(so.transcript.front().msg.kind == MsgKind::Hello);
  CHECK(so.transcript.back().msg.kind == MsgKind::ResultAccept);
  CHECK(so.view.e.size() == f.sr.params.k);
}

TEST_CASE("signer aborts on a tampered restart request") {
  Fixture& f = fix();
  auto [su, us] = make_pipe();
  RandomSource srng = test_rng(3), urng = test_rng(4);
  SignerOutcome so;
  std::thread signer([&] { so = run_signer_session(*su, f.ctx, srng); });

  // cheating user: run an honest front half, then forge the restart evidence
  send_message(*us, {MsgKind::Hello, encode_hello(0)});
  auto xm = recv_message(*us);
  REQUIRE(xm.has_value());
  IntVector x = decode_vector(xm->payload, f.sr.params.n);
  UserSession session = user_phase2(f.sr.pk, 0, Bytes{'m'}, x, urng);
  send_message(*us, {MsgKind::E, encode_vector(session.e)});
  auto zm = recv_message(*us);
  REQUIRE(zm.has_value());
  while (zm->kind == MsgKind::RestartX) {
    user_restart(f.sr.pk, session, decode_vector(zm->payload, f.sr.params.n), urng);
    send_message(*us, {MsgKind::E, encode_vector(session.e)});
    zm = recv_message(*us);
    REQUIRE(zm.has_value());
  }
  REQUIRE(zm->kind == MsgKind::Z);
  RestartPayload forged{session.a, session.b, session.eprime, session.c};
  forged.b[0] += 2;
  send_message(*us, {MsgKind::ResultRestart, encode_restart_payload(forged, f.sr.params)});
  auto reply = recv_message(*us);
  signer.join();

  REQUIRE(reply.has_value());
  CHECK(reply->kind == MsgKind::Abort);
  CHECK(so.kind == SignerOutcome::Kind::AbortAdversary);
  CHECK(transcript_grammar_ok(so.transcript));
}

TEST_CASE("signer survives garbage frames with a structured abort") {
  Fixture& f = fix();
  auto [su, us] = make_pipe();
  RandomSource srng = test_rng(5);
  SignerOutcome so;
  std::thread signer([&] { so = run_signer_session(*su, f.ctx, srng); });
  send_message(*us, {MsgKind::Hello, encode_hello(0)});
  recv_message(*us);                                    // X
  send_message(*us, {MsgKind::E, {0xff, 0xfe, 0x01}});  // undecodable challenge
  auto reply = recv_message(*us);
  signer.join();
  REQUIRE(reply.has_value());
  CHECK(reply->kind == MsgKind::Abort);
  CHECK(so.kind == SignerOutcome::Kind::ProtocolAbort);
}

TEST_CASE("signer rejects a wrong-period hello") {
  Fixture& f = fix();
  auto [su, us] = make_pipe();
  RandomSource srng = test_rng(6);
  SignerOutcome so;
  std::thread signer([&] { so = run_signer_session(*su, f.ctx, srng); });
  send_message(*us, {MsgKind::Hello, encode_hello(3)});  // context is for t=0
  auto reply = recv_message(*us);
  signer.join();
  REQUIRE(reply.has_value());
  CHECK(reply->kind == MsgKind::Abort);
  CHECK(so.kind == SignerOutcome::Kind::ProtocolAbort);
}

TEST_CASE("concurrent TCP sessions all complete") {
  Fixture& f = fix();
  TcpListener listener("127.0.0.1:0");
  const std::uint32_t N = 8;
  RandomSource srng = test_rng(7);
  std::vector<SignerOutcome> outcomes;
  std::thread server([&] { outcomes = serve_sessions(listener, f.ctx, srng, N); });

  std::vector<UserOutcome> uo(N);
  std::vector<std::thread> users;
  for (std::uint32_t i = 0; i < N; ++i)
    users.emplace_back([&, i] {
      RandomSource urng = test_rng(std::uint8_t(0x40 + i));
      auto conn = tcp_connect(listener.local_addr());
      uo[i] = run_user_session(*conn, f.sr.pk, 0, Bytes{'c', std::uint8_t(i)}, urng);
    });
  for (auto& th : users) th.join();
  server.join();

  REQUIRE(outcomes.size() == N);
  for (std::uint32_t i = 0; i < N; ++i) {
    CHECK(uo[i].ok);
    CHECK(verify(f.sr.pk, 0, Bytes{'c', std::uint8_t(i)}, uo[i].sig));
    CHECK(transcript_grammar_ok(uo[i].transcript));
  }
  int completed = 0;
  for (const auto& o : outcomes) completed += o.kind == SignerOutcome::Kind::Completed;
  CHECK(completed == int(N));
}

TEST_CASE("pipe run matches a seed-mirrored local run byte for byte") {
  Fixture& f = fix();
  Bytes mu{'m', 'i', 'r'};

  RandomSource srng1 = test_rng(8), urng1 = test_rng(9);
  auto [su, us] = make_pipe();
  UserOutcome uo;
  std::thread user([&] { uo = run_user_session(*us, f.sr.pk, 0, mu, urng1); });
  SignerOutcome so = run_signer_session(*su, f.ctx, srng1);
  user.join();
  REQUIRE(uo.ok);
  REQUIRE(so.kind == SignerOutcome::Kind::Completed);

  // drive the same phases locally with identically seeded sources
  RandomSource srng2 = test_rng(8), urng2 = test_rng(9);
  SignerSession ss = signer_phase1(f.ctx, srng2);
  UserSession uss = user_phase2(f.sr.pk, 0, mu, ss.x, urng2);
  Phase4Result p4;
  for (;;) {
    std::optional<IntVector> z = signer_phase3(f.ctx, ss, uss.e, srng2);
    if (!z) {
      user_restart(f.sr.pk, uss, ss.x, urng2);
      continue;
    }
    p4 = user_phase4(f.sr.pk, uss, *z, urng2);
    if (p4.accepted) break;
    Phase5Result p5 = signer_phase5(f.ctx, ss, &p4.restart);
    REQUIRE(p5.kind == Phase5Kind::Restart);
    signer_restart(f.ctx, ss, srng2);
    user_restart(f.sr.pk, uss, ss.x, urng2);
  }

  CHECK(encode_signature(0, p4.sig, f.sr.params) == encode_signature(0, uo.sig, f.sr.params));
}

TEST_CASE("transcript grammar rejects out-of-order sessions") {
  auto at = std::chrono::steady_clock::now();
  auto entry = [&](MsgKind k) { return TranscriptEntry{Direction::Received, {k, {}}, at}; };
  SessionTranscript good{entry(MsgKind::Hello), entry(MsgKind::X), entry(MsgKind::E),
                         entry(MsgKind::Z), entry(MsgKind::ResultAccept)};
  CHECK(transcript_grammar_ok(good));
  SessionTranscript aborted{entry(MsgKind::Hello), entry(MsgKind::X), entry(MsgKind::Abort)};
  CHECK(transcript_grammar_ok(aborted));
  SessionTranscript restart{entry(MsgKind::Hello),        entry(MsgKind::X),
                            entry(MsgKind::E),            entry(MsgKind::Z),
                            entry(MsgKind::ResultRestart), entry(MsgKind::RestartX),
                            entry(MsgKind::E),            entry(MsgKind::Z),
                            entry(MsgKind::ResultAccept)};
  CHECK(transcript_grammar_ok(restart));

  CHECK_FALSE(transcript_grammar_ok({entry(MsgKind::X)}));
  CHECK_FALSE(transcript_grammar_ok({entry(MsgKind::Hello), entry(MsgKind::E)}));
  CHECK_FALSE(transcript_grammar_ok(
      {entry(MsgKind::Hello), entry(MsgKind::X), entry(MsgKind::Z)}));
  SessionTranscript unfinished{entry(MsgKind::Hello), entry(MsgKind::X), entry(MsgKind::E)};
  CHECK_FALSE(transcript_grammar_ok(unfinished));
}
