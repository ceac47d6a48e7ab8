#include "fsbs/protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <thread>

namespace fsbs {

namespace {

// One direction of the in-memory pipe.
struct PipeChannel {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> data;
  bool closed = false;

  void push(const Bytes& b) {
    std::lock_guard lk(mu);
    if (closed) throw Error(Errc::IoError, "pipe closed");
    data.insert(data.end(), b.begin(), b.end());
    cv.notify_all();
  }

  std::size_t pull(std::uint8_t* out, std::size_t max) {
    std::unique_lock lk(mu);
    cv.wait(lk, [&] { return !data.empty() || closed; });
    std::size_t n = std::min(max, data.size());
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = data.front();
      data.pop_front();
    }
    return n;
  }

  void shut() {
    std::lock_guard lk(mu);
    closed = true;
    cv.notify_all();
  }
};

class PipeEnd : public ByteStream {
 public:
  PipeEnd(std::shared_ptr<PipeChannel> out, std::shared_ptr<PipeChannel> in)
      : out_(std::move(out)), in_(std::move(in)) {}
  ~PipeEnd() override { close(); }

  void send(const Bytes& data) override { out_->push(data); }
  std::size_t recv(std::uint8_t* out, std::size_t max) override { return in_->pull(out, max); }
  void close() override {
    out_->shut();
    in_->shut();
  }

 private:
  std::shared_ptr<PipeChannel> out_, in_;
};

class TcpStream : public ByteStream {
 public:
  explicit TcpStream(int fd) : fd_(fd) {}
  ~TcpStream() override { close(); }

  void send(const Bytes& data) override {
    std::size_t off = 0;
    while (off < data.size()) {
      ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n <= 0) throw Error(Errc::IoError, "socket send failed");
      off += std::size_t(n);
    }
  }

  std::size_t recv(std::uint8_t* out, std::size_t max) override {
    for (;;) {
      ssize_t n = ::recv(fd_, out, max, 0);
      if (n >= 0) return std::size_t(n);
      if (errno != EINTR) throw Error(Errc::IoError, "socket recv failed");
    }
  }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_;
};

std::pair<std::string, std::uint16_t> split_addr(const std::string& addr) {
  auto pos = addr.rfind(':');
  if (pos == std::string::npos) throw Error(Errc::ParamError, "address must be host:port");
  return {addr.substr(0, pos), std::uint16_t(std::stoul(addr.substr(pos + 1)))};
}

}  // namespace

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_pipe() {
  auto ab = std::make_shared<PipeChannel>();
  auto ba = std::make_shared<PipeChannel>();
  return {std::make_unique<PipeEnd>(ab, ba), std::make_unique<PipeEnd>(ba, ab)};
}

TcpListener::TcpListener(const std::string& addr) {
  auto [host, port] = split_addr(addr);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(Errc::IoError, "socket() failed");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (::inet_pton(AF_INET, host == "localhost" ? "127.0.0.1" : host.c_str(), &sa.sin_addr) != 1)
    throw Error(Errc::ParamError, "bad listen host: " + host);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 || ::listen(fd_, 64) != 0)
    throw Error(Errc::IoError, "bind/listen failed on " + addr);
  socklen_t len = sizeof sa;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  char buf[64];
  ::inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof buf);
  addr_ = std::string(buf) + ":" + std::to_string(ntohs(sa.sin_port));
}

TcpListener::~TcpListener() { close(); }

std::string TcpListener::local_addr() const { return addr_; }

std::unique_ptr<ByteStream> TcpListener::accept() {
  int cfd = ::accept(fd_, nullptr, nullptr);
  if (cfd < 0) throw Error(Errc::IoError, "accept failed");
  return std::make_unique<TcpStream>(cfd);
}

void TcpListener::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::unique_ptr<ByteStream> tcp_connect(const std::string& addr) {
  auto [host, port] = split_addr(addr);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(Errc::IoError, "socket() failed");
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (::inet_pton(AF_INET, host == "localhost" ? "127.0.0.1" : host.c_str(), &sa.sin_addr) != 1) {
    ::close(fd);
    throw Error(Errc::ParamError, "bad connect host: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    ::close(fd);
    throw Error(Errc::IoError, "connect failed: " + addr);
  }
  return std::make_unique<TcpStream>(fd);
}

void send_message(ByteStream& s, const WireMessage& msg) { s.send(encode(msg)); }

std::optional<WireMessage> recv_message(ByteStream& s) {
  std::uint8_t header[5];
  std::size_t got = 0;
  while (got < 5) {
    std::size_t n = s.recv(header + got, 5 - got);
    if (n == 0) {
      if (got == 0) return std::nullopt;
      throw Error(Errc::DecodeError, "truncated: EOF inside frame header");
    }
    got += n;
  }
  if (!is_valid_kind(header[0])) throw Error(Errc::DecodeError, "bad-kind: unknown message kind");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= std::uint32_t(header[1 + i]) << (8 * i);
  if (len > kMaxFrame) throw Error(Errc::DecodeError, "oversize: declared length too large");
  WireMessage msg;
  msg.kind = MsgKind(header[0]);
  msg.payload.resize(len);
  std::size_t off = 0;
  while (off < len) {
    std::size_t n = s.recv(msg.payload.data() + off, len - off);
    if (n == 0) throw Error(Errc::DecodeError, "truncated: EOF inside payload");
    off += n;
  }
  return msg;
}

bool transcript_grammar_ok(const SessionTranscript& tr) {
  // States over message kinds only; direction alternation is implied.
  enum State { Start, AfterHello, AfterX, AfterE, AfterZ, AfterRestartReq, Terminal };
  State st = Start;
  for (const TranscriptEntry& en : tr) {
    MsgKind k = en.msg.kind;
    if (st == Terminal) return false;
    if (k == MsgKind::Abort) {
      st = Terminal;
      continue;
    }
    switch (st) {
      case Start:
        if (k != MsgKind::Hello) return false;
        st = AfterHello;
        break;
      case AfterHello:
        if (k != MsgKind::X) return false;
        st = AfterX;
        break;
      case AfterX:
        if (k != MsgKind::E) return false;
        st = AfterE;
        break;
      case AfterE:
        if (k == MsgKind::Z) st = AfterZ;
        else if (k == MsgKind::RestartX) st = AfterX;  // phase-3 rejection
        else return false;
        break;
      case AfterZ:
        if (k == MsgKind::ResultAccept) st = Terminal;
        else if (k == MsgKind::ResultRestart) st = AfterRestartReq;
        else return false;
        break;
      case AfterRestartReq:
        if (k != MsgKind::RestartX) return false;
        st = AfterX;
        break;
      default:
        return false;
    }
  }
  return st == Terminal;
}

namespace {

struct Recorder {
  ByteStream& s;
  SessionTranscript& tr;

  void send(const WireMessage& m) {
    send_message(s, m);
    tr.push_back({Direction::Sent, m, std::chrono::steady_clock::now()});
  }

  std::optional<WireMessage> recv() {
    auto m = recv_message(s);
    if (m) tr.push_back({Direction::Received, *m, std::chrono::steady_clock::now()});
    return m;
  }
};

WireMessage abort_msg(const std::string& why) {
  return WireMessage{MsgKind::Abort, Bytes(why.begin(), why.end())};
}

}  // namespace

SignerOutcome run_signer_session(ByteStream& stream, const SignerContext& ctx, RandomSource& rng) {
  SignerOutcome out{SignerOutcome::Kind::ProtocolAbort, {}, "", {}};
  Recorder io{stream, out.transcript};
  const Params& p = ctx.pk->params;
  try {
    auto hello = io.recv();
    if (!hello || hello->kind != MsgKind::Hello) throw Error(Errc::ProtocolViolation, "expected HELLO");
    if (decode_hello(hello->payload) != ctx.t)
      throw Error(Errc::TimeMismatch, "client period mismatch");
    SignerSession s = signer_phase1(ctx, rng);
    io.send({MsgKind::X, encode_vector(s.x)});
    for (;;) {
      auto msg = io.recv();
      if (!msg || msg->kind != MsgKind::E) throw Error(Errc::ProtocolViolation, "expected E");
      IntVector e = decode_vector(msg->payload, p.k);
      std::optional<IntVector> z = signer_phase3(ctx, s, e, rng);
      if (!z) {
        io.send({MsgKind::RestartX, encode_vector(s.x)});
        continue;
      }
      io.send({MsgKind::Z, encode_vector(*z)});
      auto result = io.recv();
      if (!result) throw Error(Errc::ProtocolViolation, "expected RESULT");
      if (result->kind == MsgKind::ResultAccept) {
        Phase5Result r5 = signer_phase5(ctx, s, nullptr);
        out.kind = SignerOutcome::Kind::Completed;
        out.view = std::move(r5.view);
        return out;
      }
      if (result->kind != MsgKind::ResultRestart)
        throw Error(Errc::ProtocolViolation, "unexpected message kind");
      RestartPayload rp = decode_restart_payload(result->payload, p);
      Phase5Result r5 = signer_phase5(ctx, s, &rp);
      if (r5.kind == Phase5Kind::AbortAdversary) {
        io.send(abort_msg("restart payload failed verification"));
        out.kind = SignerOutcome::Kind::AbortAdversary;
        out.detail = "restart payload failed verification";
        return out;
      }
      signer_restart(ctx, s, rng);
      io.send({MsgKind::RestartX, encode_vector(s.x)});
    }
  } catch (const Error& e) {
    out.detail = e.what();
    try {
      io.send(abort_msg(e.what()));
    } catch (...) {
    }
    return out;
  }
}

UserOutcome run_user_session(ByteStream& stream, const PublicKey& pk, std::uint32_t t,
                             const Bytes& mu, RandomSource& rng) {
  UserOutcome out;
  out.t = t;
  Recorder io{stream, out.transcript};
  try {
    io.send({MsgKind::Hello, encode_hello(t)});
    auto xmsg = io.recv();
    if (xmsg && xmsg->kind == MsgKind::Abort)
      throw Error(Errc::ProtocolViolation,
                  "signer abort: " + std::string(xmsg->payload.begin(), xmsg->payload.end()));
    if (!xmsg || xmsg->kind != MsgKind::X) throw Error(Errc::ProtocolViolation, "expected X");
    IntVector x = decode_vector(xmsg->payload, pk.params.n);
    UserSession s = user_phase2(pk, t, mu, x, rng);
    io.send({MsgKind::E, encode_vector(s.e)});
    for (;;) {
      auto msg = io.recv();
      if (!msg) throw Error(Errc::ProtocolViolation, "connection closed mid-session");
      if (msg->kind == MsgKind::Abort)
        throw Error(Errc::ProtocolViolation,
                    "signer abort: " + std::string(msg->payload.begin(), msg->payload.end()));
      if (msg->kind == MsgKind::RestartX) {
        s.phase = UserPhase::AwaitX;
        user_restart(pk, s, decode_vector(msg->payload, pk.params.n), rng);
        io.send({MsgKind::E, encode_vector(s.e)});
        continue;
      }
      if (msg->kind != MsgKind::Z) throw Error(Errc::ProtocolViolation, "unexpected message kind");
      IntVector z = decode_vector(msg->payload, pk.params.total_m());
      Phase4Result r4 = user_phase4(pk, s, z, rng);
      if (r4.accepted) {
        io.send({MsgKind::ResultAccept, {}});
        out.ok = true;
        out.sig = std::move(r4.sig);
        return out;
      }
      io.send({MsgKind::ResultRestart, encode_restart_payload(r4.restart, pk.params)});
    }
  } catch (const Error& e) {
    out.detail = e.what();
    return out;
  }
}

std::vector<SignerOutcome> serve_sessions(TcpListener& listener, const SignerContext& ctx,
                                          RandomSource& rng, std::uint32_t sessions) {
  std::vector<SignerOutcome> outcomes(sessions);
  std::vector<RandomSource> rngs;
  rngs.reserve(sessions);
  for (std::uint32_t i = 0; i < sessions; ++i) rngs.push_back(rng.fork("session-" + std::to_string(i)));
  std::vector<std::thread> threads;
  for (std::uint32_t i = 0; i < sessions; ++i) {
    auto stream = listener.accept();
    threads.emplace_back(
        [&outcomes, &ctx, i, &rngs](std::unique_ptr<ByteStream> st) {
          outcomes[i] = run_signer_session(*st, ctx, rngs[i]);
        },
        std::move(stream));
  }
  for (auto& th : threads) th.join();
  return outcomes;
}

}  // namespace fsbs
