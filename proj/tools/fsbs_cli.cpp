#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fsbs/core.hpp"
#include "fsbs/protocol.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fsbs;

namespace {

// Exit codes: 0 ok; 1 verification failure; 2 parameter/usage/format error;
// 3 backward update request; 4 restart limit exceeded; 5 protocol abort.
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBackward = 3;
constexpr int kExitRestartLimit = 4;
constexpr int kExitProtocol = 5;

struct ProfileInputs {
  std::uint32_t n, ell;
  Int q;
  std::uint32_t k, kappa;
};

ProfileInputs profile_inputs(const std::string& name) {
  if (name == "toy-T0") return {2, 2, 257, 16, 4};
  if (name == "toy-T1") return {4, 2, 12289, 32, 8};
  throw Error(Errc::ParamError, "unknown profile: " + name);
}

RandomSource make_rng(const std::string& seed_hex) {
  if (seed_hex.empty()) return RandomSource::from_os_entropy();
  return RandomSource(parse_seed_hex(seed_hex));
}

Bytes read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  std::string s = ss.str();
  return Bytes(s.begin(), s.end());
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os.write(data.data(), std::streamsize(data.size())))
    throw Error(Errc::IoError, "cannot write " + path);
}

PublicKey load_pk(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::IoError, "cannot open " + path);
  return read_public_key(is);
}

SecretKey load_sk(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::IoError, "cannot open " + path);
  return read_secret_key(is);
}

void store_sk(const std::string& path, const SecretKey& sk) {
  std::ostringstream os(std::ios::binary);
  write_secret_key(os, sk);
  write_file(path, os.str());
}

json params_report(const Params& p) {
  json j;
  j["params"] = json::parse("{}");
  std::istringstream lines(params_to_text(p));
  std::string line;
  while (std::getline(lines, line)) {
    auto eq = line.find('=');
    j["params"][line.substr(0, eq)] = line.substr(eq + 1);
  }
  j["violations"] = json::array();
  for (const Violation& v : validate(p))
    j["violations"].push_back({{"info", v.info}, {"text", v.text}});
  return j;
}

void print_report(const Params& p, bool as_json) {
  if (as_json) {
    std::cout << params_report(p).dump(2) << "\n";
    return;
  }
  std::cout << params_to_text(p);
  for (const Violation& v : validate(p))
    std::cout << (v.info ? "note: " : "VIOLATION: ") << v.text << "\n";
}

int cmd_keygen(const std::string& profile, const std::string& out_pk, const std::string& out_sk,
               const std::string& seed_hex, bool as_json) {
  ProfileInputs in = profile_inputs(profile);
  RandomSource rng = make_rng(seed_hex);
  SetupResult res = setup(in.n, in.ell, in.q, in.k, in.kappa, rng);
  {
    std::ostringstream os(std::ios::binary);
    write_public_key(os, res.pk);
    write_file(out_pk, os.str());
  }
  store_sk(out_sk, res.sk);
  double gs = res.params.sigma;  // sigma was finalized from the measured basis
  if (as_json) {
    json j = params_report(res.params);
    j["pk"] = out_pk;
    j["sk"] = out_sk;
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("measured trapdoor quality -> sigma=%.0f\n", gs);
    std::printf("sigma1=%.6g sigma2=%.6g sigma3=%.6g\n", res.params.sigma1, res.params.sigma2,
                res.params.sigma3);
    std::printf("wrote %s and %s\n", out_pk.c_str(), out_sk.c_str());
  }
  return 0;
}

int cmd_update(const std::string& pk_path, const std::string& sk_path, std::int64_t to) {
  PublicKey pk = load_pk(pk_path);
  SecretKey sk = load_sk(sk_path);
  std::uint32_t target = to < 0 ? sk.t + 1 : std::uint32_t(to);
  if (target <= sk.t) {
    std::cerr << "error: key is at period " << sk.t << "; cannot move backward to " << target
              << "\n";
    return kExitBackward;
  }
  while (sk.t < target) sk = key_update(pk, std::move(sk));
  store_sk(sk_path, sk);
  if (sk.empty())
    std::cout << "advanced to period " << sk.t << " (key exhausted: empty marker written)\n";
  else
    std::cout << "advanced to period " << sk.t << "\n";
  return 0;
}

int cmd_sign(const std::string& pk_path, const std::string& sk_path, std::int64_t t,
             const std::string& msg_path, const std::string& out_sig, const std::string& serve,
             const std::string& connect, const std::string& seed_hex, std::uint32_t sessions) {
  PublicKey pk = load_pk(pk_path);
  RandomSource rng = make_rng(seed_hex);
  if (!connect.empty()) {
    Bytes mu = read_file(msg_path);
    auto stream = tcp_connect(connect);
    UserOutcome out = run_user_session(*stream, pk, std::uint32_t(t), mu, rng);
    if (!out.ok) {
      std::cerr << "protocol failure: " << out.detail << "\n";
      return kExitProtocol;
    }
    write_file(out_sig, std::string(
        [&] { Bytes b = encode_signature(out.t, out.sig, pk.params); return std::string(b.begin(), b.end()); }()));
    std::cout << "signature written to " << out_sig << "\n";
    return 0;
  }
  SecretKey sk = load_sk(sk_path);
  std::uint32_t period = t < 0 ? sk.t : std::uint32_t(t);
  SignerContext ctx = make_signer_context(pk, sk, period);
  if (!serve.empty()) {
    TcpListener listener(serve);
    std::cout << "serving " << sessions << " session(s) on " << listener.local_addr() << "\n";
    auto outcomes = serve_sessions(listener, ctx, rng, sessions);
    int aborts = 0;
    for (const auto& o : outcomes)
      if (o.kind != SignerOutcome::Kind::Completed) {
        ++aborts;
        std::cerr << "session abort: " << o.detail << "\n";
      }
    return aborts ? kExitProtocol : 0;
  }
  Bytes mu = read_file(msg_path);
  SignResult res = sign_local(pk, sk, period, mu, rng);
  Bytes b = encode_signature(res.t, res.sig, pk.params);
  write_file(out_sig, std::string(b.begin(), b.end()));
  std::cout << "restarts: " << res.restarts << "\n";
  std::cout << "signature written to " << out_sig << "\n";
  return 0;
}

int cmd_verify(const std::string& pk_path, std::int64_t t, const std::string& msg_path,
               const std::string& sig_path) {
  PublicKey pk = load_pk(pk_path);
  Bytes mu = read_file(msg_path);
  auto [sig_t, sig] = decode_signature(read_file(sig_path), pk.params);
  std::uint32_t period = t < 0 ? sig_t : std::uint32_t(t);
  if (verify(pk, period, mu, sig)) {
    std::cout << "OK\n";
    return 0;
  }
  std::cout << "FAIL\n";
  return kExitVerifyFail;
}

int cmd_params(const std::string& profile, const std::vector<std::string>& sets, bool as_json) {
  if (!sets.empty()) {
    std::map<std::string, double> kv;
    for (const std::string& s : sets) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw Error(Errc::ParamError, "--set expects k=v, got " + s);
      kv[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
    }
    auto need = [&](const char* k) {
      auto it = kv.find(k);
      if (it == kv.end()) throw Error(Errc::ParamError, std::string("--set missing ") + k);
      return it->second;
    };
    Params p = derive(std::uint32_t(need("n")), std::uint32_t(need("ell")), Int(need("q")),
                      std::uint32_t(need("k")), std::uint32_t(need("kappa")), need("sigma"));
    // allow overriding any derived field to probe the validator
    auto text = params_to_text(p);
    for (const auto& [key, val] : kv) {
      if (key == "n" || key == "ell" || key == "q" || key == "k" || key == "kappa" ||
          key == "sigma")
        continue;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", val);
      auto pos = text.find(key + "=");
      if (pos == std::string::npos) throw Error(Errc::ParamError, "unknown key " + key);
      auto end = text.find('\n', pos);
      text = text.substr(0, pos) + key + "=" + buf + text.substr(end);
    }
    std::istringstream lines(text);
    std::map<std::string, std::string> raw;
    std::string line;
    while (std::getline(lines, line)) raw[line.substr(0, line.find('='))] = line.substr(line.find('=') + 1);
    Params probe = p;
    probe.sigma1 = std::stod(raw["sigma1"]);
    probe.sigma2 = std::stod(raw["sigma2"]);
    probe.sigma3 = std::stod(raw["sigma3"]);
    probe.gamma = std::stod(raw["gamma"]);
    probe.beta = std::stod(raw["beta"]);
    probe.m = std::uint32_t(std::stod(raw["m"]));
    print_report(probe, as_json);
    return 0;
  }
  print_report(preset(profile), as_json);
  return 0;
}

int cmd_vectors(const std::string& out_dir, const std::string& seed_hex) {
  if (seed_hex.empty()) throw Error(Errc::ParamError, "vectors requires --seed");
  fs::create_directories(out_dir);
  RandomSource rng = make_rng(seed_hex);
  ProfileInputs in = profile_inputs("toy-T0");
  SetupResult res = setup(in.n, in.ell, in.q, in.k, in.kappa, rng);
  {
    std::ostringstream os(std::ios::binary);
    write_public_key(os, res.pk);
    write_file(out_dir + "/pk.fspk", os.str());
  }
  write_file(out_dir + "/params.txt", params_to_text(res.params));
  SecretKey sk = std::move(res.sk);
  bool saw_restart = false;
  std::uint32_t sig_index = 0;
  for (std::uint32_t t = 0; t < res.params.tau; ++t) {
    store_sk(out_dir + "/sk_t" + std::to_string(t) + ".fssk", sk);
    Bytes mu;
    std::string label = "conformance vector message, period " + std::to_string(t);
    mu.assign(label.begin(), label.end());
    write_file(out_dir + "/msg_" + std::to_string(sig_index) + ".bin",
               std::string(label.begin(), label.end()));
    SignResult sres = sign_local(res.pk, sk, t, mu, rng);
    saw_restart = saw_restart || sres.restarts > 0;
    Bytes sb = encode_signature(sres.t, sres.sig, res.params);
    write_file(out_dir + "/sig_" + std::to_string(sig_index) + ".fssg",
               std::string(sb.begin(), sb.end()));
    ++sig_index;
    sk = key_update(res.pk, std::move(sk));
  }
  store_sk(out_dir + "/sk_t" + std::to_string(res.params.tau) + ".fssk", sk);
  // one full two-party transcript over the in-memory pipe
  {
    SecretKey sk0 = load_sk(out_dir + "/sk_t0.fssk");
    SignerContext ctx = make_signer_context(res.pk, sk0, 0);
    auto [a, b] = make_pipe();
    RandomSource srng = rng.fork("vec-signer"), urng = rng.fork("vec-user");
    SignerOutcome so;
    std::thread th([&] { so = run_signer_session(*a, ctx, srng); });
    Bytes mu{'t', 'r', 'a', 'n', 's', 'c', 'r', 'i', 'p', 't'};
    UserOutcome uo = run_user_session(*b, res.pk, 0, mu, urng);
    th.join();
    if (!uo.ok || so.kind != SignerOutcome::Kind::Completed)
      throw Error(Errc::InternalError, "vector transcript session failed");
    saw_restart = saw_restart || uo.transcript.size() > 6;
    std::string tr;
    for (const TranscriptEntry& en : uo.transcript) {
      tr.push_back(en.dir == Direction::Sent ? 'U' : 'S');
      Bytes fb = encode(en.msg);
      tr.append(fb.begin(), fb.end());
    }
    write_file(out_dir + "/transcript_t0.bin", tr);
  }
  if (!saw_restart)
    std::cerr << "note: no restart occurred in this vector set; try another seed\n";
  std::cout << "vectors written to " << out_dir << "\n";
  return 0;
}

int cmd_inspect(const std::string& path, bool as_json) {
  Bytes data = read_file(path);
  if (data.size() < 4) throw Error(Errc::DecodeError, "file too short");
  std::string magic(data.begin(), data.begin() + 4);
  json j;
  j["file"] = path;
  j["magic"] = magic;
  j["size"] = data.size();
  if (magic == "FSPK") {
    PublicKey pk = load_pk(path);
    j["kind"] = "public key";
    j["n"] = pk.params.n;
    j["m"] = pk.params.m;
    j["q"] = pk.params.q;
    j["ell"] = pk.params.ell;
    j["blocks"] = 1 + pk.Ab.size();
  } else if (magic == "FSSK") {
    SecretKey sk = load_sk(path);
    j["kind"] = "secret key";
    j["t"] = sk.t;
    j["depth"] = sk.depth;
    j["empty"] = sk.empty();
    auto nodes = json::array();
    for (const auto& [id, key] : sk.nodes) nodes.push_back(id.to_string());
    j["nodes"] = nodes;
  } else if (magic == "FSSG") {
    j["kind"] = "signature";
    std::uint32_t t = 0;
    if (data.size() >= 9)
      for (int i = 0; i < 4; ++i) t |= std::uint32_t(data[5 + i]) << (8 * i);
    j["t"] = t;
  } else {
    j["kind"] = "unknown";
  }
  if (as_json) {
    std::cout << j.dump(2) << "\n";
  } else {
    for (auto& [k, v] : j.items()) std::cout << k << ": " << v.dump() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forward-secure blind signatures over q-ary lattices"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string seed_hex, profile = "toy-T0";
  bool as_json = false;
  app.add_option("--seed", seed_hex, "hex-encoded 32-byte seed; implies a deterministic run");
  app.add_option("--profile", profile, "parameter profile (toy-T0, toy-T1)");
  app.add_flag("--json", as_json, "machine-readable output");

  std::string pk_path, sk_path, msg_path, sig_path, out_dir, serve, connect, inspect_path;
  std::int64_t t = -1, to = -1;
  std::uint32_t sessions = 1;
  std::vector<std::string> sets;

  auto* keygen = app.add_subcommand("keygen", "generate a key pair");
  keygen->add_option("--pk", pk_path, "public key output")->required();
  keygen->add_option("--sk", sk_path, "secret key output")->required();

  auto* update = app.add_subcommand("update", "advance the secret key period");
  update->add_option("--pk", pk_path, "public key file")->required();
  update->add_option("--sk", sk_path, "secret key file (rewritten)")->required();
  update->add_option("--to", to, "target period (default: current + 1)");

  auto* sign = app.add_subcommand("sign", "sign a message (local, serve, or connect mode)");
  sign->add_option("--pk", pk_path, "public key file")->required();
  sign->add_option("--sk", sk_path, "secret key file (signer side)");
  sign->add_option("--t", t, "time period (default: key's period / signature's period)");
  sign->add_option("--msg", msg_path, "message file");
  sign->add_option("--out", sig_path, "signature output");
  sign->add_option("--serve", serve, "run the signer endpoint on host:port");
  sign->add_option("--connect", connect, "run the user endpoint against host:port");
  sign->add_option("--sessions", sessions, "sessions to serve before exiting");

  auto* verify_cmd = app.add_subcommand("verify", "verify a signature");
  verify_cmd->add_option("--pk", pk_path, "public key file")->required();
  verify_cmd->add_option("--t", t, "time period (default: from the signature file)");
  verify_cmd->add_option("--msg", msg_path, "message file")->required();
  verify_cmd->add_option("--sig", sig_path, "signature file")->required();

  auto* params_cmd = app.add_subcommand("params", "derive and validate parameters");
  params_cmd->add_option("--set", sets, "explicit k=v assignments (n, ell, q, k, kappa, sigma, ...)");

  auto* vectors = app.add_subcommand("vectors", "emit deterministic conformance vectors");
  vectors->add_option("--out", out_dir, "output directory")->required();

  auto* inspect = app.add_subcommand("inspect", "describe a key/signature file");
  inspect->add_option("file", inspect_path, "file to inspect")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (keygen->parsed()) return cmd_keygen(profile, pk_path, sk_path, seed_hex, as_json);
    if (update->parsed()) return cmd_update(pk_path, sk_path, to);
    if (sign->parsed())
      return cmd_sign(pk_path, sk_path, t, msg_path, sig_path, serve, connect, seed_hex, sessions);
    if (verify_cmd->parsed()) return cmd_verify(pk_path, t, msg_path, sig_path);
    if (params_cmd->parsed()) return cmd_params(profile, sets, as_json);
    if (vectors->parsed()) return cmd_vectors(out_dir, seed_hex);
    if (inspect->parsed()) return cmd_inspect(inspect_path, as_json);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case Errc::RestartLimitExceeded:
        return kExitRestartLimit;
      case Errc::ProtocolViolation:
        return kExitProtocol;
      default:
        return kExitUsage;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
