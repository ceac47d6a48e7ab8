#include "fsbs/params.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "fsbs/matrix.hpp"
#include "fsbs/trapdoor.hpp"

namespace fsbs {

double log2_binomial(std::uint32_t k, std::uint32_t kappa) {
  return (std::lgamma(double(k) + 1) - std::lgamma(double(kappa) + 1) -
          std::lgamma(double(k - kappa) + 1)) /
         std::log(2.0);
}

namespace {

double mdim(const Params& p) { return double(1 + p.ell) * p.m; }

void derive_chain(Params& p) {
  p.tau = 1u << p.ell;
  p.sigma1 = 12.0 * std::sqrt(double(p.kappa));
  p.sigma2 = 12.0 * p.sigma * p.sigma1 * std::sqrt(mdim(p) * p.k);
  p.sigma3 = 12.0 * p.sigma2 * std::sqrt(mdim(p));
  p.M1 = p.M2 = p.M3 = std::exp(1.0 + 1.0 / 288.0);
  double b1 = (2 * p.sigma3 + 2 * p.sigma * std::sqrt(double(p.kappa))) * std::sqrt(mdim(p));
  double b2 = (2 * p.sigma3 + p.sigma2) * std::sqrt(mdim(p));
  p.beta = std::max(b1, b2);
  p.gamma = std::floor(double(p.kappa) + log2_binomial(p.k, p.kappa));
}

std::string fmt(const char* name, double lhs, double rhs, const char* rel) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s: %.6g %s %.6g fails", name, lhs, rel, rhs);
  return buf;
}

}  // namespace

std::vector<Violation> validate(const Params& p) {
  std::vector<Violation> out;
  auto bad = [&](const std::string& s) { out.push_back({false, s}); };
  if (p.n == 0 || p.ell >= 32 || p.k == 0 || p.m == 0) {
    bad("dimensions must be positive (n, m, k) with tree depth < 32");
    return out;
  }
  if (!(p.q > 1 && is_prime_u64(std::uint64_t(p.q)))) bad("q must be prime, got " + std::to_string(p.q));
  if (p.tau != (1u << p.ell))
    bad("tau == 2^ell: " + std::to_string(p.tau) + " != " + std::to_string(1u << p.ell));
  double log2q = std::log2(double(p.q));
  std::uint32_t mmin = trap_gen_min_m(p.n, p.q);
  if (p.m < mmin)
    bad(fmt("m >= 6*n*round(log2 q) (gadget-rounded)", p.m, mmin, ">="));
  if (double(p.m) < 2.0 * p.n * log2q) bad(fmt("m >= 2*n*log2 q", p.m, 2.0 * p.n * log2q, ">="));
  double d = p.sigma * std::sqrt(mdim(p));
  double rhs7 = 64.0 + p.n * log2q / std::log2(2 * d + 1);
  if (!(mdim(p) > rhs7)) bad(fmt("(1+ell)*m > 64 + n*log2 q/log2(2d+1)", mdim(p), rhs7, ">"));
  if (p.kappa > p.k) bad("kappa <= k fails");
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
  if (!near(p.sigma1, 12.0 * std::sqrt(double(p.kappa))))
    bad(fmt("sigma1 == 12*sqrt(kappa)", p.sigma1, 12.0 * std::sqrt(double(p.kappa)), "=="));
  if (!near(p.sigma2, 12.0 * p.sigma * p.sigma1 * std::sqrt(mdim(p) * p.k)))
    bad(fmt("sigma2 == 12*sigma*sigma1*sqrt((1+ell)*m*k)", p.sigma2,
            12.0 * p.sigma * p.sigma1 * std::sqrt(mdim(p) * p.k), "=="));
  if (!near(p.sigma3, 12.0 * p.sigma2 * std::sqrt(mdim(p))))
    bad(fmt("sigma3 == 12*sigma2*sqrt((1+ell)*m)", p.sigma3, 12.0 * p.sigma2 * std::sqrt(mdim(p)),
            "=="));
  double M = std::exp(1.0 + 1.0 / 288.0);
  if (!near(p.M1, M) || !near(p.M2, M) || !near(p.M3, M))
    bad("M1 == M2 == M3 == e^(1+1/288) fails");
  double ball_bits = double(p.kappa) + log2_binomial(p.k, p.kappa);
  if (!(ball_bits >= p.gamma))
    bad(fmt("2^kappa * C(k,kappa) >= 2^gamma, in bits", ball_bits, p.gamma, ">="));
  double bexp = std::max(
      (2 * p.sigma3 + 2 * p.sigma * std::sqrt(double(p.kappa))) * std::sqrt(mdim(p)),
      (2 * p.sigma3 + p.sigma2) * std::sqrt(mdim(p)));
  if (!near(p.beta, bexp)) bad(fmt("beta == max-branch formula", p.beta, bexp, "=="));
  // Concrete-hardness scale note: never a hard failure at desk scale.
  double hardness = p.beta * std::sqrt(p.n * std::log2(double(std::max<std::uint32_t>(p.n, 2))));
  if (double(p.q) < hardness)
    out.push_back({true, fmt("INFO: q >= beta*omega(sqrt(n log n)) (hardness scale)",
                             double(p.q), hardness, ">=")});
  return out;
}

Params derive(std::uint32_t n, std::uint32_t ell, std::int64_t q, std::uint32_t k,
              std::uint32_t kappa, double sigma) {
  if (!(q > 1 && is_prime_u64(std::uint64_t(q)))) throw Error(Errc::ParamError, "q must be prime");
  if (kappa > k || n == 0 || ell >= 32) throw Error(Errc::ParamError, "bad dimension inputs");
  Params p;
  p.n = n;
  p.ell = ell;
  p.q = q;
  p.k = k;
  p.kappa = kappa;
  p.sigma = sigma;
  p.m = trap_gen_min_m(n, q);  // smallest gadget-conforming width
  while (double(p.m) < 2.0 * n * std::log2(double(q))) p.m += n;
  derive_chain(p);
  for (const Violation& v : validate(p))
    if (!v.info) throw Error(Errc::ParamError, "underivable parameters: " + v.text);
  return p;
}

Params preset(const std::string& name) {
  if (name == "toy-T0") return derive(2, 2, 257, 16, 4, 25);
  if (name == "toy-T1") return derive(4, 2, 12289, 32, 8, 40);
  throw Error(Errc::ParamError, "unknown profile: " + name);
}

std::vector<std::string> preset_names() { return {"toy-T0", "toy-T1"}; }

std::string params_to_text(const Params& p) {
  std::map<std::string, std::string> kv;
  auto put_u = [&](const char* k, std::uint64_t v) { kv[k] = std::to_string(v); };
  auto put_d = [&](const char* k, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    kv[k] = buf;
  };
  put_u("ell", p.ell);
  put_u("k", p.k);
  put_u("kappa", p.kappa);
  put_u("m", p.m);
  put_u("n", p.n);
  put_u("q", std::uint64_t(p.q));
  put_u("tau", p.tau);
  put_d("M1", p.M1);
  put_d("M2", p.M2);
  put_d("M3", p.M3);
  put_d("beta", p.beta);
  put_d("gamma", p.gamma);
  put_d("sigma", p.sigma);
  put_d("sigma1", p.sigma1);
  put_d("sigma2", p.sigma2);
  put_d("sigma3", p.sigma3);
  std::string out;
  for (const auto& [key, val] : kv) out += key + "=" + val + "\n";
  return out;
}

Params params_from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::DecodeError, "bad params line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw Error(Errc::DecodeError, std::string("missing params key: ") + k);
    return it->second;
  };
  Params p;
  p.n = std::uint32_t(std::stoul(get("n")));
  p.ell = std::uint32_t(std::stoul(get("ell")));
  p.tau = std::uint32_t(std::stoul(get("tau")));
  p.q = std::stoll(get("q"));
  p.m = std::uint32_t(std::stoul(get("m")));
  p.k = std::uint32_t(std::stoul(get("k")));
  p.kappa = std::uint32_t(std::stoul(get("kappa")));
  p.sigma = std::stod(get("sigma"));
  p.sigma1 = std::stod(get("sigma1"));
  p.sigma2 = std::stod(get("sigma2"));
  p.sigma3 = std::stod(get("sigma3"));
  p.M1 = std::stod(get("M1"));
  p.M2 = std::stod(get("M2"));
  p.M3 = std::stod(get("M3"));
  p.gamma = std::stod(get("gamma"));
  p.beta = std::stod(get("beta"));
  for (const Violation& v : validate(p))
    if (!v.info) throw Error(Errc::DecodeError, "inconsistent params file: " + v.text);
  return p;
}

void write_params(std::ostream& os, const Params& p) {
  std::string t = params_to_text(p);
  std::uint32_t len = std::uint32_t(t.size());
  for (int i = 0; i < 4; ++i) os.put(char(std::uint8_t(len >> (8 * i))));
  os.write(t.data(), std::streamsize(t.size()));
}

Params read_params(std::istream& is) {
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) {
    int ch = is.get();
    if (ch < 0) throw Error(Errc::DecodeError, "truncated params block");
    len |= std::uint32_t(std::uint8_t(ch)) << (8 * i);
  }
  if (len > (1u << 16)) throw Error(Errc::DecodeError, "params block oversize");
  std::string t(len, '\0');
  if (!is.read(t.data(), len)) throw Error(Errc::DecodeError, "truncated params block");
  return params_from_text(t);
}

}  // namespace fsbs
