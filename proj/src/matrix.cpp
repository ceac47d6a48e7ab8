#include "fsbs/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

namespace fsbs {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NoSolutionOrRankDeficient: return "NoSolutionOrRankDeficient";
    case Errc::DegenerateBasis: return "DegenerateBasis";
    case Errc::ParamError: return "ParamError";
    case Errc::InvalidTrapdoor: return "InvalidTrapdoor";
    case Errc::WidthTooSmall: return "WidthTooSmall";
    case Errc::NotAnAncestor: return "NotAnAncestor";
    case Errc::LastPeriod: return "LastPeriod";
    case Errc::TimeMismatch: return "TimeMismatch";
    case Errc::ProtocolViolation: return "ProtocolViolation";
    case Errc::RestartLimitExceeded: return "RestartLimitExceeded";
    case Errc::DecodeError: return "DecodeError";
    case Errc::IoError: return "IoError";
    case Errc::InternalError: return "InternalError";
  }
  return "UnknownError";
}

IntMatrix IntMatrix::identity(std::uint32_t n) {
  IntMatrix M(n, n);
  for (std::uint32_t i = 0; i < n; ++i) M.at(i, i) = 1;
  return M;
}

IntMatrix IntMatrix::from_column(const IntVector& v) {
  IntMatrix M(std::uint32_t(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) M.a[i] = v[i];
  return M;
}

IntVector IntMatrix::column(std::uint32_t c) const {
  IntVector v(rows);
  for (std::uint32_t r = 0; r < rows; ++r) v[r] = at(r, c);
  return v;
}

IntMatrix IntMatrix::transpose() const {
  IntMatrix M(cols, rows);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) M.at(c, r) = at(r, c);
  return M;
}

// ---- primality ----

static std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return (std::uint64_t)((unsigned __int128)a * b % m);
}

static std::uint64_t powmod_u64(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod_u64(r, a, m);
    a = mulmod_u64(a, a, m);
    e >>= 1;
  }
  return r;
}

bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) d >>= 1, ++s;
  // Deterministic witness set for n < 2^64.
  for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    std::uint64_t x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < s; ++i) {
      x = mulmod_u64(x, x, n);
      if (x == n - 1) { composite = false; break; }
    }
    if (composite) return false;
  }
  return true;
}

Modulus::Modulus(Int q_in) : q(q_in) {
  if (q < 3 || q % 2 == 0 || !is_prime_u64(std::uint64_t(q)))
    throw Error(Errc::ParamError, "modulus must be an odd prime >= 3, got " + std::to_string(q_in));
}

Int mod_reduce(Wide v, Int q) {
  Int r = Int(v % q);
  return r < 0 ? r + q : r;
}

Int mod_pow(Int base, Int exp, Int q) {
  return Int(powmod_u64(std::uint64_t(mod_reduce(base, q)), std::uint64_t(exp), std::uint64_t(q)));
}

Int mod_inverse(Int a, Int q) {
  a = mod_reduce(a, q);
  if (a == 0) throw Error(Errc::NoSolutionOrRankDeficient, "inverse of 0");
  return mod_pow(a, q - 2, q);
}

// ---- arithmetic ----

IntMatrix mat_mul(const IntMatrix& A, const IntMatrix& B) {
  if (A.cols != B.rows) throw Error(Errc::DimensionMismatch, "mat_mul");
  IntMatrix C(A.rows, B.cols);
  for (std::uint32_t i = 0; i < A.rows; ++i)
    for (std::uint32_t k = 0; k < A.cols; ++k) {
      Wide aik = A.at(i, k);
      if (aik == 0) continue;
      for (std::uint32_t j = 0; j < B.cols; ++j) {
        Wide v = Wide(C.at(i, j)) + aik * B.at(k, j);
        if (v > std::numeric_limits<Int>::max() || v < std::numeric_limits<Int>::min())
          throw Error(Errc::InternalError, "mat_mul overflow");
        C.at(i, j) = Int(v);
      }
    }
  return C;
}

IntMatrix mat_mul_mod(const IntMatrix& A, const IntMatrix& B, const Modulus& q) {
  if (A.cols != B.rows) throw Error(Errc::DimensionMismatch, "mat_mul_mod");
  IntMatrix C(A.rows, B.cols);
  std::vector<Wide> acc(B.cols);
  for (std::uint32_t i = 0; i < A.rows; ++i) {
    std::fill(acc.begin(), acc.end(), Wide(0));
    for (std::uint32_t k = 0; k < A.cols; ++k) {
      Wide aik = mod_reduce(A.at(i, k), q.q);
      if (aik == 0) continue;
      for (std::uint32_t j = 0; j < B.cols; ++j) acc[j] += aik * mod_reduce(B.at(k, j), q.q);
    }
    for (std::uint32_t j = 0; j < B.cols; ++j) C.at(i, j) = mod_reduce(acc[j], q.q);
  }
  return C;
}

IntVector mat_vec_mod(const IntMatrix& A, const IntVector& v, const Modulus& q) {
  if (A.cols != v.size()) throw Error(Errc::DimensionMismatch, "mat_vec_mod");
  IntVector out(A.rows);
  for (std::uint32_t i = 0; i < A.rows; ++i) {
    Wide acc = 0;
    for (std::uint32_t k = 0; k < A.cols; ++k) acc += Wide(mod_reduce(A.at(i, k), q.q)) * mod_reduce(v[k], q.q);
    out[i] = mod_reduce(acc, q.q);
  }
  return out;
}

IntMatrix mat_reduce(const IntMatrix& A, const Modulus& q) {
  IntMatrix C = A;
  for (Int& v : C.a) v = mod_reduce(v, q.q);
  return C;
}

IntVector vec_add(const IntVector& x, const IntVector& y) {
  if (x.size() != y.size()) throw Error(Errc::DimensionMismatch, "vec_add");
  IntVector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
  return z;
}

IntVector vec_sub(const IntVector& x, const IntVector& y) {
  if (x.size() != y.size()) throw Error(Errc::DimensionMismatch, "vec_sub");
  IntVector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - y[i];
  return z;
}

IntVector vec_add_mod(const IntVector& x, const IntVector& y, const Modulus& q) {
  IntVector z = vec_add(x, y);
  for (Int& v : z) v = mod_reduce(v, q.q);
  return z;
}

Wide dot(const IntVector& x, const IntVector& y) {
  if (x.size() != y.size()) throw Error(Errc::DimensionMismatch, "dot");
  Wide acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += Wide(x[i]) * y[i];
  return acc;
}

Wide norm_sq(const IntVector& x) { return dot(x, x); }

long double norm(const IntVector& x) { return sqrtl((long double)norm_sq(x)); }

// ---- linear solving mod q ----

namespace {

struct Rref {
  IntMatrix m;                       // reduced matrix [A | u] or just A
  std::vector<std::int32_t> pivot_col;  // per pivot row
};

Rref rref_mod(IntMatrix M, Int q) {
  Rref out;
  std::uint32_t rows = M.rows, cols = M.cols;
  for (Int& v : M.a) v = mod_reduce(v, q);
  std::uint32_t pr = 0;
  for (std::uint32_t pc = 0; pc < cols && pr < rows; ++pc) {
    std::uint32_t sel = pr;
    while (sel < rows && M.at(sel, pc) == 0) ++sel;
    if (sel == rows) continue;
    if (sel != pr)
      for (std::uint32_t c = 0; c < cols; ++c) std::swap(M.at(sel, c), M.at(pr, c));
    Int inv = mod_inverse(M.at(pr, pc), q);
    for (std::uint32_t c = pc; c < cols; ++c) M.at(pr, c) = mod_reduce(Wide(M.at(pr, c)) * inv, q);
    for (std::uint32_t r = 0; r < rows; ++r) {
      if (r == pr || M.at(r, pc) == 0) continue;
      Int f = M.at(r, pc);
      for (std::uint32_t c = pc; c < cols; ++c)
        M.at(r, c) = mod_reduce(Wide(M.at(r, c)) - Wide(f) * M.at(pr, c), q);
    }
    out.pivot_col.push_back(std::int32_t(pc));
    ++pr;
  }
  out.m = std::move(M);
  return out;
}

}  // namespace

std::uint32_t rank_mod(const IntMatrix& A, const Modulus& q) {
  return std::uint32_t(rref_mod(A, q.q).pivot_col.size());
}

IntVector solve_particular(const IntMatrix& A, const IntVector& u, const Modulus& q) {
  if (A.rows != u.size()) throw Error(Errc::DimensionMismatch, "solve_particular");
  IntMatrix aug(A.rows, A.cols + 1);
  for (std::uint32_t r = 0; r < A.rows; ++r) {
    for (std::uint32_t c = 0; c < A.cols; ++c) aug.at(r, c) = A.at(r, c);
    aug.at(r, A.cols) = u[r];
  }
  Rref rr = rref_mod(std::move(aug), q.q);
  IntVector t(A.cols, 0);
  for (std::size_t i = 0; i < rr.pivot_col.size(); ++i) {
    if (rr.pivot_col[i] == std::int32_t(A.cols))
      throw Error(Errc::NoSolutionOrRankDeficient, "inconsistent system");
    t[std::size_t(rr.pivot_col[i])] = rr.m.at(std::uint32_t(i), A.cols);
  }
  if (rr.pivot_col.size() < A.rows) {
    // rank-deficient A: only acceptable if the dropped rows are consistent,
    // which rref already guaranteed unless a pivot landed in the u column.
    // The contract requires full row rank, so report it.
    throw Error(Errc::NoSolutionOrRankDeficient, "A not full row rank mod q");
  }
  return t;
}

// ---- Gram-Schmidt ----

GramSchmidt gram_schmidt(const IntMatrix& B) {
  if (B.rows != B.cols) throw Error(Errc::DimensionMismatch, "gram_schmidt expects square basis");
  const std::uint32_t m = B.cols;
  GramSchmidt gs;
  gs.ortho.assign(m, std::vector<double>(B.rows));
  gs.norms.assign(m, 0.0);
  std::vector<double> inv_nsq(m);
  for (std::uint32_t j = 0; j < m; ++j) {
    std::vector<double>& v = gs.ortho[j];
    double col_nsq = 0;
    for (std::uint32_t r = 0; r < B.rows; ++r) {
      v[r] = double(B.at(r, j));
      col_nsq += v[r] * v[r];
    }
    for (std::uint32_t i = 0; i < j; ++i) {
      double mu = 0;
      const std::vector<double>& w = gs.ortho[i];
      for (std::uint32_t r = 0; r < B.rows; ++r) mu += double(B.at(r, j)) * w[r];
      mu *= inv_nsq[i];
      for (std::uint32_t r = 0; r < B.rows; ++r) v[r] -= mu * w[r];
    }
    double nsq = 0;
    for (double x : v) nsq += x * x;
    gs.norms[j] = std::sqrt(nsq);
    if (gs.norms[j] < 1e-9 * std::sqrt(col_nsq))
      throw Error(Errc::DegenerateBasis, "linearly dependent columns at index " + std::to_string(j));
    inv_nsq[j] = 1.0 / nsq;
    gs.max_norm = std::max(gs.max_norm, gs.norms[j]);
  }
  return gs;
}

// ---- exact determinant via CRT ----

std::uint32_t det_mod_prime(const IntMatrix& T, std::uint32_t p) {
  if (T.rows != T.cols) throw Error(Errc::DimensionMismatch, "det of non-square");
  const std::uint32_t m = T.rows;
  const std::uint64_t P = p;
  std::vector<std::uint64_t> M(std::size_t(m) * m);
  for (std::size_t i = 0; i < M.size(); ++i) {
    Int v = T.a[i] % Int(P);
    M[i] = std::uint64_t(v < 0 ? v + Int(P) : v);
  }
  std::uint64_t det = 1;
  for (std::uint32_t c = 0; c < m; ++c) {
    std::uint32_t sel = c;
    while (sel < m && M[std::size_t(sel) * m + c] == 0) ++sel;
    if (sel == m) return 0;
    if (sel != c) {
      for (std::uint32_t j = c; j < m; ++j) std::swap(M[std::size_t(sel) * m + j], M[std::size_t(c) * m + j]);
      det = P - det;
      if (det == P) det = 0;
    }
    std::uint64_t piv = M[std::size_t(c) * m + c];
    det = det * piv % P;
    std::uint64_t inv = powmod_u64(piv, P - 2, P);
    for (std::uint32_t r = c + 1; r < m; ++r) {
      std::uint64_t f = M[std::size_t(r) * m + c] * inv % P;
      if (f == 0) continue;
      std::uint64_t* rr = &M[std::size_t(r) * m];
      const std::uint64_t* cc = &M[std::size_t(c) * m];
      for (std::uint32_t j = c; j < m; ++j) rr[j] = (rr[j] + (P - f) * cc[j]) % P;
    }
  }
  return std::uint32_t(det % P);
}

namespace {

std::vector<std::uint32_t> crt_primes(double bound_bits) {
  static std::vector<std::uint32_t> cache;
  std::size_t need = std::size_t(bound_bits / 30.9) + 2;
  std::uint32_t candidate = cache.empty() ? 0x7fffffffu : cache.back() - 2;
  while (cache.size() < need) {
    while (!is_prime_u64(candidate)) candidate -= 2;
    cache.push_back(candidate);
    candidate -= 2;
  }
  return std::vector<std::uint32_t>(cache.begin(), cache.begin() + std::ptrdiff_t(need));
}

// log2 of the per-column Hadamard bound of |det T|.
double hadamard_bits(const IntMatrix& T) {
  double bits = 0;
  for (std::uint32_t c = 0; c < T.cols; ++c) {
    double nsq = 0;
    for (std::uint32_t r = 0; r < T.rows; ++r) {
      double v = double(T.at(r, c));
      nsq += v * v;
    }
    if (nsq == 0) return 0;  // zero column, det = 0
    bits += 0.5 * std::log2(nsq);
  }
  return bits;
}

}  // namespace

bool abs_det_equals_power(const IntMatrix& T, Int q, std::uint32_t n) {
  if (T.rows != T.cols) return false;
  double bits = hadamard_bits(T);
  if (bits == 0) return false;
  std::vector<std::uint32_t> primes = crt_primes(bits + 1);
  // target = q^n, and -q^n, as residues per prime; det must match one sign
  // consistently across all primes. CRT product exceeds 2*|det|, so residue
  // agreement for every prime pins the integer exactly.
  bool plus_ok = true, minus_ok = true, nonzero = false;
  for (std::uint32_t p : primes) {
    std::uint64_t d = det_mod_prime(T, p);
    if (d != 0) nonzero = true;
    std::uint64_t tgt = powmod_u64(std::uint64_t(q % Int(p)), n, p);
    if (d != tgt) plus_ok = false;
    if (d != (tgt == 0 ? 0 : p - tgt)) minus_ok = false;
    if (!plus_ok && !minus_ok) return false;
  }
  return nonzero && (plus_ok || minus_ok);
}

bool is_basis_of_lambda_perp(const IntMatrix& A, const IntMatrix& T, const Modulus& q) {
  if (A.cols != T.rows || T.rows != T.cols) return false;
  IntMatrix prod = mat_mul_mod(A, T, q);
  for (Int v : prod.a)
    if (v != 0) return false;
  return abs_det_equals_power(T, q.q, A.rows);
}

// ---- permutation / concatenation ----

IntMatrix permute_rows(const IntMatrix& M, const std::vector<std::uint32_t>& perm) {
  if (perm.size() != M.rows) throw Error(Errc::DimensionMismatch, "permute_rows");
  std::vector<bool> seen(M.rows, false);
  for (std::uint32_t p : perm) {
    if (p >= M.rows || seen[p]) throw Error(Errc::DimensionMismatch, "invalid permutation");
    seen[p] = true;
  }
  IntMatrix out(M.rows, M.cols);
  for (std::uint32_t r = 0; r < M.rows; ++r)
    for (std::uint32_t c = 0; c < M.cols; ++c) out.at(perm[r], c) = M.at(r, c);
  return out;
}

IntMatrix concat_cols(const std::vector<IntMatrix>& parts) {
  if (parts.empty()) return {};
  std::uint32_t rows = parts[0].rows, cols = 0;
  for (const IntMatrix& p : parts) {
    if (p.rows != rows) throw Error(Errc::DimensionMismatch, "concat_cols row mismatch");
    cols += p.cols;
  }
  IntMatrix out(rows, cols);
  std::uint32_t off = 0;
  for (const IntMatrix& p : parts) {
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < p.cols; ++c) out.at(r, off + c) = p.at(r, c);
    off += p.cols;
  }
  return out;
}

// ---- serialization ----

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error(Errc::DecodeError, "truncated u32");
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

}  // namespace

void write_matrix(std::ostream& os, const IntMatrix& M) {
  os.write("FSM1", 4);
  put_u32(os, M.rows);
  put_u32(os, M.cols);
  const unsigned char width = 8;  // int64 entries always fit
  os.put(char(width));
  for (Int v : M.a) {
    std::uint64_t u = std::uint64_t(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
  }
  if (!os) throw Error(Errc::IoError, "matrix write failed");
}

IntMatrix read_matrix(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "FSM1", 4) != 0)
    throw Error(Errc::DecodeError, "bad matrix magic");
  std::uint32_t rows = get_u32(is), cols = get_u32(is);
  int width = is.get();
  if (width != 8 && width != 16) throw Error(Errc::DecodeError, "bad entry width");
  if (std::uint64_t(rows) * cols > (1u << 26)) throw Error(Errc::DecodeError, "oversize matrix");
  IntMatrix M(rows, cols);
  std::vector<unsigned char> buf(static_cast<std::size_t>(width));
  for (Int& v : M.a) {
    if (!is.read(reinterpret_cast<char*>(buf.data()), width)) throw Error(Errc::DecodeError, "truncated matrix");
    std::uint64_t lo = 0;
    for (int i = 0; i < 8; ++i) lo |= std::uint64_t(buf[std::size_t(i)]) << (8 * i);
    if (width == 16) {
      // high half must be the sign extension of the low half
      unsigned char ext = (lo >> 63) ? 0xff : 0x00;
      for (int i = 8; i < 16; ++i)
        if (buf[std::size_t(i)] != ext) throw Error(Errc::DecodeError, "entry exceeds 64-bit range");
    }
    v = Int(lo);
  }
  return M;
}

}  // namespace fsbs
