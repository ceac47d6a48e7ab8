#include "fsbs/trapdoor.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace fsbs {

std::uint32_t gadget_digits(Int q) {
  return std::uint32_t(std::llround(std::log2(double(q))));
}

std::uint32_t trap_gen_min_m(std::uint32_t n, Int q) { return 6 * n * gadget_digits(q); }

namespace {

// digits d_0..d_{kg-1} in {0..3} with sum d_j * 2^j == v, for v < 2^(kg+1)
std::vector<Int> base2_digits(Int v, std::uint32_t kg) {
  std::vector<Int> d(kg, 0);
  for (std::uint32_t j = 0; j < kg; ++j) d[j] = (v >> j) & 1;
  if (v >> kg) d[kg - 1] += 2;
  return d;
}

}  // namespace

TrapdoorPair trap_gen(std::uint32_t n, const Modulus& q, std::uint32_t m, RandomSource& rng) {
  const std::uint32_t kg = gadget_digits(q.q);
  const std::uint32_t w = n * kg;
  if (m < trap_gen_min_m(n, q.q))
    throw Error(Errc::ParamError, "trap_gen: m < 6*n*log2(q), need >= " + std::to_string(trap_gen_min_m(n, q.q)));
  const std::uint32_t mbar = m - w;

  IntMatrix Abar(n, mbar);
  for (Int& v : Abar.a) v = Int(rng.uniform_below(std::uint64_t(q.q)));

  IntMatrix R(mbar, w);  // ternary
  for (Int& v : R.a) v = Int(rng.uniform_below(3)) - 1;

  // B = G - Abar*R (mod q), with G[i, i*kg + j] = 2^j
  IntMatrix B = mat_mul_mod(Abar, R, q);
  for (Int& v : B.a) v = v == 0 ? 0 : q.q - v;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < kg; ++j)
      B.at(i, i * kg + j) = mod_reduce(Wide(B.at(i, i * kg + j)) + (Wide(1) << j), q.q);

  IntMatrix A = concat_cols({Abar, B});

  // Y[:, i]: per-row digit decompositions with G*y_i == -Abar[:, i] (mod q)
  IntMatrix Y(w, mbar);
  for (std::uint32_t i = 0; i < mbar; ++i)
    for (std::uint32_t r = 0; r < n; ++r) {
      Int val = Abar.at(r, i) == 0 ? 0 : q.q - Abar.at(r, i);
      std::vector<Int> d = base2_digits(val, kg);
      for (std::uint32_t j = 0; j < kg; ++j) Y.at(r * kg + j, i) = d[j];
    }

  // Standard basis of the gadget kernel lattice, block-diagonal over rows.
  IntMatrix Sg(w, w);
  std::vector<Int> qd = base2_digits(q.q, kg);
  for (std::uint32_t r = 0; r < n; ++r) {
    std::uint32_t off = r * kg;
    for (std::uint32_t j = 0; j + 1 < kg; ++j) {
      Sg.at(off + j, off + j) = 2;
      Sg.at(off + j + 1, off + j) = -1;
    }
    for (std::uint32_t j = 0; j < kg; ++j) Sg.at(off + j, off + kg - 1) = qd[j];
  }

  // T = [[I + R*Y, R*Sg], [Y, Sg]]
  IntMatrix RY = mat_mul(R, Y);
  IntMatrix RSg = mat_mul(R, Sg);
  IntMatrix T(m, m);
  for (std::uint32_t i = 0; i < mbar; ++i)
    for (std::uint32_t j = 0; j < mbar; ++j) T.at(i, j) = RY.at(i, j) + (i == j ? 1 : 0);
  for (std::uint32_t i = 0; i < mbar; ++i)
    for (std::uint32_t j = 0; j < w; ++j) T.at(i, mbar + j) = RSg.at(i, j);
  for (std::uint32_t i = 0; i < w; ++i) {
    for (std::uint32_t j = 0; j < mbar; ++j) T.at(mbar + i, j) = Y.at(i, j);
    for (std::uint32_t j = 0; j < w; ++j) T.at(mbar + i, mbar + j) = Sg.at(i, j);
  }

  TrapdoorPair td{std::move(A), std::move(T), 0.0};
  td.gs_norm = gram_schmidt(td.T).max_norm;
  return td;
}

IntMatrix ext_basis(const IntMatrix& A_full, std::uint32_t offset, std::uint32_t width,
                    const IntMatrix& T2, const Modulus& q) {
  if (offset + width > A_full.cols || T2.rows != width || T2.cols != width)
    throw Error(Errc::DimensionMismatch, "ext_basis spans");
  const std::uint32_t m1 = offset, m2 = width, m3 = A_full.cols - offset - width;
  const std::uint32_t rest = m1 + m3;

  IntMatrix A2(A_full.rows, m2);
  for (std::uint32_t r = 0; r < A_full.rows; ++r)
    for (std::uint32_t c = 0; c < m2; ++c) A2.at(r, c) = A_full.at(r, offset + c);

  {
    IntMatrix check = mat_mul_mod(A2, T2, q);
    for (Int v : check.a)
      if (v != 0) throw Error(Errc::InvalidTrapdoor, "T2 is not a trapdoor for the spanned block");
  }
  if (rest == 0) return T2;

  // columns of [A1 | A3] in their original relative order
  std::vector<std::uint32_t> rest_cols;
  rest_cols.reserve(rest);
  for (std::uint32_t c = 0; c < m1; ++c) rest_cols.push_back(c);
  for (std::uint32_t c = offset + width; c < A_full.cols; ++c) rest_cols.push_back(c);

  // T_perm = [[T2, W], [0, I]] for the permuted layout [A2 | A1 | A3],
  // with A2 * W == -[A1 | A3] (mod q)
  IntMatrix Tp(m2 + rest, m2 + rest);
  for (std::uint32_t r = 0; r < m2; ++r)
    for (std::uint32_t c = 0; c < m2; ++c) Tp.at(r, c) = T2.at(r, c);
  for (std::uint32_t j = 0; j < rest; ++j) {
    IntVector u(A_full.rows);
    for (std::uint32_t r = 0; r < A_full.rows; ++r) {
      Int v = mod_reduce(A_full.at(r, rest_cols[j]), q.q);
      u[r] = v == 0 ? 0 : q.q - v;
    }
    IntVector wj = solve_particular(A2, u, q);
    for (std::uint32_t r = 0; r < m2; ++r) Tp.at(r, m2 + j) = wj[r];
    Tp.at(m2 + j, m2 + j) = 1;
  }

  // un-permute coordinates back to A_full's column order
  std::vector<std::uint32_t> perm(m2 + rest);
  for (std::uint32_t r = 0; r < m2; ++r) perm[r] = offset + r;
  for (std::uint32_t j = 0; j < rest; ++j) perm[m2 + j] = rest_cols[j];
  return permute_rows(Tp, perm);
}

IntVector sample_isis(const IntMatrix& A, const IntMatrix& T_A, GaussWidth s, const IntVector& u,
                      const Modulus& q, RandomSource& rng) {
  return sample_isis(A, T_A, gram_schmidt(T_A), s, u, q, rng);
}

IntVector sample_isis(const IntMatrix& A, const IntMatrix& T_A, const GramSchmidt& gs, GaussWidth s,
                      const IntVector& u, const Modulus& q, RandomSource& rng) {
  IntVector t = solve_particular(A, u, q);
  std::vector<double> center(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) center[i] = -double(t[i]);
  IntVector w = sample_d(T_A, gs, s, center, rng);
  return vec_add(t, w);
}

IntMatrix sample_key(const IntMatrix& A, const IntMatrix& T_A, GaussWidth s, const IntMatrix& K,
                     const Modulus& q, RandomSource& rng) {
  return sample_key(A, T_A, gram_schmidt(T_A), s, K, q, rng);
}

IntMatrix sample_key(const IntMatrix& A, const IntMatrix& T_A, const GramSchmidt& gs, GaussWidth s,
                     const IntMatrix& K, const Modulus& q, RandomSource& rng) {
  if (K.rows != A.rows) throw Error(Errc::DimensionMismatch, "sample_key K");
  const long double bound_sq = (long double)s.s * s.s * A.cols;
  IntMatrix S(A.cols, K.cols);
  for (std::uint32_t j = 0; j < K.cols; ++j) {
    IntVector u = K.column(j);
    for (;;) {
      IntVector e = sample_isis(A, T_A, gs, s, u, q, rng);
      if ((long double)norm_sq(e) <= bound_sq) {
        for (std::uint32_t r = 0; r < A.cols; ++r) S.at(r, j) = e[r];
        break;
      }
    }
  }
  return S;
}

void write_trapdoor(std::ostream& os, const TrapdoorPair& td) {
  os.write("FSTD", 4);
  write_matrix(os, td.A);
  write_matrix(os, td.T);
  double g = td.gs_norm;
  std::uint64_t bits;
  std::memcpy(&bits, &g, 8);
  for (int i = 0; i < 8; ++i) os.put(char(std::uint8_t(bits >> (8 * i))));
  if (!os) throw Error(Errc::IoError, "trapdoor write failed");
}

TrapdoorPair read_trapdoor(std::istream& is, const Modulus& q) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "FSTD", 4) != 0)
    throw Error(Errc::DecodeError, "bad trapdoor magic");
  TrapdoorPair td;
  td.A = read_matrix(is);
  td.T = read_matrix(is);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    int ch = is.get();
    if (ch < 0) throw Error(Errc::DecodeError, "truncated gs_norm");
    bits |= std::uint64_t(std::uint8_t(ch)) << (8 * i);
  }
  std::memcpy(&td.gs_norm, &bits, 8);
  if (!is_basis_of_lambda_perp(td.A, td.T, q))
    throw Error(Errc::InvalidTrapdoor, "loaded pair fails basis check");
  double measured = gram_schmidt(td.T).max_norm;
  if (std::abs(measured - td.gs_norm) > 1e-6 * measured)
    throw Error(Errc::InvalidTrapdoor, "stored gs_norm disagrees with basis");
  return td;
}

}  // namespace fsbs
