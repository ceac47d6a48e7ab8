#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fsbs/error.hpp"

namespace fsbs {

using Int = std::int64_t;
using Wide = __int128;
using IntVector = std::vector<Int>;

/// Dense row-major signed-integer matrix. All arithmetic on it is exact;
/// intermediate products are accumulated in 128 bits.
struct IntMatrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<Int> a;  // rows*cols, row-major

  IntMatrix() = default;
  IntMatrix(std::uint32_t r, std::uint32_t c) : rows(r), cols(c), a(std::size_t(r) * c, 0) {}

  Int& at(std::uint32_t r, std::uint32_t c) { return a[std::size_t(r) * cols + c]; }
  Int at(std::uint32_t r, std::uint32_t c) const { return a[std::size_t(r) * cols + c]; }

  static IntMatrix identity(std::uint32_t n);
  static IntMatrix from_column(const IntVector& v);
  IntVector column(std::uint32_t c) const;
  IntMatrix transpose() const;

  bool operator==(const IntMatrix&) const = default;
};

/// Odd prime modulus, q >= 3. Primality is verified at construction
/// (deterministic Miller-Rabin, valid for q < 2^64).
struct Modulus {
  Int q;
  explicit Modulus(Int q);
};

bool is_prime_u64(std::uint64_t n);

Int mod_reduce(Wide v, Int q);           // canonical residue in [0, q)
Int mod_inverse(Int a, Int q);           // q prime, a != 0 mod q
Int mod_pow(Int base, Int exp, Int q);

IntMatrix mat_mul(const IntMatrix& A, const IntMatrix& B);  // exact
IntMatrix mat_mul_mod(const IntMatrix& A, const IntMatrix& B, const Modulus& q);
IntVector mat_vec_mod(const IntMatrix& A, const IntVector& v, const Modulus& q);
IntMatrix mat_reduce(const IntMatrix& A, const Modulus& q);

IntVector vec_add(const IntVector& x, const IntVector& y);
IntVector vec_sub(const IntVector& x, const IntVector& y);
IntVector vec_add_mod(const IntVector& x, const IntVector& y, const Modulus& q);
Wide dot(const IntVector& x, const IntVector& y);
Wide norm_sq(const IntVector& x);
long double norm(const IntVector& x);

/// Deterministic particular solution of A*t == u (mod q): reduced row echelon
/// with leftmost-pivot order, free variables set to 0.
IntVector solve_particular(const IntMatrix& A, const IntVector& u, const Modulus& q);

std::uint32_t rank_mod(const IntMatrix& A, const Modulus& q);

struct GramSchmidt {
  std::vector<std::vector<double>> ortho;  // ortho[i] = b~_i (column i)
  std::vector<double> norms;               // ||b~_i||
  double max_norm = 0.0;
};

/// Unnormalized Gram-Schmidt of the columns of B, in order.
GramSchmidt gram_schmidt(const IntMatrix& B);

/// True iff T is a basis of the q-ary kernel lattice of A: A*T == 0 (mod q)
/// columnwise, T nonsingular over Z, and |det T| == q^n exactly.
/// The determinant is computed exactly (CRT over word-size primes against a
/// per-column Hadamard bound).
bool is_basis_of_lambda_perp(const IntMatrix& A, const IntMatrix& T, const Modulus& q);

/// det T mod p for a prime p < 2^31.
std::uint32_t det_mod_prime(const IntMatrix& T, std::uint32_t p);

/// |det T| == target, decided exactly. target given as q^n via (q, n).
bool abs_det_equals_power(const IntMatrix& T, Int q, std::uint32_t n);

IntMatrix permute_rows(const IntMatrix& M, const std::vector<std::uint32_t>& perm);
IntMatrix concat_cols(const std::vector<IntMatrix>& parts);

// "FSM1" binary block: rows u32 LE, cols u32 LE, entry width {8,16} bytes,
// entries LE two's-complement row-major.
void write_matrix(std::ostream& os, const IntMatrix& M);
IntMatrix read_matrix(std::istream& is);

}  // namespace fsbs
