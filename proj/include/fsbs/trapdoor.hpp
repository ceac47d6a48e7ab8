#pragma once

#include <iosfwd>

#include "fsbs/gaussian.hpp"
#include "fsbs/matrix.hpp"

namespace fsbs {

/// A uniform-looking matrix A (n x m, mod q) together with a short integer
/// basis T of its q-ary kernel lattice, plus the measured Gram-Schmidt norm.
struct TrapdoorPair {
  IntMatrix A;     // n x m, entries in [0, q)
  IntMatrix T;     // m x m
  double gs_norm;  // max Gram-Schmidt norm of T's columns
};

/// Gadget digit count: nearest integer to log2(q).
std::uint32_t gadget_digits(Int q);

/// Minimal m accepted by trap_gen for (n, q): 6 * n * gadget_digits(q).
std::uint32_t trap_gen_min_m(std::uint32_t n, Int q);

/// Sample (A, T) with A statistically close to uniform and T a basis of the
/// kernel lattice. Gadget construction: A = [Abar | G - Abar*R] with R
/// ternary; the basis is assembled from R, the binary decompositions of
/// Abar's columns, and the standard gadget-lattice basis.
TrapdoorPair trap_gen(std::uint32_t n, const Modulus& q, std::uint32_t m, RandomSource& rng);

/// Extend a trapdoor for the block A2 = A_full[:, offset..offset+width) to a
/// basis of the kernel lattice of the whole concatenation, preserving the
/// Gram-Schmidt norm.
IntMatrix ext_basis(const IntMatrix& A_full, std::uint32_t offset, std::uint32_t width,
                    const IntMatrix& T2, const Modulus& q);

/// Preimage sampling: e with A*e == u (mod q), e ~ D_{Lambda^u, s}.
IntVector sample_isis(const IntMatrix& A, const IntMatrix& T_A, GaussWidth s, const IntVector& u,
                      const Modulus& q, RandomSource& rng);
IntVector sample_isis(const IntMatrix& A, const IntMatrix& T_A, const GramSchmidt& gs, GaussWidth s,
                      const IntVector& u, const Modulus& q, RandomSource& rng);

/// S with A*S == K (mod q), every column short: ||S[j]|| <= s*sqrt(m).
/// A column exceeding the bound is resampled.
IntMatrix sample_key(const IntMatrix& A, const IntMatrix& T_A, GaussWidth s, const IntMatrix& K,
                     const Modulus& q, RandomSource& rng);
IntMatrix sample_key(const IntMatrix& A, const IntMatrix& T_A, const GramSchmidt& gs, GaussWidth s,
                     const IntMatrix& K, const Modulus& q, RandomSource& rng);

// "FSTD" block: A, T in the FSM1 encoding, then gs_norm as IEEE-754 double LE.
void write_trapdoor(std::ostream& os, const TrapdoorPair& td);
TrapdoorPair read_trapdoor(std::istream& is, const Modulus& q);  // invariants re-checked

}  // namespace fsbs
