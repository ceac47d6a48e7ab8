#pragma once

#include "fsbs/matrix.hpp"
#include "fsbs/random.hpp"

namespace fsbs {

/// Gaussian parameter s in exp(-pi ||x - c||^2 / s^2); s >= 1.
struct GaussWidth {
  double s;
  explicit GaussWidth(double s_in) : s(s_in) {
    if (!(s >= 1.0)) throw Error(Errc::ParamError, "Gaussian width must be >= 1");
  }
};

/// One draw from the discrete Gaussian over Z with center c and parameter s,
/// tail-cut at |x - c| <= 12 s. Exact up to the tail cut: uniform proposal
/// over the cut support, accepted with probability exp(-pi (x-c)^2 / s^2).
Int sample_z(GaussWidth s, double c, RandomSource& rng);

/// m independent draws from D_{Z,s,0}.
IntVector sample_zm(GaussWidth s, std::uint32_t m, RandomSource& rng);

/// min(1, exp(pi (||v||^2 - 2<z,v>) / s^2) / M): the acceptance probability
/// D_s(z) / (M * D_{s,v}(z)) of the rejection-sampling rule.
double accept_ratio(const IntVector& z, const IntVector& v, GaussWidth s, double M);

enum class RejectionOutcome { Accept, Reject };

RejectionOutcome rejection_step(const IntVector& z, const IntVector& v, GaussWidth s, double M,
                                RandomSource& rng);

/// Randomized nearest-plane sampling of D_{L(T),s,c}. T's columns are the
/// basis vectors; gs must be gram_schmidt(T) (recomputed when absent).
IntVector sample_d(const IntMatrix& T, GaussWidth s, const std::vector<double>& c, RandomSource& rng);
IntVector sample_d(const IntMatrix& T, const GramSchmidt& gs, GaussWidth s,
                   const std::vector<double>& c, RandomSource& rng);

}  // namespace fsbs
