#include "fsbs/gaussian.hpp"

#include <cmath>

namespace fsbs {

Int sample_z(GaussWidth s, double c, RandomSource& rng) {
  const double lo = std::ceil(c - 12.0 * s.s);
  const double hi = std::floor(c + 12.0 * s.s);
  const std::uint64_t span = std::uint64_t(hi - lo) + 1;
  const double inv_s2 = 1.0 / (s.s * s.s);
  for (;;) {
    double x = lo + double(rng.uniform_below(span));
    double d = x - c;
    double p = std::exp(-M_PI * d * d * inv_s2);
    if (rng.uniform01() < p) return Int(x);
  }
}

IntVector sample_zm(GaussWidth s, std::uint32_t m, RandomSource& rng) {
  if (m < 1) throw Error(Errc::ParamError, "sample_zm: m >= 1");
  IntVector v(m);
  for (Int& x : v) x = sample_z(s, 0.0, rng);
  return v;
}

double accept_ratio(const IntVector& z, const IntVector& v, GaussWidth s, double M) {
  if (z.size() != v.size()) throw Error(Errc::DimensionMismatch, "accept_ratio");
  if (M < 1.0) throw Error(Errc::ParamError, "accept_ratio: M >= 1");
  // exact integer exponent ||v||^2 - 2<z,v>, scaled in floating point
  Wide expo = norm_sq(v) - 2 * dot(z, v);
  long double r = expl((long double)expo * (M_PI / ((long double)s.s * s.s))) / M;
  return r >= 1.0L ? 1.0 : double(r);
}

RejectionOutcome rejection_step(const IntVector& z, const IntVector& v, GaussWidth s, double M,
                                RandomSource& rng) {
  double p = accept_ratio(z, v, s, M);
  return rng.uniform01() < p ? RejectionOutcome::Accept : RejectionOutcome::Reject;
}

IntVector sample_d(const IntMatrix& T, GaussWidth s, const std::vector<double>& c, RandomSource& rng) {
  return sample_d(T, gram_schmidt(T), s, c, rng);
}

IntVector sample_d(const IntMatrix& T, const GramSchmidt& gs, GaussWidth s,
                   const std::vector<double>& c, RandomSource& rng) {
  const std::uint32_t m = T.cols;
  if (c.size() != T.rows) throw Error(Errc::DimensionMismatch, "sample_d center");
  if (s.s < gs.max_norm) throw Error(Errc::WidthTooSmall, "s below Gram-Schmidt norm of basis");
  std::vector<double> cur(c);
  IntVector out(T.rows, 0);
  for (std::uint32_t i = m; i-- > 0;) {
    const std::vector<double>& bt = gs.ortho[i];
    double num = 0;
    for (std::uint32_t r = 0; r < T.rows; ++r) num += cur[r] * bt[r];
    double center = num / (gs.norms[i] * gs.norms[i]);
    Int zi = sample_z(GaussWidth(s.s / gs.norms[i]), center, rng);
    for (std::uint32_t r = 0; r < T.rows; ++r) {
      cur[r] -= double(zi) * double(T.at(r, i));
      out[r] += zi * T.at(r, i);
    }
  }
  return out;
}

}  // namespace fsbs
