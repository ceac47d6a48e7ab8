#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fsbs/error.hpp"

namespace fsbs {

// Full parameter system. All Gaussian widths are real-valued; sigma is the
// base (trapdoor-quality) width fixed at setup, the rest follow by formula.
struct Params {
  std::uint32_t n = 0;      // security parameter / row dimension
  std::uint32_t ell = 0;    // tree depth
  std::uint32_t tau = 0;    // 2^ell time periods
  std::int64_t q = 0;       // prime modulus
  std::uint32_t m = 0;      // column block width
  std::uint32_t k = 0;      // challenge length
  std::uint32_t kappa = 0;  // challenge weight
  double sigma = 0;
  double sigma1 = 0;
  double sigma2 = 0;
  double sigma3 = 0;
  double M1 = 0, M2 = 0, M3 = 0;
  double gamma = 0;  // target min-entropy of the challenge ball
  double beta = 0;   // SIS norm bound, informational

  std::uint32_t total_m() const { return (1 + ell) * m; }
};

struct Violation {
  bool info = false;  // true for advisory (hardness-scale) notes
  std::string text;
};

std::vector<Violation> validate(const Params& p);
// Fails (ParamError) if any non-info violation remains after derivation.
Params derive(std::uint32_t n, std::uint32_t ell, std::int64_t q, std::uint32_t k,
              std::uint32_t kappa, double sigma);

Params preset(const std::string& name);  // "toy-T0", "toy-T1"
std::vector<std::string> preset_names();

std::string params_to_text(const Params& p);
Params params_from_text(const std::string& text);
void write_params(std::ostream& os, const Params& p);
Params read_params(std::istream& is);

double log2_binomial(std::uint32_t k, std::uint32_t kappa);

}  // namespace fsbs
