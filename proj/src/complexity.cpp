#include "psma/phy.hpp"

namespace psma {

void validate(const ComplexityParams& p) {
  auto positive = [](std::uint64_t v, const char* field) {
    if (v < 1) throw ValidationError(field, "must be >= 1");
  };
  positive(p.I_T, "I_T");
  positive(p.pi_size, "pi_size");
  positive(p.d, "d");
  positive(p.G, "G");
  positive(p.L_T, "L_T");
  positive(p.G_prime, "G_prime");
  positive(p.L_T_prime, "L_T_prime");
}

namespace {

std::uint64_t ipow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t r = 1;
  while (exp--) r *= base;
  return r;
}

} // namespace

std::uint64_t receiver_complexity(const ComplexityParams& p, Scheme scheme) {
  validate(p);
  const std::uint64_t mpa = p.I_T * ipow(p.pi_size, p.d);
  switch (scheme) {
  case Scheme::SCMA: return mpa;
  case Scheme::PSMA: return mpa * p.G * p.L_T;
  case Scheme::PDNOMA: {
    // (2 L'^3 + 2 L'^2 G') (L' - 1): SIC over L' superposed users, G' subcarriers.
    const std::uint64_t l = p.L_T_prime;
    return (2 * l * l * l + 2 * l * l * p.G_prime) * (l - 1);
  }
  }
  return 0;
}

} // namespace psma
