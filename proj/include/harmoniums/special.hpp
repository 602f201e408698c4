#pragma once

#include <cstdint>

namespace harmoniums {

/// log I0(x) for x >= 0, accurate to ~1e-12 relative.
double log_bessel_i0(double x);

/// Bessel ratio I1(x)/I0(x) for x >= 0.
double bessel_ratio_i1_i0(double x);

/// Inverse of the Bessel ratio: the concentration r in [0, 500] with
/// I1(r)/I0(r) = a, for a in [0, 1).
double inverse_bessel_ratio(double a);

double digamma(double x);
double trigamma(double x);

/// Inverse of digamma, for solving psi(a) = y with a > 0.
double inverse_digamma(double y);

/// log(n!) as a double.
double log_factorial(unsigned n);

/// Deterministic seed stream: mixes a base seed with an index so that
/// parallel work items get independent generators.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

} // namespace harmoniums
