#pragma once

#include <complex>
#include <vector>

#include "rcwave/transfer_function.hpp"

namespace rcwave {

/// N(s)/D(s) with coefficients in ascending powers of s.
struct RationalFunction {
  std::vector<double> numerator;
  std::vector<double> denominator;
};

/// Monic-times-`lead` polynomial with the given real roots, ascending powers.
std::vector<double> poly_from_roots(const std::vector<double>& roots, double lead = 1.0);

std::complex<double> eval_poly(const std::vector<double>& coeffs, std::complex<double> s);
std::complex<double> eval_rational(const RationalFunction& h, std::complex<double> s);

/// Partial fractions with repeated poles. Roots of D closer than
/// `tol_cluster` (relative) are merged into one term of the combined
/// multiplicity and its residue chain A_ij is read off the Taylor expansion
/// of (s - p_i)^k H(s) at p_i. tol_cluster <= 0 disables merging: every root
/// becomes a simple pole with r = N(p)/D'(p).
TransferFunction expand_repeated(const RationalFunction& h, double tol_cluster);

}  // namespace rcwave
