#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <vector>

namespace rcwave {

/// One pole of H(s) with its residue chain:
///   sum_j residues[j-1] / (s - pole)^j,  j = 1..multiplicity.
struct PoleTerm {
  double pole = 0.0;  // rad/s, negative for a passive network
  int multiplicity = 1;
  std::vector<double> residues;

  bool operator==(const PoleTerm&) const = default;
};

/// Pole-residue form of a strictly proper transfer function.
struct TransferFunction {
  std::vector<PoleTerm> terms;
  double dc_gain = 0.0;

  /// Sum of multiplicities.
  int order() const;
  /// Largest |pole|, 0 for an empty function.
  double max_pole_magnitude() const;
  /// Smallest |pole|, 0 for an empty function.
  double min_pole_magnitude() const;

  bool operator==(const TransferFunction&) const = default;
};

/// H(s) evaluated from the expansion. Throws PoleEvaluation when s sits on a pole.
std::complex<double> eval_tf(const TransferFunction& tf, std::complex<double> s);

/// H(0) recomputed from the terms.
double dc_gain_of(const std::vector<PoleTerm>& terms);

/// How much of the DC gain a term can carry: sum_j |A_ij| / |p_i|^j.
/// Fast poles with large residues still weigh little here.
double dc_weight(const PoleTerm& term);

/// Index of the term with the largest dc_weight; ties go to the slower pole.
/// -1 for an empty function.
int dominant_term(const TransferFunction& tf);

/// Keeps the `max_terms` heaviest terms by dc_weight (in descending weight
/// order) and recomputes dc_gain from them.
TransferFunction truncate_dominant(const TransferFunction& tf, int max_terms);

/// {"dc_gain": r, "terms": [{"pole": r, "multiplicity": k, "residues": [r...]}]}
std::string to_json(const TransferFunction& tf, int indent = -1);
TransferFunction transfer_function_from_json(std::string_view text);

}  // namespace rcwave
