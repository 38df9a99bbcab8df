#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "rcwave/network.hpp"
#include "rcwave/transfer_function.hpp"

namespace rcwave {

/// Nodal equations  C dv/dt + G v = b u(t),  y = e_out' v  over the nodes that
/// carry capacitance. The driver pin is the ideal source u; capacitance-free
/// pins are eliminated by Schur complement, so C is diagonal and positive.
struct NodalSystem {
  Eigen::MatrixXd G;
  Eigen::MatrixXd C;
  Eigen::VectorXd b;
  Eigen::VectorXd e_out;
  std::vector<int> state_nodes;  // RcNetwork node index of each row

  int size() const { return static_cast<int>(G.rows()); }
};

/// Throws SingularSystem when some capacitive node has no DC path to the
/// driver, and InvalidArgument when the output couples resistively to the
/// driver without passing a capacitive node (H would not be strictly proper).
NodalSystem assemble_system(const RcNetwork& net);

/// e_out' (G + sC)^-1 b by a direct complex solve.
std::complex<double> direct_response(const NodalSystem& sys, std::complex<double> s);

/// Pole-residue expansion from the generalized eigenproblem of (G, -C).
/// Terms are ordered slowest pole first. Throws ComplexPoleDetected or
/// PositivePoleDetected when the eigenvalues contradict RC passivity.
TransferFunction extract_tf(const NodalSystem& sys);
TransferFunction extract_tf(const RcNetwork& net);

/// Second route to the residues of known simple poles: least-squares fit of
/// sum_i r_i/(s - p_i) to direct solves sampled on the imaginary axis.
std::vector<double> fit_residues(const NodalSystem& sys, const std::vector<double>& poles);

/// `n` angular frequencies log-spaced over [1e-2 |p_min|, 1e2 |p_max|].
std::vector<double> probe_frequencies(const TransferFunction& tf, int n = 50);

/// max_k |eval_tf(jw_k) - direct_response(jw_k)| / |direct_response(jw_k)|.
double reconstruction_error(const TransferFunction& tf, const NodalSystem& sys, int n = 50);

/// Same sweep, error measured against the peak gain:
/// max_k |eval_tf(jw_k) - direct_response(jw_k)| / max_k |direct_response(jw_k)|.
double reconstruction_error_peak(const TransferFunction& tf, const NodalSystem& sys, int n = 50);

}  // namespace rcwave
