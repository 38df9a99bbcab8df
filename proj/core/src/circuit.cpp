#include "rcwave/circuit.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "rcwave/error.hpp"

namespace rcwave {

NodalSystem assemble_system(const RcNetwork& net) {
  const int n = net.size();
  // Unknowns are all nodes except the driver.
  std::vector<int> row_of(n, -1);
  std::vector<int> unknowns;
  for (int i = 0; i < n; ++i)
    if (i != net.driver_node) {
      row_of[i] = static_cast<int>(unknowns.size());
      unknowns.push_back(i);
    }
  const int u = static_cast<int>(unknowns.size());

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(u, u);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(u);
  for (const auto& br : net.conductances) {
    const int ra = row_of[br.a];
    const int rb = row_of[br.b];
    if (ra >= 0) G(ra, ra) += br.g;
    if (rb >= 0) G(rb, rb) += br.g;
    if (ra >= 0 && rb >= 0) {
      G(ra, rb) -= br.g;
      G(rb, ra) -= br.g;
    } else if (ra >= 0) {
      b(ra) += br.g;
    } else if (rb >= 0) {
      b(rb) += br.g;
    }
  }
  std::vector<double> cap(n, 0.0);
  for (const auto& c : net.caps_to_ground) cap[c.node] += c.c;

  std::vector<int> keep;  // rows with capacitance
  std::vector<int> drop;  // bare pins
  for (int r = 0; r < u; ++r) (cap[unknowns[r]] > 0.0 ? keep : drop).push_back(r);
  if (keep.empty())
    throw Error(ErrorCode::SingularSystem, "network has no capacitive node");

  const int m = static_cast<int>(keep.size());
  const int z = static_cast<int>(drop.size());
  auto sub = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = G(rows[i], cols[j]);
    return out;
  };
  auto subv = [&](const Eigen::VectorXd& v, const std::vector<int>& rows) {
    Eigen::VectorXd out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out(i) = v(rows[i]);
    return out;
  };

  NodalSystem sys;
  sys.G = sub(keep, keep);
  sys.b = subv(b, keep);
  sys.C = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    sys.C(i, i) = cap[unknowns[keep[i]]];
    sys.state_nodes.push_back(unknowns[keep[i]]);
  }
  sys.e_out = Eigen::VectorXd::Zero(m);

  const int out_row = row_of[net.output_node];
  if (z == 0) {
    sys.e_out(std::find(keep.begin(), keep.end(), out_row) - keep.begin()) = 1.0;
  } else {
    const Eigen::MatrixXd Gzz = sub(drop, drop);
    const Eigen::MatrixXd Gzc = sub(drop, keep);
    const Eigen::VectorXd bz = subv(b, drop);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Gzz);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        (ldlt.vectorD().array() <= 0.0).any())
      throw Error(ErrorCode::SingularSystem, "floating capacitance-free node");
    const Eigen::MatrixXd X = ldlt.solve(Gzc);  // v_z = Gzz^-1 (bz u - Gzc v_c)
    const Eigen::VectorXd xb = ldlt.solve(bz);
    sys.G -= Gzc.transpose() * X;
    sys.b -= Gzc.transpose() * xb;
    sys.G = 0.5 * (sys.G + sys.G.transpose());

    auto it = std::find(keep.begin(), keep.end(), out_row);
    if (it != keep.end()) {
      sys.e_out(it - keep.begin()) = 1.0;
    } else {
      const int zr = static_cast<int>(std::find(drop.begin(), drop.end(), out_row) - drop.begin());
      sys.e_out = -X.row(zr).transpose();
      const double feedthrough = xb(zr);
      if (std::abs(feedthrough) > 1e-12)
        throw Error(ErrorCode::InvalidArgument,
                    "output pin is resistively coupled to the driver (no strictly proper H)");
    }
  }

  Eigen::LLT<Eigen::MatrixXd> llt(sys.G);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularSystem, "some capacitive node has no DC path to the driver");
  return sys;
}

std::complex<double> direct_response(const NodalSystem& sys, std::complex<double> s) {
  const Eigen::MatrixXcd A = sys.G.cast<std::complex<double>>() + s * sys.C.cast<std::complex<double>>();
  const Eigen::VectorXcd x = A.partialPivLu().solve(sys.b.cast<std::complex<double>>());
  return sys.e_out.cast<std::complex<double>>().dot(x);
}

TransferFunction extract_tf(const NodalSystem& sys) {
  const int m = sys.size();
  // Symmetric scaling C^-1/2 turns the pencil (G, -C) into a standard
  // eigenproblem whose eigenvalues are the poles.
  const Eigen::VectorXd scale = sys.C.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd M = -(scale.asDiagonal() * sys.G * scale.asDiagonal());
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, true);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::SingularSystem, "eigensolver did not converge");

  const Eigen::VectorXcd lambda = es.eigenvalues();
  for (int i = 0; i < m; ++i) {
    const double re = lambda(i).real();
    const double im = lambda(i).imag();
    if (std::abs(im) > 1e-9 * std::abs(re))
      throw Error(ErrorCode::ComplexPoleDetected,
                  "pole " + std::to_string(re) + "+" + std::to_string(im) + "j");
    if (!(re < 0.0))
      throw Error(ErrorCode::PositivePoleDetected, "pole " + std::to_string(re));
  }

  // H(s) = c' V (sI - L)^-1 V^-1 d
  const Eigen::MatrixXcd V = es.eigenvectors();
  const Eigen::VectorXcd c = (scale.asDiagonal() * sys.e_out).cast<std::complex<double>>();
  const Eigen::VectorXcd d = (scale.asDiagonal() * sys.b).cast<std::complex<double>>();
  const Eigen::VectorXcd w = V.partialPivLu().solve(d);
  const Eigen::VectorXcd left = V.transpose() * c;

  TransferFunction tf;
  for (int i = 0; i < m; ++i)
    tf.terms.push_back({lambda(i).real(), 1, {(left(i) * w(i)).real()}});
  std::sort(tf.terms.begin(), tf.terms.end(),
            [](const PoleTerm& a, const PoleTerm& b) { return a.pole > b.pole; });

  tf.dc_gain = sys.e_out.dot(sys.G.llt().solve(sys.b));
  return tf;
}

TransferFunction extract_tf(const RcNetwork& net) { return extract_tf(assemble_system(net)); }

std::vector<double> fit_residues(const NodalSystem& sys, const std::vector<double>& poles) {
  const int m = static_cast<int>(poles.size());
  // One probe per pole at w = |p_i|, plus DC; columns scaled by |p_i|.
  std::vector<std::complex<double>> probes{0.0};
  for (double p : poles) probes.emplace_back(0.0, std::abs(p));
  const int k = static_cast<int>(probes.size());

  Eigen::MatrixXd A(2 * k, m);
  Eigen::VectorXd y(2 * k);
  for (int r = 0; r < k; ++r) {
    const std::complex<double> h = direct_response(sys, probes[r]);
    y(2 * r) = h.real();
    y(2 * r + 1) = h.imag();
    for (int i = 0; i < m; ++i) {
      const std::complex<double> a = std::abs(poles[i]) / (probes[r] - poles[i]);
      A(2 * r, i) = a.real();
      A(2 * r + 1, i) = a.imag();
    }
  }
  const Eigen::VectorXd x = A.colPivHouseholderQr().solve(y);
  std::vector<double> r(m);
  for (int i = 0; i < m; ++i) r[i] = x(i) * std::abs(poles[i]);
  return r;
}

std::vector<double> probe_frequencies(const TransferFunction& tf, int n) {
  const double lo = std::log10(1e-2 * tf.min_pole_magnitude());
  const double hi = std::log10(1e2 * tf.max_pole_magnitude());
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k)
    w[k] = std::pow(10.0, n == 1 ? lo : lo + (hi - lo) * k / (n - 1));
  return w;
}

double reconstruction_error(const TransferFunction& tf, const NodalSystem& sys, int n) {
  double worst = 0.0;
  for (double w : probe_frequencies(tf, n)) {
    const std::complex<double> s(0.0, w);
    const auto ref = direct_response(sys, s);
    worst = std::max(worst, std::abs(eval_tf(tf, s) - ref) / std::abs(ref));
  }
  return worst;
}

double reconstruction_error_peak(const TransferFunction& tf, const NodalSystem& sys, int n) {
  double worst = 0.0;
  double peak = 0.0;
  for (double w : probe_frequencies(tf, n)) {
    const std::complex<double> s(0.0, w);
    const auto ref = direct_response(sys, s);
    peak = std::max(peak, std::abs(ref));
    worst = std::max(worst, std::abs(eval_tf(tf, s) - ref));
  }
  return worst / peak;
}

}  // namespace rcwave
