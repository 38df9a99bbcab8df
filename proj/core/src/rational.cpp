#include "rcwave/rational.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "rcwave/error.hpp"

namespace rcwave {

namespace {

std::vector<double> trimmed(std::vector<double> p) {
  while (!p.empty() && p.back() == 0.0) p.pop_back();
  return p;
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

// Coefficients of p(x0 + u) in ascending powers of u.
std::vector<double> taylor_shift(std::vector<double> p, double x0) {
  const std::size_t n = p.size();
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = n - 1; i > k; --i) p[i - 1] += x0 * p[i];
  return p;
}

std::vector<std::complex<double>> roots_of(const std::vector<double>& d) {
  const int n = static_cast<int>(d.size()) - 1;
  if (n == 1) return {-d[0] / d[1]};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -d[i] / d[n];
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  std::vector<std::complex<double>> r(es.eigenvalues().data(), es.eigenvalues().data() + n);
  return r;
}

struct Cluster {
  std::complex<double> center;
  int multiplicity;
};

}  // namespace

std::vector<double> poly_from_roots(const std::vector<double>& roots, double lead) {
  std::vector<double> p{lead};
  for (double r : roots) p = poly_mul(p, {-r, 1.0});
  return p;
}

std::complex<double> eval_poly(const std::vector<double>& coeffs, std::complex<double> s) {
  std::complex<double> acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * s + *it;
  return acc;
}

std::complex<double> eval_rational(const RationalFunction& h, std::complex<double> s) {
  return eval_poly(h.numerator, s) / eval_poly(h.denominator, s);
}

TransferFunction expand_repeated(const RationalFunction& h, double tol_cluster) {
  const auto num = trimmed(h.numerator);
  const auto den = trimmed(h.denominator);
  if (den.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "denominator must have degree >= 1");
  if (num.size() >= den.size())
    throw Error(ErrorCode::InvalidArgument, "rational function is not strictly proper");

  auto roots = roots_of(den);
  std::sort(roots.begin(), roots.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() < b.imag();
  });

  std::vector<Cluster> clusters;
  std::vector<std::vector<std::complex<double>>> members;
  for (const auto& r : roots) {
    bool merged = false;
    if (tol_cluster > 0.0 && !clusters.empty()) {
      const auto& last = members.back();
      for (const auto& q : last) {
        if (std::abs(r - q) <= tol_cluster * std::max(std::abs(r), std::abs(q))) {
          merged = true;
          break;
        }
      }
    }
    if (merged) {
      members.back().push_back(r);
    } else {
      members.push_back({r});
      clusters.push_back({});
    }
  }
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    std::complex<double> mean = 0.0;
    for (const auto& r : members[i]) mean += r;
    clusters[i] = {mean / static_cast<double>(members[i].size()),
                   static_cast<int>(members[i].size())};
  }

  for (const auto& c : clusters) {
    if (std::abs(c.center.imag()) > 1e-9 * std::abs(c.center.real()))
      throw Error(ErrorCode::ComplexPoleDetected,
                  "pole " + std::to_string(c.center.real()) + "+" +
                      std::to_string(c.center.imag()) + "j");
    if (!(c.center.real() < 0.0))
      throw Error(ErrorCode::PositivePoleDetected, "pole " + std::to_string(c.center.real()));
  }

  const double lead = den.back();
  TransferFunction tf;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const double p = clusters[i].center.real();
    const int k = clusters[i].multiplicity;
    // phi(p + u) = N(p + u) / (lead * prod_{l != i} (u + p - p_l)^{k_l})
    std::vector<double> q{lead};
    for (std::size_t l = 0; l < clusters.size(); ++l) {
      if (l == i) continue;
      const double off = p - clusters[l].center.real();
      for (int rep = 0; rep < clusters[l].multiplicity; ++rep) q = poly_mul(q, {off, 1.0});
    }
    auto n_shift = taylor_shift(num, p);
    n_shift.resize(std::max<std::size_t>(n_shift.size(), k), 0.0);
    // Power-series division: c = n_shift / q, first k coefficients.
    std::vector<double> c(k, 0.0);
    for (int t = 0; t < k; ++t) {
      double acc = n_shift[t];
      for (int s = 1; s <= t && s < static_cast<int>(q.size()); ++s) acc -= q[s] * c[t - s];
      c[t] = acc / q[0];
    }
    PoleTerm term;
    term.pole = p;
    term.multiplicity = k;
    term.residues.resize(k);
    for (int j = 1; j <= k; ++j) term.residues[j - 1] = c[k - j];
    tf.terms.push_back(std::move(term));
  }
  tf.dc_gain = dc_gain_of(tf.terms);
  return tf;
}

}  // namespace rcwave
