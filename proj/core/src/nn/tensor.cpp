#include "rcwave/nn/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include "rcwave/error.hpp"
#include "rcwave/random.hpp"

namespace rcwave::nn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

// Row-wise softmax of `scores` in place; causal rows only see columns <= row.
template <class Real>
void softmax_rows(Matrix<Real>& s, bool causal) {
  const Eigen::Index n = s.rows();
  const Eigen::Index m = s.cols();
  if (causal)
    for (Eigen::Index i = 0; i + 1 < m && i < n; ++i)
      s.row(i).tail(m - i - 1).setConstant(-std::numeric_limits<Real>::infinity());
  const Eigen::Matrix<Real, Eigen::Dynamic, 1> mx = s.rowwise().maxCoeff();
  s = (s.colwise() - mx).array().exp();
  const Eigen::Matrix<Real, Eigen::Dynamic, 1> inv = s.rowwise().sum().cwiseInverse();
  s = inv.asDiagonal() * s;
}

// erf over a whole array. The float version is a clamped odd rational fit
// (error near float epsilon) that the compiler can vectorize.
inline void erf_inplace(float* v, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) {
    const float x = std::min(4.0f, std::max(-4.0f, v[i]));
    const float x2 = x * x;
    float p = -2.72614225801306e-10f;
    p = p * x2 + 2.77068142495902e-08f;
    p = p * x2 + -2.10102402082508e-06f;
    p = p * x2 + -5.69250639462346e-05f;
    p = p * x2 + -7.34990630326855e-04f;
    p = p * x2 + -2.95459980854025e-03f;
    p = p * x2 + -1.60960333262415e-02f;
    float q = -1.45660718464996e-05f;
    q = q * x2 + -2.13374055278905e-04f;
    q = q * x2 + -1.68282697438203e-03f;
    q = q * x2 + -7.37332916720468e-03f;
    q = q * x2 + -1.42647390514189e-02f;
    v[i] = x * p / q;
  }
}

inline void erf_inplace(double* v, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) v[i] = std::erf(v[i]);
}

}  // namespace

template <class Real>
Var Tape<Real>::push(Mat value, bool needs_grad) {
  Node n;
  n.rows = static_cast<int>(value.rows());
  n.cols = static_cast<int>(value.cols());
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <class Real>
Var Tape<Real>::constant(Mat value) {
  return push(std::move(value), false);
}

template <class Real>
Var Tape<Real>::variable(Mat value) {
  return push(std::move(value), true);
}

template <class Real>
Var Tape<Real>::parameter(const Real* data, Real* grad, int rows, int cols) {
  Node n;
  n.ext_value = data;
  n.ext_grad = grad;
  n.rows = rows;
  n.cols = cols;
  n.needs_grad = grad != nullptr;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <class Real>
ConstMatrixMap<Real> Tape<Real>::value(Var v) const {
  const Node& n = nodes_[v.id];
  return ConstMatrixMap<Real>(data(v.id), n.rows, n.cols);
}

template <class Real>
ConstMatrixMap<Real> Tape<Real>::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (!n.needs_grad || !backward_done_)
    throw Error(ErrorCode::InvalidArgument, "no gradient recorded for this value");
  if (n.ext_grad) return ConstMatrixMap<Real>(n.ext_grad, n.rows, n.cols);
  return ConstMatrixMap<Real>(n.grad.data(), n.rows, n.cols);
}

template <class Real>
MatrixMap<Real> Tape<Real>::grad_ref(int id) {
  Node& n = nodes_[id];
  if (n.ext_grad) return MatrixMap<Real>(n.ext_grad, n.rows, n.cols);
  return MatrixMap<Real>(n.grad.data(), n.rows, n.cols);
}

template <class Real>
Var Tape<Real>::matmul(Var a, Var b) {
  require(cols(a) == rows(b), "matmul: inner dimensions differ");
  const bool ng = tracks_grad(a) || tracks_grad(b);
  Var out = push(value(a) * value(b), ng);
  if (ng) {
    nodes_[out.id].back = [this, a, b, out] {
      auto g = grad_ref(out.id);
      if (tracks_grad(a)) grad_ref(a.id).noalias() += g * value(b).transpose();
      if (tracks_grad(b)) grad_ref(b.id).noalias() += value(a).transpose() * g;
    };
  }
  return out;
}

template <class Real>
Var Tape<Real>::add_row(Var x, Var bias) {
  require(rows(bias) == 1 && cols(bias) == cols(x), "add_row: bias must be [1, cols]");
  const bool ng = tracks_grad(x) || tracks_grad(bias);
  Mat y = value(x);
  y.rowwise() += value(bias).row(0);
  Var out = push(std::move(y), ng);
  if (ng) {
    nodes_[out.id].back = [this, x, bias, out] {
      auto g = grad_ref(out.id);
      if (tracks_grad(x)) grad_ref(x.id) += g;
      if (tracks_grad(bias)) grad_ref(bias.id) += g.colwise().sum();
    };
  }
  return out;
}

template <class Real>
Var Tape<Real>::add(Var a, Var b) {
  require(rows(a) == rows(b) && cols(a) == cols(b), "add: shapes differ");
  const bool ng = tracks_grad(a) || tracks_grad(b);
  Var out = push(value(a) + value(b), ng);
  if (ng) {
    nodes_[out.id].back = [this, a, b, out] {
      auto g = grad_ref(out.id);
      if (tracks_grad(a)) grad_ref(a.id) += g;
      if (tracks_grad(b)) grad_ref(b.id) += g;
    };
  }
  return out;
}

template <class Real>
Var Tape<Real>::mul(Var a, Var b) {
  require(rows(a) == rows(b) && cols(a) == cols(b), "mul: shapes differ");
  const bool ng = tracks_grad(a) || tracks_grad(b);
  Var out = push(value(a).cwiseProduct(value(b)), ng);
  if (ng) {
    nodes_[out.id].back = [this, a, b, out] {
      auto g = grad_ref(out.id);
      if (tracks_grad(a)) grad_ref(a.id) += g.cwiseProduct(value(b));
      if (tracks_grad(b)) grad_ref(b.id) += g.cwiseProduct(value(a));
    };
  }
  return out;
}

template <class Real>
Var Tape<Real>::relu(Var x) {
  const bool ng = tracks_grad(x);
  Var out = push(value(x).cwiseMax(Real(0)), ng);
  if (ng) {
    nodes_[out.id].back = [this, x, out] {
      auto g = grad_ref(out.id);
      auto xv = value(x);
      grad_ref(x.id) += (xv.array() > Real(0)).select(g, Real(0)).matrix();
    };
  }
  return out;
}

template <class Real>
Var Tape<Real>::gelu(Var x) {
  const bool ng = tracks_grad(x);
  const Real inv_sqrt2 = Real(0.70710678118654752440);
  Mat cdf = value(x) * inv_sqrt2;
  erf_inplace(cdf.data(), cdf.size());
  cdf.array() = Real(0.5) * (cdf.array() + Real(1));
  Var out = push(value(x).cwiseProduct(cdf), ng);
  if (ng) {
    nodes_[out.id].back = [this, x, out, cdf = std::move(cdf)] {
      const Real inv_sqrt2pi = Real(0.39894228040143267794);
      auto xa = value(x).array();
      const auto pdf = (xa.square() * Real(-0.5)).exp() * inv_sqrt2pi;
      grad_ref(x.id).array() += grad_ref(out.id).array() * (cdf.array() + xa * pdf);
    };
  }
  return out;
}

template <class Real>
Var Tape<Real>::dropout(Var x, Real p, Rng& rng) {
  if (!(p > 0)) return x;
  if (p >= 1) throw Error(ErrorCode::InvalidArgument, "dropout probability must be < 1");
  const Real keep = Real(1) / (Real(1) - p);
  // Two 32-bit draws per generator step; drop when below p * 2^32.
  const auto cut = static_cast<std::uint64_t>(static_cast<double>(p) * 4294967296.0);
  Mat mask(rows(x), cols(x));
  const Eigen::Index n = mask.size();
  for (Eigen::Index i = 0; i < n; i += 2) {
    const std::uint64_t r = rng.next();
    mask.data()[i] = (r & 0xffffffffULL) < cut ? Real(0) : keep;
    if (i + 1 < n) mask.data()[i + 1] = (r >> 32) < cut ? Real(0) : keep;
  }
  const bool ng = tracks_grad(x);
  Var out = push(value(x).cwiseProduct(mask), ng);
  if (ng) {
    nodes_[out.id].back = [this, x, out, mask = std::move(mask)] {
      grad_ref(x.id) += grad_ref(out.id).cwiseProduct(mask);
    };
  }
  return out;
}

template <class Real>
Var Tape<Real>::layer_norm(Var x, Var gain, Var bias, Real eps) {
  const int n = rows(x);
  const int d = cols(x);
  require(rows(gain) == 1 && cols(gain) == d && rows(bias) == 1 && cols(bias) == d,
          "layer_norm: gain and bias must be [1, cols]");
  auto xv = value(x);
  Mat xhat(n, d);
  Eigen::Matrix<Real, Eigen::Dynamic, 1> inv_sigma(n);
  for (int i = 0; i < n; ++i) {
    const Real mu = xv.row(i).mean();
    const Real var = (xv.row(i).array() - mu).square().mean();
    inv_sigma(i) = Real(1) / std::sqrt(var + eps);
    xhat.row(i) = (xv.row(i).array() - mu) * inv_sigma(i);
  }
  Mat y = xhat.array().rowwise() * value(gain).row(0).array();
  y.rowwise() += value(bias).row(0);
  const bool ng = tracks_grad(x) || tracks_grad(gain) || tracks_grad(bias);
  Var out = push(std::move(y), ng);
  if (ng) {
    nodes_[out.id].back = [this, x, gain, bias, out, xhat = std::move(xhat),
                           inv_sigma = std::move(inv_sigma)] {
      auto g = grad_ref(out.id);
      if (tracks_grad(gain)) grad_ref(gain.id) += g.cwiseProduct(xhat).colwise().sum();
      if (tracks_grad(bias)) grad_ref(bias.id) += g.colwise().sum();
      if (!tracks_grad(x)) return;
      auto gx = grad_ref(x.id);
      const auto gam = value(gain).row(0).array();
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const Eigen::Array<Real, 1, Eigen::Dynamic> dxh = g.row(i).array() * gam;
        const Real m1 = dxh.mean();
        const Real m2 = (dxh * xhat.row(i).array()).mean();
        gx.row(i).array() += inv_sigma(i) * (dxh - m1 - xhat.row(i).array() * m2);
      }
    };
  }
  return out;
}

template <class Real>
Var Tape<Real>::attention(Var q, Var k, Var v, int heads, Real scale, bool causal,
                          std::vector<Mat>* probs, int segments) {
  const int d = cols(q);
  require(segments > 0 && rows(q) % segments == 0 && rows(k) % segments == 0,
          "attention: rows not divisible into segments");
  const int tq = rows(q) / segments;
  const int tk = rows(k) / segments;
  require(cols(k) == d && cols(v) == d && rows(v) == rows(k), "attention: q/k/v shapes differ");
  require(heads > 0 && d % heads == 0, "attention: width not divisible by heads");
  const int dh = d / heads;
  auto qv = value(q);
  auto kv = value(k);
  auto vv = value(v);
  std::vector<Mat> p(static_cast<std::size_t>(segments) * heads);
  Mat y(rows(q), d);
  Mat qh, kh, vh, yh;
  for (int s = 0; s < segments; ++s)
    for (int h = 0; h < heads; ++h) {
      Mat& ph = p[s * heads + h];
      qh = qv.block(s * tq, h * dh, tq, dh) * scale;
      kh = kv.block(s * tk, h * dh, tk, dh);
      vh = vv.block(s * tk, h * dh, tk, dh);
      ph.noalias() = qh * kh.transpose();
      softmax_rows(ph, causal);
      yh.noalias() = ph * vh;
      y.block(s * tq, h * dh, tq, dh) = yh;
    }
  if (probs) *probs = p;
  const bool ng = tracks_grad(q) || tracks_grad(k) || tracks_grad(v);
  Var out = push(std::move(y), ng);
  if (ng) {
    nodes_[out.id].back = [this, q, k, v, out, heads, dh, tq, tk, segments, scale,
                           p = std::move(p)] {
      auto g = grad_ref(out.id);
      auto qv = value(q);
      auto kv = value(k);
      auto vv = value(v);
      Mat dp, ds, gh, part;
      for (int s = 0; s < segments; ++s)
        for (int h = 0; h < heads; ++h) {
          const Mat& ph = p[s * heads + h];
          gh = g.block(s * tq, h * dh, tq, dh);
          if (tracks_grad(v)) {
            part.noalias() = ph.transpose() * gh;
            grad_ref(v.id).block(s * tk, h * dh, tk, dh) += part;
          }
          if (!tracks_grad(q) && !tracks_grad(k)) continue;
          part = vv.block(s * tk, h * dh, tk, dh);
          dp.noalias() = gh * part.transpose();
          const Eigen::Matrix<Real, Eigen::Dynamic, 1> rowdot = dp.cwiseProduct(ph).rowwise().sum();
          ds = ph.cwiseProduct(dp.colwise() - rowdot) * scale;
          if (tracks_grad(q)) {
            part = kv.block(s * tk, h * dh, tk, dh);
            gh.noalias() = ds * part;
            grad_ref(q.id).block(s * tq, h * dh, tq, dh) += gh;
          }
          if (tracks_grad(k)) {
            part = qv.block(s * tq, h * dh, tq, dh);
            gh.noalias() = ds.transpose() * part;
            grad_ref(k.id).block(s * tk, h * dh, tk, dh) += gh;
          }
        }
    };
  }
  return out;
}

template <class Real>
Var Tape<Real>::im2col(Var x, int kernel, bool same_padding, int segments) {
  const int d = cols(x);
  require(kernel > 0, "im2col: kernel must be positive");
  require(segments > 0 && rows(x) % segments == 0, "im2col: rows not divisible into segments");
  const int l = rows(x) / segments;
  const int seg_out = same_padding ? l : l - kernel + 1;
  require(seg_out > 0, "im2col: sequence shorter than kernel");
  const int offset = same_padding ? (kernel - 1) / 2 : 0;
  auto xv = value(x);
  Mat y = Mat::Zero(static_cast<Eigen::Index>(seg_out) * segments,
                    static_cast<Eigen::Index>(d) * kernel);
  for (int sg = 0; sg < segments; ++sg)
    for (int t = 0; t < seg_out; ++t)
      for (int s = 0; s < kernel; ++s) {
        const int src = t + s - offset;
        if (src >= 0 && src < l) y.row(sg * seg_out + t).segment(s * d, d) = xv.row(sg * l + src);
      }
  const bool ng = tracks_grad(x);
  Var out = push(std::move(y), ng);
  if (ng) {
    nodes_[out.id].back = [this, x, out, kernel, offset, seg_out, l, d, segments] {
      auto g = grad_ref(out.id);
      auto gx = grad_ref(x.id);
      for (int sg = 0; sg < segments; ++sg)
        for (int t = 0; t < seg_out; ++t)
          for (int s = 0; s < kernel; ++s) {
            const int src = t + s - offset;
            if (src >= 0 && src < l) gx.row(sg * l + src) += g.row(sg * seg_out + t).segment(s * d, d);
          }
    };
  }
  return out;
}

template <class Real>
Var Tape<Real>::mse(Var pred, const Mat& target) {
  require(rows(pred) == target.rows() && cols(pred) == target.cols(), "mse: shapes differ");
  Mat diff = value(pred) - target;
  const Real n = static_cast<Real>(diff.size());
  Mat loss(1, 1);
  loss(0, 0) = diff.squaredNorm() / n;
  const bool ng = tracks_grad(pred);
  Var out = push(std::move(loss), ng);
  if (ng) {
    nodes_[out.id].back = [this, pred, out, n, diff = std::move(diff)] {
      grad_ref(pred.id) += (Real(2) * grad_ref(out.id)(0, 0) / n) * diff;
    };
  }
  return out;
}

template <class Real>
void Tape<Real>::backward(Var loss) {
  if (rows(loss) != 1 || cols(loss) != 1)
    throw Error(ErrorCode::ShapeMismatch, "backward: loss must be a scalar");
  for (Node& n : nodes_)
    if (n.needs_grad && !n.ext_grad) n.grad = Mat::Zero(n.rows, n.cols);
  backward_done_ = true;
  if (!tracks_grad(loss)) return;
  grad_ref(loss.id)(0, 0) += Real(1);
  for (int i = loss.id; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back();
}

template class Tape<float>;
template class Tape<double>;

template <class Real>
Matrix<Real> positional_encoding(int rows, int dim) {
  Matrix<Real> pe(rows, dim);
  for (int t = 0; t < rows; ++t)
    for (int c = 0; c < dim; ++c) {
      const int i2 = c - (c % 2);
      const double angle = t / std::pow(10000.0, static_cast<double>(i2) / dim);
      pe(t, c) = static_cast<Real>(c % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  return pe;
}

template <class Real>
Matrix<Real> attention_probs(const Matrix<Real>& q, const Matrix<Real>& k, Real scale,
                             bool causal) {
  Matrix<Real> p = q * k.transpose();
  p *= scale;
  softmax_rows(p, causal);
  return p;
}

template Matrix<float> positional_encoding<float>(int, int);
template Matrix<double> positional_encoding<double>(int, int);
template Matrix<float> attention_probs<float>(const Matrix<float>&, const Matrix<float>&, float,
                                              bool);
template Matrix<double> attention_probs<double>(const Matrix<double>&, const Matrix<double>&,
                                                double, bool);

}  // namespace rcwave::nn
