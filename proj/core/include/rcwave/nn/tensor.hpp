#pragma once

// Reverse-mode autodiff over 2-D row-major matrices. A Tape records every
// operation of one forward pass; backward() replays them in reverse.
// Sequences are [time, feature] matrices, one tape per sample.

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace rcwave {
class Rng;
}

namespace rcwave::nn {

template <class Real>
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using MatrixMap = Eigen::Map<Matrix<Real>>;
template <class Real>
using ConstMatrixMap = Eigen::Map<const Matrix<Real>>;
/// Flat parameter or gradient storage. A fixed base alignment keeps Eigen's
/// split between packet and scalar code, and so the rounding, identical
/// from one allocation to the next.
template <class Real>
using ParamVector = std::vector<Real, Eigen::aligned_allocator<Real>>;

struct Var {
  int id = -1;
};

template <class Real>
class Tape {
 public:
  using Mat = Matrix<Real>;

  /// Value without gradient.
  Var constant(Mat value);
  /// Value whose gradient is collected (readable through grad()).
  Var variable(Mat value);
  /// View onto external storage. Gradients accumulate into `grad` unless it
  /// is null (frozen parameter).
  Var parameter(const Real* data, Real* grad, int rows, int cols);

  ConstMatrixMap<Real> value(Var v) const;
  /// Gradient of a variable or parameter; only valid after backward().
  ConstMatrixMap<Real> grad(Var v) const;
  int rows(Var v) const { return nodes_[v.id].rows; }
  int cols(Var v) const { return nodes_[v.id].cols; }
  bool tracks_grad(Var v) const { return nodes_[v.id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  /// x + bias with bias [1, cols] broadcast over rows.
  Var add_row(Var x, Var bias);
  Var add(Var a, Var b);
  /// Element-wise product.
  Var mul(Var a, Var b);
  Var relu(Var x);
  /// Exact (erf) GELU.
  Var gelu(Var x);
  /// Inverted dropout with drop probability p. p == 0 returns x unchanged.
  Var dropout(Var x, Real p, Rng& rng);
  /// Row-wise layer normalization with gain/bias [1, cols].
  Var layer_norm(Var x, Var gain, Var bias, Real eps = Real(1e-5));
  /// Multi-head scaled dot-product attention. q [Tq, D], k and v [Tk, D];
  /// heads split D evenly. causal masks key j > query i. With segments > 1
  /// the rows hold that many independent sequences stacked back to back and
  /// attention never crosses a segment. If `probs` is given it receives the
  /// softmax matrix of every segment and head ([Tq, Tk] each, segment-major).
  Var attention(Var q, Var k, Var v, int heads, Real scale, bool causal,
                std::vector<Mat>* probs = nullptr, int segments = 1);
  /// Patches for a stride-1 1-D convolution over rows: [L, D] ->
  /// [L_out, D * kernel], column s*D + c holding x[t + s - offset, c].
  /// same_padding keeps L_out = L with zero fill; otherwise L_out = L - kernel + 1.
  /// Stacked segments are patched independently.
  Var im2col(Var x, int kernel, bool same_padding, int segments = 1);
  /// mean((pred - target)^2) as a [1, 1] value; target is not differentiated.
  Var mse(Var pred, const Mat& target);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be [1, 1].
  void backward(Var loss);

 private:
  struct Node {
    Mat value;
    Mat grad;
    const Real* ext_value = nullptr;
    Real* ext_grad = nullptr;
    int rows = 0;
    int cols = 0;
    bool needs_grad = false;
    std::function<void()> back;
  };

  Var push(Mat value, bool needs_grad);
  MatrixMap<Real> grad_ref(int id);
  const Real* data(int id) const {
    return nodes_[id].ext_value ? nodes_[id].ext_value : nodes_[id].value.data();
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

extern template class Tape<float>;
extern template class Tape<double>;

/// Sinusoidal table: row t, column 2i -> sin(t / 10000^(2i/d)),
/// column 2i+1 -> cos of the same angle.
template <class Real>
Matrix<Real> positional_encoding(int rows, int dim);

/// Softmax of q k' * scale per row (optionally causal), for inspection.
template <class Real>
Matrix<Real> attention_probs(const Matrix<Real>& q, const Matrix<Real>& k, Real scale,
                             bool causal);

}  // namespace rcwave::nn
