#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rcwave/features.hpp"
#include "rcwave/nn/tensor.hpp"

namespace rcwave::nn {

struct ModelConfig {
  int d_embed = 64;
  int n_heads = 4;
  int n_enc_layers = 3;
  int n_dec_layers = 3;
  int d_ff = 256;
  int conv_channels = 64;  // K
  int kernel_size = 3;     // S
  int hidden = 128;        // M
  int seq_len = 128;       // L
  int target_len = 128;    // T
  double dropout = 0.1;
  std::uint64_t seed = 0;
  int n_terms = 8;  // triplet rows per record
  // Zero padding keeps the CNN branch at length L so it can be fused with the
  // encoder output. Valid padding (L - S + 1) is only usable stage-alone.
  bool same_padding = true;

  bool operator==(const ModelConfig&) const = default;
};

/// Throws InvalidArgument when the config is unusable.
void validate(const ModelConfig& cfg);

/// Per-step input width: v_in, t_norm, device one-hot, 3 * n_terms triplet
/// values, plus one channel carrying the base prediction when `extra_channel`.
int input_width(const ModelConfig& cfg, bool extra_channel);

enum class InitKind { Weight, Zero, One };

struct ParamSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  InitKind init = InitKind::Weight;
};

/// Flat parameter order. Activations are row vectors, so weights are stored
/// [in, out] and applied as x * W.
///
///   embed.W [d_in, D], embed.b
///   cnn.W_conv [S*D, K] (row s*D + c = tap s of input channel c), cnn.b_conv,
///   cnn.W1 [K, M], cnn.b1, cnn.W2 [M, D], cnn.b2
///   enc<i>.{W_Q, W_K, W_V, W_O, ln1.g, ln1.b, ffn.W1, ffn.b1, ffn.W2, ffn.b2, ln2.g, ln2.b}
///   fuse.W_f [D, D], fuse.b_f
///   dec<i>.{W_QKV, ln1.g, ln1.b, cross.W_Q, cross.W_K, cross.W_V, cross.W_O,
///           ln2.g, ln2.b, ffn.W1, ffn.b1, ffn.W2, ffn.b2, ln3.g, ln3.b}
///   head.W_out [D, 1], head.b_out [1, 1]
///
/// Biases and layer-norm parameters are [1, n].
class ParamLayout {
 public:
  ParamLayout() = default;
  ParamLayout(const ModelConfig& cfg, bool extra_channel);

  const std::vector<ParamSpec>& specs() const { return specs_; }
  std::size_t total() const { return total_; }
  int index(const std::string& name) const;
  const ParamSpec& at(const std::string& name) const { return specs_[index(name)]; }

 private:
  void add(std::string name, int rows, int cols, InitKind init);

  std::vector<ParamSpec> specs_;
  std::unordered_map<std::string, int> by_name_;
  std::size_t total_ = 0;
};

/// Per-call switches for one forward pass.
template <class Real>
struct Pass {
  bool training = false;
  Rng* rng = nullptr;  // required when training with dropout > 0
  /// Number of samples stacked along the rows.
  int batch = 1;
  /// When set, every attention softmax matrix is appended here.
  std::vector<Matrix<Real>>* attention = nullptr;
};

/// The hybrid CNN/Transformer regressor: embed -> {encoder, CNN} -> fuse ->
/// decoder -> linear head. Parameters live in one flat array.
template <class Real>
class HybridNet {
 public:
  /// Parameter handles on one tape, in layout order.
  struct Bound {
    std::vector<Var> vars;
    const ParamLayout* layout = nullptr;
    Var operator()(const std::string& name) const { return vars[layout->index(name)]; }
  };

  HybridNet() = default;
  HybridNet(const ModelConfig& cfg, bool extra_channel);

  const ModelConfig& config() const { return cfg_; }
  const ParamLayout& layout() const { return layout_; }
  bool extra_channel() const { return extra_channel_; }
  ParamVector<Real>& params() { return params_; }
  const ParamVector<Real>& params() const { return params_; }

  /// Uniform(-sqrt(3/fan_in), sqrt(3/fan_in)) weights, zero biases, unit
  /// layer-norm gains, zero output head.
  void initialize(std::uint64_t seed);

  /// grad == nullptr binds frozen parameters; otherwise grad has total() slots.
  Bound bind(Tape<Real>& tape, Real* grad) const;

  Var embed(Tape<Real>& tape, const Bound& p, Var x) const;
  Var cnn_branch(Tape<Real>& tape, const Bound& p, Var h, int batch = 1) const;
  Var encoder_stack(Tape<Real>& tape, const Bound& p, Var h, const Pass<Real>& pass) const;
  Var fuse(Tape<Real>& tape, const Bound& p, Var enc, Var cnn) const;
  Var decoder_stack(Tape<Real>& tape, const Bound& p, Var y, Var h,
                    const Pass<Real>& pass) const;
  Var head(Tape<Real>& tape, const Bound& p, Var y) const;
  /// Decoder query sequence: the positional table alone, [T, D] per sample.
  Matrix<Real> decoder_query(int batch = 1) const;
  /// Whole pipeline; x is [B*L, d_in] (B samples stacked), result is [B*T, 1].
  Var forward(Tape<Real>& tape, const Bound& p, Var x, const Pass<Real>& pass) const;

  /// Inference on one input matrix.
  std::vector<double> predict(const Matrix<Real>& x) const;
  /// Inference on several inputs at once; one waveform per input.
  std::vector<std::vector<double>> predict(const std::vector<Matrix<Real>>& xs) const;

 private:
  Var dropout(Tape<Real>& tape, Var x, const Pass<Real>& pass) const;

  ModelConfig cfg_;
  bool extra_channel_ = false;
  ParamLayout layout_;
  ParamVector<Real> params_;
  Matrix<Real> pe_input_;
  Matrix<Real> pe_query_;
};

extern template class HybridNet<float>;
extern template class HybridNet<double>;

/// Per-step input matrix [L, d_in] for a record. `base` (length L) is the
/// extra channel of the correction network. ShapeMismatch when the record
/// does not fit the config.
template <class Real>
Matrix<Real> make_input(const features::FeatureRecord& r, const ModelConfig& cfg,
                        const std::vector<double>* base = nullptr);

/// Row-wise concatenation of equally wide matrices.
template <class Real>
Matrix<Real> stack_rows(const std::vector<const Matrix<Real>*>& parts);

/// Column matrix [n, 1] from samples.
template <class Real>
Matrix<Real> column(const std::vector<double>& samples);

}  // namespace rcwave::nn
