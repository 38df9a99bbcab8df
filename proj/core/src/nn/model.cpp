#include "rcwave/nn/model.hpp"

#include <cmath>
#include <string>

#include "rcwave/error.hpp"
#include "rcwave/random.hpp"

namespace rcwave::nn {

void validate(const ModelConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (c.d_embed <= 0 || c.n_heads <= 0 || c.d_ff <= 0 || c.conv_channels <= 0 ||
      c.hidden <= 0 || c.seq_len <= 0 || c.target_len <= 0 || c.n_terms <= 0)
    fail("model dimensions must be positive");
  if (c.n_enc_layers < 0 || c.n_dec_layers < 0) fail("layer counts must be non-negative");
  if (c.d_embed % c.n_heads != 0) fail("d_embed must be divisible by n_heads");
  if (c.kernel_size <= 0 || c.kernel_size % 2 == 0) fail("kernel_size must be odd");
  if (c.seq_len < c.kernel_size) fail("seq_len shorter than kernel_size");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) fail("dropout must be in [0, 1)");
}

int input_width(const ModelConfig& cfg, bool extra_channel) {
  return 2 + features::kDeviceCount + 3 * cfg.n_terms + (extra_channel ? 1 : 0);
}

void ParamLayout::add(std::string name, int rows, int cols, InitKind init) {
  by_name_.emplace(name, static_cast<int>(specs_.size()));
  specs_.push_back(ParamSpec{std::move(name), rows, cols, total_, init});
  total_ += static_cast<std::size_t>(rows) * cols;
}

ParamLayout::ParamLayout(const ModelConfig& c, bool extra_channel) {
  const int d = c.d_embed;
  const auto W = InitKind::Weight;
  const auto Z = InitKind::Zero;
  const auto O = InitKind::One;
  add("embed.W", input_width(c, extra_channel), d, W);
  add("embed.b", 1, d, Z);
  add("cnn.W_conv", c.kernel_size * d, c.conv_channels, W);
  add("cnn.b_conv", 1, c.conv_channels, Z);
  add("cnn.W1", c.conv_channels, c.hidden, W);
  add("cnn.b1", 1, c.hidden, Z);
  add("cnn.W2", c.hidden, d, W);
  add("cnn.b2", 1, d, Z);
  for (int i = 0; i < c.n_enc_layers; ++i) {
    const std::string p = "enc" + std::to_string(i) + ".";
    for (const char* m : {"W_Q", "W_K", "W_V", "W_O"}) add(p + m, d, d, W);
    add(p + "ln1.g", 1, d, O);
    add(p + "ln1.b", 1, d, Z);
    add(p + "ffn.W1", d, c.d_ff, W);
    add(p + "ffn.b1", 1, c.d_ff, Z);
    add(p + "ffn.W2", c.d_ff, d, W);
    add(p + "ffn.b2", 1, d, Z);
    add(p + "ln2.g", 1, d, O);
    add(p + "ln2.b", 1, d, Z);
  }
  add("fuse.W_f", d, d, W);
  add("fuse.b_f", 1, d, Z);
  for (int i = 0; i < c.n_dec_layers; ++i) {
    const std::string p = "dec" + std::to_string(i) + ".";
    add(p + "W_QKV", d, d, W);
    add(p + "ln1.g", 1, d, O);
    add(p + "ln1.b", 1, d, Z);
    for (const char* m : {"cross.W_Q", "cross.W_K", "cross.W_V", "cross.W_O"}) add(p + m, d, d, W);
    add(p + "ln2.g", 1, d, O);
    add(p + "ln2.b", 1, d, Z);
    add(p + "ffn.W1", d, c.d_ff, W);
    add(p + "ffn.b1", 1, c.d_ff, Z);
    add(p + "ffn.W2", c.d_ff, d, W);
    add(p + "ffn.b2", 1, d, Z);
    add(p + "ln3.g", 1, d, O);
    add(p + "ln3.b", 1, d, Z);
  }
  add("head.W_out", d, 1, Z);
  add("head.b_out", 1, 1, Z);
}

int ParamLayout::index(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw Error(ErrorCode::InvalidArgument, "unknown parameter " + name);
  return it->second;
}

template <class Real>
HybridNet<Real>::HybridNet(const ModelConfig& cfg, bool extra_channel)
    : cfg_(cfg), extra_channel_(extra_channel) {
  validate(cfg_);
  layout_ = ParamLayout(cfg_, extra_channel_);
  params_.assign(layout_.total(), Real(0));
  pe_input_ = positional_encoding<Real>(cfg_.seq_len, cfg_.d_embed);
  pe_query_ = positional_encoding<Real>(cfg_.target_len, cfg_.d_embed);
  initialize(mix_seed(cfg_.seed, extra_channel_ ? 2 : 1));
}

template <class Real>
void HybridNet<Real>::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (const ParamSpec& s : layout_.specs()) {
    Real* w = params_.data() + s.offset;
    const std::size_t n = static_cast<std::size_t>(s.rows) * s.cols;
    switch (s.init) {
      case InitKind::Zero:
        std::fill(w, w + n, Real(0));
        break;
      case InitKind::One:
        std::fill(w, w + n, Real(1));
        break;
      case InitKind::Weight: {
        const double bound = std::sqrt(3.0) / std::sqrt(static_cast<double>(s.rows));
        for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<Real>(rng.uniform(-bound, bound));
        break;
      }
    }
  }
}

template <class Real>
typename HybridNet<Real>::Bound HybridNet<Real>::bind(Tape<Real>& tape, Real* grad) const {
  Bound b;
  b.layout = &layout_;
  b.vars.reserve(layout_.specs().size());
  for (const ParamSpec& s : layout_.specs())
    b.vars.push_back(tape.parameter(params_.data() + s.offset, grad ? grad + s.offset : nullptr,
                                    s.rows, s.cols));
  return b;
}

template <class Real>
Var HybridNet<Real>::dropout(Tape<Real>& tape, Var x, const Pass<Real>& pass) const {
  if (!pass.training || cfg_.dropout <= 0.0) return x;
  if (!pass.rng) throw Error(ErrorCode::InvalidArgument, "training pass without a generator");
  return tape.dropout(x, static_cast<Real>(cfg_.dropout), *pass.rng);
}

template <class Real>
Var HybridNet<Real>::embed(Tape<Real>& t, const Bound& p, Var x) const {
  if (t.rows(x) == 0 || t.rows(x) % cfg_.seq_len != 0 ||
      t.cols(x) != input_width(cfg_, extra_channel_))
    throw Error(ErrorCode::ShapeMismatch, "embedding input must be [L, d_in] per sample");
  Var h = t.relu(t.add_row(t.matmul(x, p("embed.W")), p("embed.b")));
  const int batch = t.rows(x) / cfg_.seq_len;
  return t.add(h, t.constant(pe_input_.replicate(batch, 1)));
}

template <class Real>
Var HybridNet<Real>::cnn_branch(Tape<Real>& t, const Bound& p, Var h, int batch) const {
  if (t.cols(h) != cfg_.d_embed || batch <= 0 || t.rows(h) % batch != 0 ||
      t.rows(h) / batch < cfg_.kernel_size)
    throw Error(ErrorCode::ShapeMismatch, "CNN branch input must be [L >= S, d_embed]");
  Var patches = t.im2col(h, cfg_.kernel_size, cfg_.same_padding, batch);
  Var c = t.relu(t.add_row(t.matmul(patches, p("cnn.W_conv")), p("cnn.b_conv")));
  Var m = t.relu(t.add_row(t.matmul(c, p("cnn.W1")), p("cnn.b1")));
  return t.add_row(t.matmul(m, p("cnn.W2")), p("cnn.b2"));
}

template <class Real>
Var HybridNet<Real>::encoder_stack(Tape<Real>& t, const Bound& p, Var h,
                                   const Pass<Real>& pass) const {
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(cfg_.d_embed / cfg_.n_heads));
  for (int i = 0; i < cfg_.n_enc_layers; ++i) {
    const std::string n = "enc" + std::to_string(i) + ".";
    Var q = t.matmul(h, p(n + "W_Q"));
    Var k = t.matmul(h, p(n + "W_K"));
    Var v = t.matmul(h, p(n + "W_V"));
    std::vector<Matrix<Real>> probs;
    Var a = t.attention(q, k, v, cfg_.n_heads, scale, false, pass.attention ? &probs : nullptr,
                        pass.batch);
    for (auto& m : probs) pass.attention->push_back(std::move(m));
    a = dropout(t, t.matmul(a, p(n + "W_O")), pass);
    h = t.layer_norm(t.add(h, a), p(n + "ln1.g"), p(n + "ln1.b"));
    Var f = t.relu(t.add_row(t.matmul(h, p(n + "ffn.W1")), p(n + "ffn.b1")));
    f = dropout(t, t.add_row(t.matmul(f, p(n + "ffn.W2")), p(n + "ffn.b2")), pass);
    h = t.layer_norm(t.add(h, f), p(n + "ln2.g"), p(n + "ln2.b"));
  }
  return h;
}

template <class Real>
Var HybridNet<Real>::fuse(Tape<Real>& t, const Bound& p, Var enc, Var cnn) const {
  if (t.rows(enc) != t.rows(cnn) || t.cols(enc) != t.cols(cnn))
    throw Error(ErrorCode::ShapeMismatch, "fusion operands differ in shape");
  return t.add_row(t.matmul(t.mul(enc, cnn), p("fuse.W_f")), p("fuse.b_f"));
}

template <class Real>
Var HybridNet<Real>::decoder_stack(Tape<Real>& t, const Bound& p, Var y, Var h,
                                   const Pass<Real>& pass) const {
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(cfg_.d_embed));
  for (int i = 0; i < cfg_.n_dec_layers; ++i) {
    const std::string n = "dec" + std::to_string(i) + ".";
    // Masked self-attention: one shared projection serves as Q, K and V.
    Var qkv = t.matmul(y, p(n + "W_QKV"));
    std::vector<Matrix<Real>> probs;
    Var s = t.attention(qkv, qkv, qkv, 1, scale, true, pass.attention ? &probs : nullptr,
                        pass.batch);
    for (auto& m : probs) pass.attention->push_back(std::move(m));
    y = t.layer_norm(t.add(y, dropout(t, s, pass)), p(n + "ln1.g"), p(n + "ln1.b"));
    // Cross-attention: decoder queries over the fused encoder sequence.
    Var q = t.matmul(y, p(n + "cross.W_Q"));
    Var k = t.matmul(h, p(n + "cross.W_K"));
    Var v = t.matmul(h, p(n + "cross.W_V"));
    Var c = t.attention(q, k, v, 1, scale, false, pass.attention ? &probs : nullptr, pass.batch);
    for (auto& m : probs) pass.attention->push_back(std::move(m));
    c = dropout(t, t.matmul(c, p(n + "cross.W_O")), pass);
    y = t.layer_norm(t.add(y, c), p(n + "ln2.g"), p(n + "ln2.b"));
    Var f = t.gelu(t.add_row(t.matmul(y, p(n + "ffn.W1")), p(n + "ffn.b1")));
    f = dropout(t, t.add_row(t.matmul(f, p(n + "ffn.W2")), p(n + "ffn.b2")), pass);
    y = t.layer_norm(t.add(y, f), p(n + "ln3.g"), p(n + "ln3.b"));
  }
  return y;
}

template <class Real>
Var HybridNet<Real>::head(Tape<Real>& t, const Bound& p, Var y) const {
  return t.add_row(t.matmul(y, p("head.W_out")), p("head.b_out"));
}

template <class Real>
Matrix<Real> HybridNet<Real>::decoder_query(int batch) const {
  return pe_query_.replicate(batch, 1);
}

template <class Real>
Var HybridNet<Real>::forward(Tape<Real>& t, const Bound& p, Var x,
                             const Pass<Real>& pass) const {
  Var h0 = embed(t, p, x);
  Pass<Real> stacked = pass;
  stacked.batch = t.rows(x) / cfg_.seq_len;
  Var enc = encoder_stack(t, p, h0, stacked);
  Var cnn = cnn_branch(t, p, h0, stacked.batch);
  Var fused = fuse(t, p, enc, cnn);
  Var y = decoder_stack(t, p, t.constant(decoder_query(stacked.batch)), fused, stacked);
  return head(t, p, y);
}

template <class Real>
std::vector<double> HybridNet<Real>::predict(const Matrix<Real>& x) const {
  Tape<Real> tape;
  const Bound p = bind(tape, nullptr);
  Var out = forward(tape, p, tape.constant(x), Pass<Real>{});
  auto v = tape.value(out);
  std::vector<double> r(static_cast<std::size_t>(v.rows()));
  for (Eigen::Index i = 0; i < v.rows(); ++i) r[i] = static_cast<double>(v(i, 0));
  return r;
}

template <class Real>
std::vector<std::vector<double>> HybridNet<Real>::predict(
    const std::vector<Matrix<Real>>& xs) const {
  std::vector<const Matrix<Real>*> parts;
  for (const auto& x : xs) parts.push_back(&x);
  if (parts.empty()) return {};
  const std::vector<double> flat = predict(stack_rows(parts));
  const std::size_t t = static_cast<std::size_t>(cfg_.target_len);
  std::vector<std::vector<double>> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    out[i].assign(flat.begin() + i * t, flat.begin() + (i + 1) * t);
  return out;
}

template class HybridNet<float>;
template class HybridNet<double>;

template <class Real>
Matrix<Real> make_input(const features::FeatureRecord& r, const ModelConfig& cfg,
                        const std::vector<double>* base) {
  const int l = cfg.seq_len;
  if (static_cast<int>(r.v_in.samples.size()) != l)
    throw Error(ErrorCode::ShapeMismatch, "record length " + std::to_string(r.v_in.size()) +
                                              " does not match seq_len " + std::to_string(l));
  if (static_cast<int>(r.triplets.rows.size()) != cfg.n_terms)
    throw Error(ErrorCode::ShapeMismatch, "record has " + std::to_string(r.triplets.rows.size()) +
                                              " triplet rows, model expects " +
                                              std::to_string(cfg.n_terms));
  if (r.device_id < 0 || r.device_id >= features::kDeviceCount)
    throw Error(ErrorCode::ShapeMismatch, "device id out of range");
  if (base && static_cast<int>(base->size()) != l)
    throw Error(ErrorCode::ShapeMismatch, "base channel length does not match seq_len");

  const int width = input_width(cfg, base != nullptr);
  Eigen::Matrix<Real, 1, Eigen::Dynamic> stat(width);
  stat.setZero();
  stat(1) = static_cast<Real>(r.t_norm);
  stat(2 + r.device_id) = Real(1);
  // Triplets are re-referenced to the slowest active pole (the one that sets
  // t_span) and log-compressed. Against |p_max| the dominant row is ~1e-4 and
  // its gain is invisible to the embedding.
  double ref = 0.0;
  for (const features::Triplet& tr : r.triplets.rows)
    if (tr.order > 0 && (ref == 0.0 || std::abs(tr.pole_norm) < ref)) ref = std::abs(tr.pole_norm);
  const auto slog = [](double v) { return std::copysign(std::log1p(std::abs(v)), v); };
  int c = 2 + features::kDeviceCount;
  for (const features::Triplet& tr : r.triplets.rows) {
    const bool active = tr.order > 0 && ref > 0.0;
    stat(c++) = static_cast<Real>(active ? slog(tr.pole_norm / ref) : 0.0);
    stat(c++) = static_cast<Real>(tr.order);
    stat(c++) = static_cast<Real>(active ? slog(tr.residue_norm / std::pow(ref, tr.order)) : 0.0);
  }
  Matrix<Real> x = stat.replicate(l, 1);
  for (int t = 0; t < l; ++t) {
    x(t, 0) = static_cast<Real>(r.v_in.samples[t]);
    if (base) x(t, width - 1) = static_cast<Real>((*base)[t]);
  }
  return x;
}

template <class Real>
Matrix<Real> stack_rows(const std::vector<const Matrix<Real>*>& parts) {
  Eigen::Index rows = 0;
  for (const auto* m : parts) {
    if (m->cols() != parts.front()->cols())
      throw Error(ErrorCode::ShapeMismatch, "stacked matrices differ in width");
    rows += m->rows();
  }
  Matrix<Real> out(rows, parts.empty() ? 0 : parts.front()->cols());
  Eigen::Index r = 0;
  for (const auto* m : parts) {
    out.middleRows(r, m->rows()) = *m;
    r += m->rows();
  }
  return out;
}

template <class Real>
Matrix<Real> column(const std::vector<double>& samples) {
  Matrix<Real> m(static_cast<Eigen::Index>(samples.size()), 1);
  for (std::size_t i = 0; i < samples.size(); ++i) m(i, 0) = static_cast<Real>(samples[i]);
  return m;
}

template Matrix<float> make_input<float>(const features::FeatureRecord&, const ModelConfig&,
                                         const std::vector<double>*);
template Matrix<double> make_input<double>(const features::FeatureRecord&, const ModelConfig&,
                                           const std::vector<double>*);
template Matrix<float> stack_rows<float>(const std::vector<const Matrix<float>*>&);
template Matrix<double> stack_rows<double>(const std::vector<const Matrix<double>*>&);
template Matrix<float> column<float>(const std::vector<double>&);
template Matrix<double> column<double>(const std::vector<double>&);

}  // namespace rcwave::nn
