#include "rcwave/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rcwave/error.hpp"
#include "rcwave/random.hpp"

namespace rcwave::nn {

ModelConfig tiny_config() {
  ModelConfig c;
  c.d_embed = 8;
  c.n_heads = 2;
  c.n_enc_layers = 1;
  c.n_dec_layers = 1;
  c.d_ff = 16;
  c.conv_channels = 6;
  c.kernel_size = 3;
  c.hidden = 8;
  c.seq_len = 6;
  c.target_len = 6;
  c.dropout = 0.0;
  c.n_terms = 2;
  return c;
}

namespace {

constexpr double kFloor = 1e-6;

double loss_of(const HybridNet<double>& net, const Matrix<double>& x, const Matrix<double>& y) {
  Tape<double> tape;
  const auto p = net.bind(tape, nullptr);
  Var out = net.forward(tape, p, tape.constant(x), Pass<double>{});
  return tape.value(tape.mse(out, y))(0, 0);
}

}  // namespace

GradCheckReport grad_check(const ModelConfig& cfg, const GradCheckOptions& opt) {
  if (!(opt.eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "grad_check: eps must be positive");
  if (!(opt.tol > 0.0) || opt.coords <= 0)
    throw Error(ErrorCode::InvalidArgument, "grad_check: tol and coords must be positive");

  HybridNet<double> net(cfg, opt.extra_channel);
  Rng rng(mix_seed(opt.seed, 0x6c));
  // Every parameter random (including biases, gains and the head) so that
  // each path carries gradient.
  for (const ParamSpec& s : net.layout().specs()) {
    const double bound = s.init == InitKind::Weight ? 1.0 / std::sqrt(double(s.rows)) : 0.5;
    const double center = s.init == InitKind::One ? 1.0 : 0.0;
    double* w = net.params().data() + s.offset;
    for (int i = 0; i < s.rows * s.cols; ++i) w[i] = center + rng.uniform(-bound, bound);
  }
  Matrix<double> x(cfg.seq_len, input_width(cfg, opt.extra_channel));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
  Matrix<double> y(cfg.target_len, 1);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-1.0, 1.0);

  ParamVector<double> grad(net.layout().total(), 0.0);
  {
    Tape<double> tape;
    const auto p = net.bind(tape, grad.data());
    Var out = net.forward(tape, p, tape.constant(x), Pass<double>{});
    tape.backward(tape.mse(out, y));
  }

  // Candidate coordinates, then a seeded partial shuffle picks the probes.
  std::vector<std::pair<int, int>> pool;  // (spec index, element)
  const auto& specs = net.layout().specs();
  for (int si = 0; si < static_cast<int>(specs.size()); ++si) {
    if (opt.head_only && specs[si].name.rfind("head.", 0) != 0) continue;
    for (int e = 0; e < specs[si].rows * specs[si].cols; ++e) pool.emplace_back(si, e);
  }
  const int take = std::min<int>(opt.coords, static_cast<int>(pool.size()));
  for (int i = 0; i < take; ++i)
    std::swap(pool[i], pool[rng.uniform_int(i, static_cast<std::int64_t>(pool.size()) - 1)]);

  GradCheckReport rep;
  std::ostringstream bad;
  for (int i = 0; i < take; ++i) {
    const ParamSpec& s = specs[pool[i].first];
    const std::size_t flat = s.offset + pool[i].second;
    double& w = net.params()[flat];
    const double keep = w;
    w = keep + opt.eps;
    const double up = loss_of(net, x, y);
    w = keep - opt.eps;
    const double down = loss_of(net, x, y);
    w = keep;
    GradCoordinate c;
    c.param = s.name;
    c.index = pool[i].second;
    c.analytic = grad[flat];
    c.numeric = (up - down) / (2.0 * opt.eps);
    c.rel_err = std::abs(c.analytic - c.numeric) /
                std::max({std::abs(c.analytic), std::abs(c.numeric), kFloor});
    rep.max_rel_err = std::max(rep.max_rel_err, c.rel_err);
    if (c.rel_err >= opt.tol)
      bad << ' ' << c.param << '[' << c.index << "] analytic=" << c.analytic
          << " numeric=" << c.numeric << " rel=" << c.rel_err << ';';
    rep.coords.push_back(std::move(c));
  }
  if (!bad.str().empty())
    throw Error(ErrorCode::GradMismatch, "gradient mismatch at" + bad.str());
  return rep;
}

}  // namespace rcwave::nn
