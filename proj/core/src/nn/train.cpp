#include "rcwave/nn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "rcwave/parallel.hpp"
#include "rcwave/random.hpp"

namespace rcwave::nn {

using features::FeatureRecord;

void retain_freed_memory() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    mallopt(M_TOP_PAD, 64 * 1024 * 1024);
  });
#endif
}

namespace {

constexpr int kPredictChunk = 16;

// Input rows with t_norm replaced by the model's own normalization.
Matrix<float> model_input(const FeatureRecord& r, const ModelConfig& cfg,
                          const features::NormStats& stats, const std::vector<double>* base) {
  Matrix<float> x = make_input<float>(r, cfg, base);
  x.col(1).setConstant(static_cast<float>(features::normalize_tspan(r.t_span, stats)));
  return x;
}

std::vector<std::vector<double>> predict_all(const HybridNet<float>& net,
                                             const std::vector<Matrix<float>>& inputs,
                                             int threads) {
  std::vector<std::vector<double>> out(inputs.size());
  const std::size_t chunks = (inputs.size() + kPredictChunk - 1) / kPredictChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t lo = c * kPredictChunk;
    const std::size_t hi = std::min(inputs.size(), lo + kPredictChunk);
    std::vector<Matrix<float>> part(inputs.begin() + lo, inputs.begin() + hi);
    auto pred = net.predict(part);
    for (std::size_t i = lo; i < hi; ++i) out[i] = std::move(pred[i - lo]);
  });
  return out;
}

std::vector<double> samples_of(const Waveform& w) { return w.samples; }

struct StageInput {
  std::vector<Matrix<float>> x;          // one per record
  std::vector<std::vector<double>> y;    // stage target per record
};

class Adam {
 public:
  Adam(std::size_t n, double lr) : m_(n, 0.0f), v_(n, 0.0f), lr_(lr) {}
  void set_lr(double lr) { lr_ = lr; }

  void step(ParamVector<float>& w, const ParamVector<float>& g) {
    ++t_;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, t_);
    const double c2 = 1.0 - std::pow(b2, t_);
    const float a = static_cast<float>(lr_ / c1);
    const float sc2 = static_cast<float>(1.0 / c2);
    for (std::size_t i = 0; i < w.size(); ++i) {
      m_[i] = 0.9f * m_[i] + 0.1f * g[i];
      v_[i] = 0.999f * v_[i] + 0.001f * g[i] * g[i];
      w[i] -= a * m_[i] / (std::sqrt(v_[i] * sc2) + static_cast<float>(eps));
    }
  }

 private:
  std::vector<float> m_;
  std::vector<float> v_;
  double lr_;
  int t_ = 0;
};

// Trains one network on (x, y) and restores its best validation epoch.
// `val_score` maps predictions on the validation records to an RMSE.
StageReport run_stage(
    HybridNet<float>& net, const StageInput& data, const Split& split, const TrainOptions& opt,
    std::uint64_t stage_seed, const std::string& name,
    const std::function<double(const std::vector<std::vector<double>>&)>& val_score,
    TrainReport& report) {
  StageReport st;
  const int threads = opt.threads > 0 ? opt.threads : thread_count();
  const std::size_t n_params = net.layout().total();
  const int mb = std::max(1, opt.micro_batch);
  const int slots = (opt.batch + mb - 1) / mb;
  std::vector<ParamVector<float>> slot_grad(slots, ParamVector<float>(n_params));
  ParamVector<float> grad(n_params);
  std::vector<double> sample_loss(data.x.size(), 0.0);
  Adam adam(n_params, opt.lr);

  std::vector<Matrix<float>> val_x;
  for (int i : split.val) val_x.push_back(data.x[i]);
  auto evaluate = [&] { return val_score(predict_all(net, val_x, threads)); };

  ParamVector<float> best = net.params();
  st.best_val_rmse = evaluate();
  int since_best = 0;

  std::vector<int> order = split.train;
  long step = 0;
  const long per_epoch =
      static_cast<long>((order.size() + opt.batch - 1) / static_cast<std::size_t>(opt.batch));
  const long total = std::max(1L, per_epoch * opt.epochs);
  const long warmup = std::min(total, static_cast<long>(opt.warmup_steps));
  auto rate = [&](long s) {
    double r = opt.lr;
    if (s < warmup) r *= static_cast<double>(s + 1) / static_cast<double>(warmup + 1);
    if (opt.cosine) r *= 0.5 * (1.0 + std::cos(3.14159265358979323846 * s / total));
    return r;
  };
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    Rng shuffle(mix_seed(stage_seed, 0x10000 + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.uniform_int(0, static_cast<std::int64_t>(i) - 1)]);

    for (std::size_t start = 0; start < order.size(); start += opt.batch, ++step) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(opt.batch));
      const int batch = static_cast<int>(stop - start);
      const int used = (batch + mb - 1) / mb;
      parallel_for(static_cast<std::size_t>(used), threads, [&](std::size_t s) {
        const std::size_t lo = start + s * mb;
        const std::size_t hi = std::min(stop, lo + mb);
        std::vector<const Matrix<float>*> xs;
        std::vector<double> y;
        for (std::size_t i = lo; i < hi; ++i) {
          xs.push_back(&data.x[order[i]]);
          const auto& t = data.y[order[i]];
          y.insert(y.end(), t.begin(), t.end());
        }
        ParamVector<float>& g = slot_grad[s];
        std::fill(g.begin(), g.end(), 0.0f);
        Tape<float> tape;
        const auto p = net.bind(tape, g.data());
        Rng rng(mix_seed(stage_seed, (static_cast<std::uint64_t>(step) << 8) + s));
        Pass<float> pass;
        pass.training = true;
        pass.rng = &rng;
        Var out = net.forward(tape, p, tape.constant(stack_rows(xs)), pass);
        const Matrix<float> target = column<float>(y);
        tape.backward(tape.mse(out, target));
        const auto pred = tape.value(out);
        const std::size_t len = data.y[order[lo]].size();
        for (std::size_t i = lo; i < hi; ++i) {
          double acc = 0.0;
          const std::size_t off = (i - lo) * len;
          for (std::size_t k = 0; k < len; ++k) {
            const double d = static_cast<double>(pred(off + k, 0)) - target(off + k, 0);
            acc += d * d;
          }
          sample_loss[order[i]] = acc / static_cast<double>(len);
        }
      });

      std::fill(grad.begin(), grad.end(), 0.0f);
      for (int s = 0; s < used; ++s) {
        const int count = std::min(mb, batch - s * mb);
        const float w = static_cast<float>(count) / static_cast<float>(batch);
        for (std::size_t i = 0; i < n_params; ++i) grad[i] += w * slot_grad[s][i];
      }
      double norm2 = 0.0;
      for (float g : grad) norm2 += static_cast<double>(g) * g;
      const double norm = std::sqrt(norm2);
      if (!std::isfinite(norm)) {
        report.epoch_losses.push_back(std::numeric_limits<double>::quiet_NaN());
        throw TrainDiverged(name + " stage: non-finite gradient at epoch " +
                                std::to_string(epoch),
                            report);
      }
      if (opt.clip > 0 && norm > opt.clip) {
        const float sc = static_cast<float>(opt.clip / norm);
        for (float& g : grad) g *= sc;
      }
      adam.set_lr(rate(step));
      adam.step(net.params(), grad);
    }

    double loss = 0.0;
    for (int i : split.train) loss += sample_loss[i];
    loss /= static_cast<double>(std::max<std::size_t>(1, split.train.size()));
    st.epoch_losses.push_back(loss);
    report.epoch_losses.push_back(loss);
    if (!std::isfinite(loss))
      throw TrainDiverged(name + " stage: loss is not finite at epoch " + std::to_string(epoch),
                          report);
    const double val = evaluate();
    st.val_rmse.push_back(val);
    if (opt.on_epoch) opt.on_epoch(name, epoch, loss, val);
    if (val < st.best_val_rmse) {
      st.best_val_rmse = val;
      st.best_epoch = epoch;
      best = net.params();
      since_best = 0;
    } else if (opt.patience > 0 && ++since_best >= opt.patience) {
      break;
    }
  }
  net.params() = best;
  return st;
}

}  // namespace

TrainedModel::TrainedModel(const ModelConfig& cfg)
    : config(cfg), base(cfg, false), correction(cfg, true) {}

std::vector<std::vector<double>> TrainedModel::predict_base(
    const std::vector<const FeatureRecord*>& records) const {
  std::vector<Matrix<float>> xs;
  for (const auto* r : records) xs.push_back(model_input(*r, config, stats, nullptr));
  return predict_all(base, xs, thread_count());
}

std::vector<std::vector<double>> TrainedModel::predict_correction(
    const std::vector<const FeatureRecord*>& records,
    const std::vector<std::vector<double>>& base_pred) const {
  std::vector<Matrix<float>> xs;
  for (std::size_t i = 0; i < records.size(); ++i)
    xs.push_back(model_input(*records[i], config, stats, &base_pred[i]));
  return predict_all(correction, xs, thread_count());
}

std::vector<double> TrainedModel::forward_base(const FeatureRecord& r) const {
  return predict_base({&r}).front();
}

std::vector<double> TrainedModel::forward_corrected(const FeatureRecord& r) const {
  std::vector<std::vector<double>> b = predict_base({&r});
  std::vector<double> out = b.front();
  const std::vector<double> c = predict_correction({&r}, b).front();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += c[k];
  return out;
}

Split split_indices(int n, double val_fraction, std::uint64_t seed) {
  if (n < 0 || !(val_fraction >= 0.0 && val_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "validation fraction must be in [0, 1)");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(mix_seed(seed, 0x5b11));
  for (int i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_int(0, i - 1)]);
  int n_val = static_cast<int>(std::lround(val_fraction * n));
  if (n >= 2 && val_fraction > 0.0) n_val = std::clamp(n_val, 1, n - 1);
  Split s;
  s.val.assign(idx.begin(), idx.begin() + n_val);
  s.train.assign(idx.begin() + n_val, idx.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

double pooled_rmse(const std::vector<std::vector<double>>& pred,
                   const std::vector<std::vector<double>>& truth) {
  if (pred.size() != truth.size())
    throw Error(ErrorCode::ShapeMismatch, "prediction and truth counts differ");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != truth[i].size())
      throw Error(ErrorCode::ShapeMismatch, "prediction and truth lengths differ");
    for (std::size_t k = 0; k < pred[i].size(); ++k) {
      const double d = pred[i][k] - truth[i][k];
      acc += d * d;
    }
    n += pred[i].size();
  }
  return n ? std::sqrt(acc / static_cast<double>(n)) : 0.0;
}

TrainResult train(const std::vector<FeatureRecord>& records, const ModelConfig& cfg,
                  const TrainOptions& opt, const TrainedModel* init) {
  validate(cfg);
  if (records.empty()) throw Error(ErrorCode::InvalidArgument, "training set is empty");
  if (opt.epochs < 0 || opt.batch <= 0 || opt.micro_batch <= 0 || !(opt.lr >= 0.0) ||
      opt.patience < 0)
    throw Error(ErrorCode::InvalidArgument, "invalid training options");
  if (cfg.target_len != cfg.seq_len)
    throw Error(ErrorCode::ShapeMismatch, "training needs target_len == seq_len");
  retain_freed_memory();
  const auto t0 = std::chrono::steady_clock::now();
  const int threads = opt.threads > 0 ? opt.threads : thread_count();

  TrainResult res;
  TrainReport& rep = res.report;
  rep.seed = opt.seed;
  TrainedModel& model = res.model;
  if (init) {
    if (!(init->config == cfg)) throw Error(ErrorCode::ShapeMismatch, "initial model config differs");
    model = *init;
  } else {
    model = TrainedModel(cfg);
  }
  model.split_seed = opt.seed;
  model.val_fraction = opt.val_fraction;

  const int n = static_cast<int>(records.size());
  Split split = split_indices(n, opt.val_fraction, opt.seed);
  rep.n_train = static_cast<int>(split.train.size());
  rep.n_val = static_cast<int>(split.val.size());
  if (split.val.empty()) split.val = split.train;

  std::vector<double> spans;
  for (int i : split.train) spans.push_back(records[i].t_span);
  model.stats = features::fit_norm_stats(spans);

  std::vector<std::vector<double>> val_target;
  for (int i : split.val) val_target.push_back(records[i].target.samples);

  // Stage 1: base network on the dominant-term response.
  StageInput s1;
  for (const auto& r : records) {
    s1.x.push_back(model_input(r, cfg, model.stats, nullptr));
    s1.y.push_back(samples_of(r.base_target));
  }
  {
    std::vector<std::vector<double>> vt;
    for (int i : split.val) vt.push_back(s1.y[i]);
    rep.base = run_stage(
        model.base, s1, split, opt, mix_seed(opt.seed, 1), "base",
        [&](const std::vector<std::vector<double>>& p) { return pooled_rmse(p, vt); }, rep);
  }

  // Stage 2: frozen base, correction network on the residual.
  const std::vector<std::vector<double>> base_pred = predict_all(model.base, s1.x, threads);
  s1 = StageInput{};
  std::vector<std::vector<double>> base_val;
  for (int i : split.val) base_val.push_back(base_pred[i]);
  rep.base_val_rmse = pooled_rmse(base_val, val_target);

  if (opt.train_correction) {
    StageInput s2;
    for (std::size_t i = 0; i < records.size(); ++i) {
      s2.x.push_back(model_input(records[i], cfg, model.stats, &base_pred[i]));
      // Residual of the frozen base rather than the dataset's correction_target,
      // so the correction also absorbs the base network's own error.
      std::vector<double> y = samples_of(records[i].target);
      for (std::size_t k = 0; k < y.size(); ++k) y[k] -= base_pred[i][k];
      s2.y.push_back(std::move(y));
    }
    rep.correction = run_stage(
        model.correction, s2, split, opt, mix_seed(opt.seed, 2), "correction",
        [&](const std::vector<std::vector<double>>& c) {
          std::vector<std::vector<double>> sum = base_val;
          for (std::size_t i = 0; i < sum.size(); ++i)
            for (std::size_t k = 0; k < sum[i].size(); ++k) sum[i][k] += c[i][k];
          return pooled_rmse(sum, val_target);
        },
        rep);
    rep.val_rmse = rep.correction.best_val_rmse;
  } else {
    rep.val_rmse = pooled_rmse(
        [&] {
          std::vector<std::vector<double>> sum = base_val;
          std::vector<const FeatureRecord*> vr;
          for (int i : split.val) vr.push_back(&records[i]);
          const auto c = model.predict_correction(vr, base_val);
          for (std::size_t i = 0; i < sum.size(); ++i)
            for (std::size_t k = 0; k < sum[i].size(); ++k) sum[i][k] += c[i][k];
          return sum;
        }(),
        val_target);
  }
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace rcwave::nn
