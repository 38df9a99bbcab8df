#include <benchmark/benchmark.h>

#include "rcwave/circuit.hpp"
#include "rcwave/corpus.hpp"
#include "rcwave/nn/model.hpp"
#include "rcwave/nn/train.hpp"
#include "rcwave/spef.hpp"
#include "rcwave/transient.hpp"

using namespace rcwave;

namespace {

NodalSystem ladder(int order) {
  return assemble_system(to_network(spef::generate_spef(order, 42, {})));
}

void BM_ParseSpef(benchmark::State& state) {
  const std::string text = spef::emit_spef(spef::generate_spef(static_cast<int>(state.range(0)), 1, {}));
  for (auto _ : state) benchmark::DoNotOptimize(spef::parse_spef(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseSpef)->Arg(15)->Arg(200);

void BM_ExtractTf(benchmark::State& state) {
  const NodalSystem sys = ladder(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(extract_tf(sys));
}
BENCHMARK(BM_ExtractTf)->Arg(5)->Arg(15)->Arg(50);

void BM_AnalyticResponse(benchmark::State& state) {
  const TransferFunction tf = extract_tf(ladder(static_cast<int>(state.range(0))));
  const double span = default_t_span(tf);
  const Stimulus ramp = Stimulus::ramp(0.1 * span);
  for (auto _ : state) benchmark::DoNotOptimize(analytic_response(tf, ramp, span, 128));
}
BENCHMARK(BM_AnalyticResponse)->Arg(5)->Arg(15)->Arg(50);

void BM_TrapezoidResponse(benchmark::State& state) {
  const NodalSystem sys = ladder(static_cast<int>(state.range(0)));
  const double span = default_t_span(extract_tf(sys));
  for (auto _ : state)
    benchmark::DoNotOptimize(numerical_response(sys, Stimulus::step(), span, 128, 8));
}
BENCHMARK(BM_TrapezoidResponse)->Arg(5)->Arg(15)->Arg(50);

void BM_ModelPredict(benchmark::State& state) {
  CorpusConfig cc;
  cc.n_nets = static_cast<int>(state.range(0));
  const auto records = synthesize_corpus(cc);
  const nn::ModelConfig cfg;
  const nn::HybridNet<float> net(cfg, false);
  std::vector<nn::Matrix<float>> xs;
  for (const auto& r : records) xs.push_back(nn::make_input<float>(r, cfg));
  for (auto _ : state) benchmark::DoNotOptimize(net.predict(xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ModelPredict)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  CorpusConfig cc;
  cc.n_nets = 64;
  const auto records = synthesize_corpus(cc);
  nn::TrainOptions opt;
  opt.epochs = 1;
  opt.train_correction = false;
  opt.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(nn::train(records, nn::ModelConfig{}, opt));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace

BENCHMARK_MAIN();
