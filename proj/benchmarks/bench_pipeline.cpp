#include <benchmark/benchmark.h>

#include "thermadl/eval.hpp"
#include "thermadl/features.hpp"
#include "thermadl/rng.hpp"
#include "thermadl/svm.hpp"
#include "thermadl/synthgen.hpp"

using namespace thermadl;

static void BM_Dct1d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DctBasis basis(n);
  Rng rng(1);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(basis.transform(x, n));
}
BENCHMARK(BM_Dct1d)->Arg(8)->Arg(20)->Arg(64);

static void BM_ExtractFeatures(benchmark::State& state) {
  const auto scripts = builtin_scripts(3);
  const auto raw = render_sequence(default_scene(), scripts.front(), 4);
  const auto bg = estimate_background(render_sequence(default_scene(), empty_scene_script(5), 5));
  const FeatureExtractor extractor{FeatureConfig{}};
  for (auto _ : state) benchmark::DoNotOptimize(featurize_sequence(raw, bg, extractor));
}
BENCHMARK(BM_ExtractFeatures);

static void BM_TrainSvm(benchmark::State& state) {
  CorpusOptions opts;
  opts.subjects = 4;
  opts.reps = 2;
  const auto corpus = generate_corpus(opts);
  const auto x = featurize_dataset(corpus.dataset, PipelineSettings{});
  std::vector<std::string> y;
  for (const auto& s : corpus.dataset.sequences) y.push_back(s.label());
  for (auto _ : state) benchmark::DoNotOptimize(train(x, y, SvmConfig{}));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * x.size()));
}
BENCHMARK(BM_TrainSvm)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
