/* Copyright 2026 The QbeKws Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Serial reference kernels against their OpenMP counterparts on synthetic
// episodes. Run with OMP_NUM_THREADS to vary the thread count.

#include <benchmark/benchmark.h>

#include <vector>

#include "kws/dtw.h"
#include "kws/harness.h"
#include "kws/synthetic.h"
#include "kws/wakeword.h"

namespace kws {
namespace {

struct Fixture {
  GruWeights weights = build_oracle_label_model();
  HarnessParams params;
  std::vector<Episode> episodes = generate_synthetic_episodes(2026, 8);
  std::vector<PreparedEpisode> prepared = prepare_episodes(episodes, weights, params);
  WakewordModel model;

  Fixture() {
    const auto& s = prepared[0].support;
    const std::vector<Posteriorgram> posts{s[0].post, s[1].post, s[2].post};
    model = learn(posts, params.beam, params.nbest).model;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Score(benchmark::State& state) {
  const Fixture& f = fixture();
  const Posteriorgram& post = f.prepared[0].tests[0].post;
  for (auto _ : state) benchmark::DoNotOptimize(score(f.model, post));
}

void BM_ScoreReference(benchmark::State& state) {
  const Fixture& f = fixture();
  const Posteriorgram& post = f.prepared[0].tests[0].post;
  for (auto _ : state) benchmark::DoNotOptimize(reference::score(f.model, post));
}

void BM_DistanceFbank(benchmark::State& state) {
  const Fixture& f = fixture();
  const auto& q = f.prepared[0].support[0].fbank;
  const auto& t = f.prepared[0].tests[0].fbank;
  for (auto _ : state) benchmark::DoNotOptimize(distance_matrix(q, t));
}

void BM_DistanceFbankReference(benchmark::State& state) {
  const Fixture& f = fixture();
  const auto& q = f.prepared[0].support[0].fbank;
  const auto& t = f.prepared[0].tests[0].fbank;
  for (auto _ : state) benchmark::DoNotOptimize(reference::distance_matrix(q, t));
}

void BM_DistancePost(benchmark::State& state) {
  const Fixture& f = fixture();
  const auto& q = f.prepared[0].support[0].post;
  const auto& t = f.prepared[0].tests[0].post;
  for (auto _ : state) benchmark::DoNotOptimize(distance_matrix(q, t, 1e-5));
}

void BM_DistancePostReference(benchmark::State& state) {
  const Fixture& f = fixture();
  const auto& q = f.prepared[0].support[0].post;
  const auto& t = f.prepared[0].tests[0].post;
  for (auto _ : state) benchmark::DoNotOptimize(reference::distance_matrix(q, t, 1e-5));
}

void BM_Evaluate(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(DetectorKind::kDonut, f.prepared, f.params));
  }
}

void BM_EvaluateReference(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::evaluate(DetectorKind::kDonut, f.prepared, f.params));
  }
}

BENCHMARK(BM_Score);
BENCHMARK(BM_ScoreReference);
BENCHMARK(BM_DistanceFbank);
BENCHMARK(BM_DistanceFbankReference);
BENCHMARK(BM_DistancePost);
BENCHMARK(BM_DistancePostReference);
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateReference)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace kws
BENCHMARK_MAIN();
