// Copyright 2026 The VPKIaaS Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <benchmark/benchmark.h>

#include <random>

#include "fixture.hpp"
#include "vpki/bench.hpp"
#include "vpki/gateway.hpp"
#include "vpki/golden.hpp"

namespace {

using namespace vpki;
using testing::World;

void BM_Sign(benchmark::State& state) {
  auto kp = KeyPair::generate();
  Bytes msg(128, 7);
  for (auto _ : state) benchmark::DoNotOptimize(kp.sign(msg));
}
BENCHMARK(BM_Sign);

void BM_Verify(benchmark::State& state) {
  auto kp = KeyPair::generate();
  Bytes msg(128, 7);
  auto sig = kp.sign(msg);
  for (auto _ : state) benchmark::DoNotOptimize(kp.public_key().verify(msg, sig));
}
BENCHMARK(BM_Verify);

void BM_KeyGen(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(KeyPair::generate());
}
BENCHMARK(BM_KeyGen);

// Server-side batch issuance; items are pseudonyms, so the reported rate
// inverts to time per pseudonym.
void BM_PcaBatch(benchmark::State& state) {
  World w;
  auto v = w.vehicle("bench");
  const auto n = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) {
    state.PauseTiming();
    PseudonymBatchRequest req{w.ticket(v, testing::aligned_now(300), n * 300),
                              testing::make_csrs(n)};
    state.ResumeTiming();
    benchmark::DoNotOptimize(w.pca().issue_pseudonyms(req));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_PcaBatch)->Arg(1)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_TicketIssue(benchmark::State& state) {
  World w;
  auto v = w.vehicle("bench");
  for (auto _ : state) benchmark::DoNotOptimize(w.ticket(v, system_now(), 3600));
}
BENCHMARK(BM_TicketIssue);

void BM_EnvelopeRoundTrip(benchmark::State& state) {
  auto vectors = golden_vectors();
  const auto& batch = *std::find_if(vectors.begin(), vectors.end(), [](const auto& g) {
    return g.name == "pseudonym_batch_request";
  });
  for (auto _ : state) benchmark::DoNotOptimize(reencode_golden(batch));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(batch.bytes.size()));
}
BENCHMARK(BM_EnvelopeRoundTrip);

void BM_StoreConsumeOnce(benchmark::State& state) {
  MemoryStore store;
  std::uint64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        store.consume_once(Namespace::ConsumedTickets, std::to_string(i++)));
  }
}
BENCHMARK(BM_StoreConsumeOnce);

void BM_Cdf(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::lognormal_distribution<double> dist(5, 1);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = dist(rng);
  for (auto _ : state) benchmark::DoNotOptimize(cdf(v, {50, 95, 99}));
}
BENCHMARK(BM_Cdf)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
