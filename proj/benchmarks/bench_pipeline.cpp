#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "vesselq/vesselq.hpp"

using namespace vesselq;

namespace {

Phantom phantom(const std::string& name) {
    return rasterize(
        phantom_spec_from_json(read_json(std::string(VESSELQ_BENCH_DATA_DIR) + "/phantoms/" + name + ".json")));
}

Mask random_mask(int side, double fill, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution on(fill);
    Mask m({side, side, side}, {0.5, 0.5, 0.5});
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = on(rng);
    return m;
}

void BM_Dilate(benchmark::State& state) {
    const Mask m = random_mask(int(state.range(0)), 0.2, 1);
    const auto se = StructuringElement::cube(3);
    for (auto _ : state) benchmark::DoNotOptimize(dilate(m, se));
    state.SetItemsProcessed(state.iterations() * std::int64_t(m.size()));
}
BENCHMARK(BM_Dilate)->Arg(32)->Arg(64);

void BM_Components(benchmark::State& state) {
    const Mask m = random_mask(int(state.range(0)), 0.3, 2);
    for (auto _ : state) benchmark::DoNotOptimize(connected_components(m, Connectivity::vertex));
    state.SetItemsProcessed(state.iterations() * std::int64_t(m.size()));
}
BENCHMARK(BM_Components)->Arg(32)->Arg(64);

void BM_Skeletonize(benchmark::State& state) {
    const Phantom ph = phantom("y_branch");
    const auto se = StructuringElement::cross3d();
    for (auto _ : state) benchmark::DoNotOptimize(skeletonize(ph.mask, se));
}
BENCHMARK(BM_Skeletonize)->Unit(benchmark::kMillisecond);

void BM_ExtractCenterline(benchmark::State& state) {
    const Phantom ph = phantom("tapered_arc");
    for (auto _ : state) benchmark::DoNotOptimize(extract_centerline(ph.mask));
}
BENCHMARK(BM_ExtractCenterline)->Unit(benchmark::kMillisecond);

void BM_AnalyzeStenoses(benchmark::State& state) {
    const Phantom ph = phantom("notch50");
    StenosisParams p;
    p.threads = int(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(analyze_stenoses(ph.mask, p));
}
BENCHMARK(BM_AnalyzeStenoses)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Hausdorff(benchmark::State& state) {
    const Mask a = random_mask(int(state.range(0)), 0.1, 3), b = random_mask(int(state.range(0)), 0.1, 4);
    for (auto _ : state) benchmark::DoNotOptimize(hausdorff(a, b, 95));
}
BENCHMARK(BM_Hausdorff)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Match(benchmark::State& state) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> c(0, 200);
    FindingSet p, g;
    for (int k = 0; k < state.range(0); ++k) {
        StenosisFinding f;
        f.segment_id = k % 10;
        f.position = {c(rng), c(rng), c(rng)};
        f.a_ref = 10;
        f.a_min = 5;
        f.degree = 0.5;
        (k % 2 ? p : g).findings.push_back(f);
    }
    for (auto _ : state) benchmark::DoNotOptimize(match(p, g));
}
BENCHMARK(BM_Match)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
