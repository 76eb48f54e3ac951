#include <benchmark/benchmark.h>

#include "mapsight/kernels.hpp"
#include "mapsight/rng.hpp"

namespace {

using namespace mapsight;

RgbImage noise_image(std::uint64_t seed) {
    Rng rng(seed);
    RgbImage img(kDefaultSide, kDefaultSide);
    for (auto& p : img.pixels()) {
        p = {static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
             static_cast<std::uint8_t>(rng.below(256))};
    }
    return img;
}

PatchMask sparse_mask() {
    PatchMask m(14, 16, false);
    Rng rng(3);
    for (int r = 0; r < 14; ++r) {
        for (int c = 0; c < 14; ++c) m.set_visible(r, c, rng.bernoulli(0.2));
    }
    return m;
}

template <auto Fn>
void BM_MatchLabels(benchmark::State& state) {
    const RgbImage img = noise_image(1);
    const std::vector<Rgb> palette = {{0, 255, 0}, {255, 0, 0}, {0, 0, 255}};
    std::vector<Label> out(img.pixel_count());
    for (auto _ : state) {
        Fn(img.pixels(), palette, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <auto Fn>
void BM_Ssim(benchmark::State& state) {
    const RgbImage a = noise_image(1), b = noise_image(2);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b, kernels::SsimParams{}));
}

template <auto Fn>
void BM_NearestVisible(benchmark::State& state) {
    const PatchMask m = sparse_mask();
    for (auto _ : state) benchmark::DoNotOptimize(Fn(m));
}

template <auto Fn>
void BM_AssignCenters(benchmark::State& state) {
    Rng rng(4);
    std::vector<Point2> pts(30000);
    for (auto& p : pts) p = {rng.uniform() * 224, rng.uniform() * 224};
    const std::vector<Point2> centers = {{20, 30}, {100, 180}, {200, 60}};
    std::vector<int> labels(pts.size());
    for (auto _ : state) benchmark::DoNotOptimize(Fn(pts, centers, labels));
}

template <auto Fn>
void BM_ChannelVariance(benchmark::State& state) {
    std::vector<RgbImage> samples;
    for (int i = 0; i < 8; ++i) samples.push_back(noise_image(10 + i));
    std::vector<double> out(samples[0].pixel_count());
    for (auto _ : state) {
        Fn(samples, out);
        benchmark::DoNotOptimize(out.data());
    }
}

BENCHMARK(BM_MatchLabels<kernels::serial::match_labels>)->Name("match_labels/serial");
BENCHMARK(BM_MatchLabels<kernels::parallel::match_labels>)->Name("match_labels/parallel");
BENCHMARK(BM_Ssim<kernels::serial::ssim_map>)->Name("ssim_map/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Ssim<kernels::parallel::ssim_map>)->Name("ssim_map/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestVisible<kernels::serial::nearest_visible_source>)
    ->Name("nearest_visible/serial")
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestVisible<kernels::parallel::nearest_visible_source>)
    ->Name("nearest_visible/parallel")
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssignCenters<kernels::serial::assign_to_centers>)->Name("assign_to_centers/serial");
BENCHMARK(BM_AssignCenters<kernels::parallel::assign_to_centers>)->Name("assign_to_centers/parallel");
BENCHMARK(BM_ChannelVariance<kernels::serial::channel_variance>)->Name("channel_variance/serial");
BENCHMARK(BM_ChannelVariance<kernels::parallel::channel_variance>)->Name("channel_variance/parallel");

}  // namespace

BENCHMARK_MAIN();
