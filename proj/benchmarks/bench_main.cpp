#include <benchmark/benchmark.h>

#include "fseg/agent.hpp"
#include "fseg/fed.hpp"
#include "fseg/phantom.hpp"
#include "fseg/protocol.hpp"
#include "fseg/refine.hpp"
#include "fseg/threshenv.hpp"

using namespace fseg;

static void BM_PhantomGenerate(benchmark::State& state) {
    const PhantomSpec spec;
    RngStream rng(1, 0);
    for (auto _ : state) {
        Sample s = generate_phantom(spec, rng);
        benchmark::DoNotOptimize(s.image.data.data());
    }
}
BENCHMARK(BM_PhantomGenerate);

static void BM_ThresholdSegment(benchmark::State& state) {
    const PhantomSpec spec;
    RngStream rng(1, 0);
    const Sample s = generate_phantom(spec, rng);
    const float max_p = image_max_pixel(s.image);
    const ThresholdPair pair = compute_thresholds(max_p, {40, 12});
    for (auto _ : state) {
        BinaryMask m = threshold_segment(s.image, pair);
        benchmark::DoNotOptimize(m.data.data());
    }
}
BENCHMARK(BM_ThresholdSegment);

static void BM_BruteForceBest(benchmark::State& state) {
    const PhantomSpec spec;
    RngStream rng(1, 0);
    const Sample s = generate_phantom(spec, rng);
    for (auto _ : state) {
        auto r = brute_force_best(s.image, s.gt);
        benchmark::DoNotOptimize(r.second);
    }
}
BENCHMARK(BM_BruteForceBest);

static void BM_QNetForward(benchmark::State& state) {
    QNetworkSpec spec;
    Network net = build_qnet(spec);
    RngStream rng(2, 0);
    net.init_he_uniform(rng);
    Tensor in({1, 2, spec.input_size, spec.input_size});
    for (auto& v : in.data) v = static_cast<float>(rng.uniform());
    for (auto _ : state) {
        Tensor out = net.forward(in);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_QNetForward);

static void BM_RefineForward(benchmark::State& state) {
    RefineNetSpec spec;
    Network net = build_refine_net(spec);
    RngStream rng(3, 0);
    net.init_he_uniform(rng);
    const PhantomSpec pspec;
    RngStream prng(4, 0);
    const Sample s = generate_phantom(pspec, prng);
    const BinaryMask coarse(s.image.width, s.image.height, 1);
    for (auto _ : state) {
        Tensor out = refine_forward(net, s.image, coarse);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_RefineForward);

static void BM_Aggregate(benchmark::State& state) {
    const size_t dim = static_cast<size_t>(state.range(0));
    std::vector<ParameterVector> pvs(3);
    std::vector<const ParameterVector*> ptrs;
    RngStream rng(5, 0);
    for (auto& pv : pvs) {
        pv.values.resize(dim);
        for (auto& v : pv.values) v = static_cast<float>(rng.gaussian());
        pv.layout = {{"p", 0, dim}};
        ptrs.push_back(&pv);
    }
    const std::vector<double> w = {10.0 / 18.0, 4.0 / 18.0, 4.0 / 18.0};
    for (auto _ : state) {
        ParameterVector out = aggregate(ptrs, w);
        benchmark::DoNotOptimize(out.values.data());
    }
}
BENCHMARK(BM_Aggregate)->Arg(1 << 10)->Arg(1 << 18);

static void BM_EncodeDecodeGlobalParams(benchmark::State& state) {
    GlobalParamsMsg msg;
    msg.round = 3;
    msg.drl.assign(1 << 16, 1.25f);
    msg.rm.assign(1 << 16, -0.5f);
    for (auto _ : state) {
        const std::vector<uint8_t> bytes = encode_message(msg);
        ProtocolMessage back = decode_message(bytes);
        benchmark::DoNotOptimize(&back);
    }
}
BENCHMARK(BM_EncodeDecodeGlobalParams);

static void BM_Crc32(benchmark::State& state) {
    std::vector<uint8_t> data(1 << 20);
    for (size_t i = 0; i < data.size(); ++i) data[i] = static_cast<uint8_t>(i * 31);
    for (auto _ : state) benchmark::DoNotOptimize(crc32_ieee(data));
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(data.size()));
}
BENCHMARK(BM_Crc32);

BENCHMARK_MAIN();
