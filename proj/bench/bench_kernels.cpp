// Parallel kernels against the serial reference kernels, plus one full
// training step of the default generator.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dvp/generator.hpp"
#include "dvp/kernels.hpp"
#include "dvp/loss.hpp"

using namespace dvp;

namespace {

struct ConvCase {
    Tensor<float> in, out, grad_out, grad_in;
    std::vector<float> w, b, gw, gb;
    ConvShape shape;

    ConvCase(int cin, int cout, int size) : shape{cin, cout, 3} {
        std::mt19937_64 rng(1);
        std::normal_distribution<float> n(0.0f, 0.1f);
        in = Tensor<float>(cin, size, size);
        grad_out = Tensor<float>(cout, size, size);
        grad_in = Tensor<float>(cin, size, size);
        for (auto& v : in.span()) v = n(rng);
        for (auto& v : grad_out.span()) v = n(rng);
        w.resize(shape.weight_count());
        for (auto& v : w) v = n(rng);
        b.assign(static_cast<std::size_t>(cout), 0.0f);
        gw.resize(w.size());
        gb.resize(b.size());
    }
};

template <bool Parallel>
void BM_ConvForward(benchmark::State& st) {
    ConvCase c(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)), static_cast<int>(st.range(2)));
    for (auto _ : st) {
        if constexpr (Parallel) kernels::conv2d_forward<float>(c.in, c.w, c.b, c.shape, c.out);
        else reference::conv2d_forward<float>(c.in, c.w, c.b, c.shape, c.out);
        benchmark::DoNotOptimize(c.out.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(c.shape.weight_count()) * st.range(2) * st.range(2));
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& st) {
    ConvCase c(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)), static_cast<int>(st.range(2)));
    for (auto _ : st) {
        if constexpr (Parallel)
            kernels::conv2d_backward<float>(c.in, c.w, c.shape, c.grad_out, &c.grad_in, c.gw, c.gb);
        else
            reference::conv2d_backward<float>(c.in, c.w, c.shape, c.grad_out, &c.grad_in, c.gw, c.gb);
        benchmark::DoNotOptimize(c.gw.data());
    }
}

template <bool Parallel>
void BM_Upsample(benchmark::State& st) {
    const int size = static_cast<int>(st.range(0));
    Tensor<float> in(64, size, size), out;
    for (auto& v : in.span()) v = 0.5f;
    for (auto _ : st) {
        if constexpr (Parallel) kernels::upsample2_forward<float>(in, out);
        else reference::upsample2_forward<float>(in, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_TrainingStep(benchmark::State& st) {
    GeneratorConfig cfg;
    const auto params = init_generator(cfg);
    const int size = static_cast<int>(st.range(0));
    Frame in(size, size, 3, 0.5f), target(size, size, 3, 0.25f);
    for (auto _ : st) {
        auto lg = loss_gradient(params, in, [&](const GeneratorOutput& o, GeneratorOutput& g) {
            return data_term_grad(o.main, target, DataTerm::l1(), g.main);
        });
        benchmark::DoNotOptimize(lg.loss);
    }
}


}  // namespace

BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/parallel")->Args({32, 32, 64})->Args({64, 64, 32})->Args({256, 256, 8})->Args({3, 32, 128})->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/reference")->Args({32, 32, 64})->Args({64, 64, 32})->Args({256, 256, 8})->Args({3, 32, 128})->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/parallel")->Args({32, 32, 64})->Args({256, 256, 8})->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/reference")->Args({32, 32, 64})->Args({256, 256, 8})->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_Upsample<true>)->Name("upsample2/parallel")->Arg(32)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_Upsample<false>)->Name("upsample2/reference")->Arg(32)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_TrainingStep)->Name("training_step/default_net")->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
