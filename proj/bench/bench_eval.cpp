// Serial reference vs OpenMP kernels: evaluation over a split and batch token
// counting. The evaluation backend sleeps per call to stand in for network
// latency; without it the harness is dominated by prompt rendering.

#include <benchmark/benchmark.h>

#include <chrono>
#include <thread>

#include "byoc/evalharness.hpp"

using namespace byoc;

namespace {

promptkit::ClassifierSpec spec() {
    return {"Sort my work inbox", {{"Important", "Needs a reply this week"}, {"Unimportant", "Everything else"}}};
}

corpus::Dataset split(std::size_t n) {
    std::vector<corpus::LabeledSample> v;
    for (std::size_t i = 0; i < n; ++i) {
        std::string text = "Message " + std::to_string(i) + ":";
        for (int w = 0; w < 200; ++w) text += " word" + std::to_string((i + w) % 89);
        v.push_back({{"b" + std::to_string(i), text, {}}, i % 2 ? "Unimportant" : "Important"});
    }
    return corpus::Dataset(std::move(v), corpus::Split::test);
}

llm::FunctionBackend slow_backend(int latency_us) {
    return llm::FunctionBackend([latency_us](const llm::CompletionRequest& r) {
        if (latency_us) std::this_thread::sleep_for(std::chrono::microseconds(latency_us));
        const bool odd = r.messages[1].content.find("Message 1") != std::string::npos;
        return std::string("Thoughts: t\nClass: ") + (odd ? "Unimportant" : "Important") + "\nReflection: r";
    });
}

evalharness::EvalRequest request() {
    evalharness::EvalRequest r;
    r.artifact = classifier::ClassifierArtifact{"bench", spec(), {}, {}};
    return r;
}

template <bool Parallel>
void BM_Evaluate(benchmark::State& state) {
    const auto d = split(static_cast<std::size_t>(state.range(0)));
    auto backend = slow_backend(static_cast<int>(state.range(1)));
    const auto req = request();
    for (auto _ : state) {
        auto run = Parallel ? evalharness::evaluate(req, d, backend) : evalharness::evaluate_serial(req, d, backend);
        benchmark::DoNotOptimize(run.report.accuracy);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<std::string> texts(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::string s;
        for (std::size_t w = 0; w < 300 + i % 50; ++w) s += "t\xC3\xA9xt" + std::to_string(w % 13) + " ";
        out.push_back(std::move(s));
    }
    return out;
}

template <bool Parallel>
void BM_CountTokens(benchmark::State& state) {
    const auto in = texts(static_cast<std::size_t>(state.range(0)));
    const textbudget::TokenCounter c;
    for (auto _ : state) {
        auto counts = Parallel ? textbudget::count_tokens_batch(in, c) : textbudget::count_tokens_serial(in, c);
        benchmark::DoNotOptimize(counts.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Evaluate<false>)->Name("evaluate/serial")->Args({64, 0})->Args({64, 2000})->UseRealTime();
BENCHMARK(BM_Evaluate<true>)->Name("evaluate/openmp")->Args({64, 0})->Args({64, 2000})->UseRealTime();
BENCHMARK(BM_CountTokens<false>)->Name("count_tokens/serial")->Arg(4096)->UseRealTime();
BENCHMARK(BM_CountTokens<true>)->Name("count_tokens/openmp")->Arg(4096)->UseRealTime();

BENCHMARK_MAIN();
