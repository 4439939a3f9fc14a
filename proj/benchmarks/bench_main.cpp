#include <dynrisk/cox.hpp>
#include <dynrisk/forest.hpp>
#include <dynrisk/metrics.hpp>

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>
#include <string>
#include <vector>

using namespace dynrisk;

namespace {

struct Data {
    std::vector<double> x;
    std::vector<std::uint8_t> y;
    std::vector<std::string> names;
    std::size_t n, p;
};

Data make_data(std::size_t n, std::size_t p) {
    std::mt19937_64 rng{42};
    std::normal_distribution<double> z;
    Data d{{}, {}, {}, n, p};
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double v = j % 2 ? static_cast<double>(rng() % 2) : z(rng);
            d.x.push_back(v);
            eta += j < 3 ? v : 0.0;
        }
        d.y.push_back(eta + z(rng) > 1.0 ? 1 : 0);
    }
    for (std::size_t j = 0; j < p; ++j) {
        d.names.push_back("f" + std::to_string(j));
    }
    return d;
}

void BM_TrainForest(benchmark::State &state) {
    const auto d = make_data(static_cast<std::size_t>(state.range(0)), 20);
    ForestParams params;
    params.n_trees = 100;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train_forest({{d.x, d.n, d.p}, d.y, {}}, d.names, params));
    }
}
BENCHMARK(BM_TrainForest)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_FitCox(benchmark::State &state) {
    const auto d = make_data(static_cast<std::size_t>(state.range(0)), 8);
    std::mt19937_64 rng{7};
    std::vector<SurvivalSample> samples;
    for (std::size_t i = 0; i < d.n; ++i) {
        samples.push_back({{d.x.begin() + static_cast<long>(i * d.p), d.x.begin() + static_cast<long>((i + 1) * d.p)},
                           1 + static_cast<int>(rng() % 60), d.y[i] == 1});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_cox(samples, d.names));
    }
}
BENCHMARK(BM_FitCox)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_RocCurve(benchmark::State &state) {
    const auto d = make_data(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(roc_curve(d.x, d.y));
    }
}
BENCHMARK(BM_RocCurve)->Arg(1000)->Arg(100000);

} // namespace

BENCHMARK_MAIN();
