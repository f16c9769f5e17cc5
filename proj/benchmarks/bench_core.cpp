#include "ocelad/comid.hpp"
#include "ocelad/drift.hpp"
#include "ocelad/eval.hpp"
#include "ocelad/rice.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace ocelad;

namespace {

std::vector<Constraint> stream(Eigen::Index n, int count) {
    DatasetConfig d;
    d.n = n;
    d.n_pts = 500;
    DriftScenario sc;
    sc.segments = {{count, Partition::A, 0.0}};
    ScenarioStream s(generate_dataset(d, 1), sc);
    std::vector<Constraint> out;
    while (!s.done())
        out.push_back(s.next().constraint);
    return out;
}

Matrix random_symmetric(Eigen::Index n) {
    Matrix A = Matrix::Random(n, n);
    return 0.5 * (A + A.transpose());
}

void BM_ProxNuclear(benchmark::State &state) {
    const Matrix G = random_symmetric(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(prox_nuclear_psd(G, 0.1));
}
BENCHMARK(BM_ProxNuclear)->Arg(4)->Arg(10)->Arg(25)->Arg(100);

void BM_ProxL1(benchmark::State &state) {
    const Matrix G = random_symmetric(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(prox_l1_psd(G, 0.1));
}
BENCHMARK(BM_ProxL1)->Arg(10)->Arg(25);

void BM_ComidStep(benchmark::State &state) {
    const auto n = state.range(0);
    const auto cs = stream(n, 1024);
    ComidLearner learner(MetricState::identity(n, 2.0), 0.005, {0.25, Regularizer::NuclearNorm});
    std::size_t i = 0;
    for (auto _ : state) {
        learner = learner.step(cs[i]);
        i = (i + 1) % cs.size();
    }
}
BENCHMARK(BM_ComidStep)->Arg(10)->Arg(25);

// one full ensemble step at t around 2^12, so about 13 active learners
void BM_RiceStep(benchmark::State &state) {
    const auto n = state.range(0);
    const auto cs = stream(n, 1 << 13);
    RiceConfig cfg;
    cfg.dim = n;
    cfg.loss = {0.25, Regularizer::NuclearNorm};
    RiceEnsemble warm(cfg);
    for (int t = 1; t < (1 << 12); ++t)
        warm.step(t, cs[static_cast<std::size_t>(t - 1)]);
    for (auto _ : state) {
        state.PauseTiming();
        RiceEnsemble ens = warm;
        state.ResumeTiming();
        const auto t = ens.next_step();
        benchmark::DoNotOptimize(ens.step(t, cs[static_cast<std::size_t>(t - 1)]));
    }
}
BENCHMARK(BM_RiceStep)->Arg(10)->Arg(25);

void BM_KnnError(benchmark::State &state) {
    DatasetConfig d;
    d.n = 10;
    d.n_pts = state.range(0);
    const auto data = generate_dataset(d, 2);
    const auto L = embedding_from_metric(Matrix::Identity(10, 10), 10);
    const Matrix emb = L.apply(data.points);
    for (auto _ : state)
        benchmark::DoNotOptimize(knn_error(emb, data.labels_a, 5));
}
BENCHMARK(BM_KnnError)->Arg(500)->Arg(2000);

} // namespace

BENCHMARK_MAIN();
