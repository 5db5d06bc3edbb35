#include <benchmark/benchmark.h>

#include <random>

#include "bincal/calibration.hpp"
#include "bincal/discrepancy.hpp"
#include "bincal/emulator.hpp"
#include "bincal/gp.hpp"
#include "bincal/lpca.hpp"
#include "bincal/synthetic.hpp"

using namespace bincal;

namespace {

const EnsembleMatrix& ensemble() {
    static EnsembleMatrix e = synth_ensemble(SyntheticConfig{});
    return e;
}

Matrix random_design(int p, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix x(p, d);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = unif(rng);
    return x;
}

void bm_mm_step(benchmark::State& state) {
    const Eigen::MatrixXi& y = ensemble().values;  // 100 x 900
    MmState s = mm_init(y, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        s = mm_step(y, s);
        benchmark::DoNotOptimize(s.mu.sum());
    }
}
BENCHMARK(bm_mm_step)->Arg(5)->Arg(10);

void bm_cov_matrix(benchmark::State& state) {
    const Matrix design = random_design(static_cast<int>(state.range(0)), 2, 1);
    PcGpHyper hyper;
    hyper.kappa = 1.0;
    hyper.phi = Vector::Constant(2, 0.3);
    hyper.zeta = 0.01;
    for (auto _ : state) {
        Matrix sigma = build_cov_matrix(design, hyper);
        benchmark::DoNotOptimize(sigma(0, 0));
    }
}
BENCHMARK(bm_cov_matrix)->Arg(100)->Arg(400);

void bm_gp_log_lik(benchmark::State& state) {
    const int p = static_cast<int>(state.range(0));
    const Matrix design = random_design(p, 2, 2);
    PcGpHyper hyper;
    hyper.kappa = 1.0;
    hyper.phi = Vector::Constant(2, 0.3);
    hyper.zeta = 0.01;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    Vector scores(p);
    for (int i = 0; i < p; ++i) scores[i] = gauss(rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(gp_log_lik(design, scores, hyper));
}
BENCHMARK(bm_gp_log_lik)->Arg(100)->Arg(200);

void bm_mh_sweep(benchmark::State& state) {
    const EnsembleMatrix& ens = ensemble();
    static LogisticPcaModel lpca = [&] {
        LogisticPcaOptions lo;
        lo.max_iter = 200;
        return fit_lpca(ens, 5, lo);
    }();
    static PcEmulator emulator = [&] {
        GpFitOptions go;
        go.restarts = 2;
        return fit_emulator(lpca, ens.design.points, go, 2);
    }();
    SyntheticConfig cfg;
    const SyntheticObservation obs = make_observation(cfg);
    const DiscrepancyBasis basis =
        build_basis(mismatch_proportions(ens, obs.observation));
    const PriorConfig priors = PriorConfig::unit_cube(2);

    CalibState s;
    s.theta = Vector::Constant(2, 0.5);
    s.eta = predict_scores(emulator, s.theta).mean;
    s.v = 0.0;
    s.sigma2_d = 1.0;
    std::mt19937_64 rng(4);
    ProposalScales scales;
    for (auto _ : state) {
        s = mh_step(s, obs.observation, lpca, emulator, basis, priors, scales,
                    rng).first;
        benchmark::DoNotOptimize(s.v);
    }
}
BENCHMARK(bm_mh_sweep);

}  // namespace

BENCHMARK_MAIN();
