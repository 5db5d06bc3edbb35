#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bincal/emulator.hpp"
#include "bincal/synthetic.hpp"
#include "helpers.hpp"

using namespace bincal;
using testutil::TempDir;

namespace {

SyntheticConfig small_cfg() {
    SyntheticConfig cfg;
    cfg.grid_rows = 10;
    cfg.grid_cols = 10;
    cfg.design_side = 5;
    return cfg;
}

struct Fixture {
    EnsembleMatrix ensemble;
    LogisticPcaModel lpca;
    PcEmulator emulator;
};

const Fixture& fixture() {
    static Fixture f = [] {
        Fixture fx{synth_ensemble(small_cfg()), {}, {}};
        LogisticPcaOptions lo;
        lo.seed = 1;
        fx.lpca = fit_lpca(fx.ensemble, 4, lo);
        GpFitOptions go;
        go.seed = 1;
        fx.emulator = fit_emulator(fx.lpca, fx.ensemble.design.points, go, 2);
        return fx;
    }();
    return f;
}

}  // namespace

TEST_CASE("prediction at a design point reproduces the training scores") {
    const Fixture& f = fixture();
    for (int i = 0; i < f.ensemble.p(); ++i) {
        EmulatorPrediction pred = predict_scores(
            f.emulator, f.ensemble.design.points.row(i).transpose());
        for (int j = 0; j < f.lpca.j_y; ++j)
            CHECK(std::abs(pred.mean[j] - f.lpca.scores(i, j)) < 1e-8);
    }
}

TEST_CASE("predictive sd is bounded by the prior sd") {
    const Fixture& f = fixture();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        Vector x(2);
        x << unif(rng), unif(rng);
        EmulatorPrediction pred = predict_scores(f.emulator, x);
        for (int j = 0; j < f.lpca.j_y; ++j) {
            const auto& h = f.emulator.gps[j].hyper();
            CHECK(pred.sd[j] >= 0.0);
            CHECK(pred.sd[j] * pred.sd[j] <= h.kappa + h.zeta + 1e-10);
        }
    }
}

TEST_CASE("probability field chains the interpolation identity") {
    const Fixture& f = fixture();
    for (int i : {0, 7, 24}) {
        Vector probs = emulate_probability_field(
            f.lpca, f.emulator, f.ensemble.design.points.row(i).transpose());
        Vector gamma = reconstruct(f.lpca, i);
        for (int j = 0; j < probs.size(); ++j) {
            CHECK(probs[j] > 0.0);
            CHECK(probs[j] < 1.0);
            CHECK(probs[j] == doctest::Approx(sigmoid(gamma[j])).epsilon(1e-6));
        }
    }
}

TEST_CASE("emulated field at the truth point matches the simulator output") {
    const Fixture& f = fixture();
    SyntheticConfig cfg = small_cfg();
    const double t1u = (cfg.truth.first - 0.3) / 0.35;
    const double t2u = cfg.truth.second / 0.2;
    Vector x(2);
    x << t1u, t2u;
    Vector probs = emulate_probability_field(f.lpca, f.emulator, x);
    BinaryField pred = dichotomize(probs, f.ensemble.grid);
    BinaryField truth = synth_output(cfg.truth, f.ensemble.grid, cfg);
    int mismatch = 0;
    for (int j = 0; j < truth.values.size(); ++j)
        mismatch += pred.values[j] != truth.values[j];
    CHECK(mismatch <= static_cast<int>(0.05 * truth.values.size()));
}

TEST_CASE("dichotomize tie rule") {
    GridSpec g(1, 3, {0, 0}, {1, 1});
    Vector probs(3);
    probs << 0.5, 0.49, 0.0;
    BinaryField f = dichotomize(probs, g);
    CHECK(f.values[0] == 1);
    CHECK(f.values[1] == 0);
    CHECK(f.values[2] == 0);
}

TEST_CASE("component fits are independent of the thread count") {
    const Fixture& f = fixture();
    GpFitOptions go;
    go.seed = 1;
    PcEmulator serial = fit_emulator(f.lpca, f.ensemble.design.points, go, 1);
    for (int j = 0; j < f.lpca.j_y; ++j) {
        CHECK(serial.gps[j].hyper().kappa == f.emulator.gps[j].hyper().kappa);
        CHECK(serial.gps[j].hyper().zeta == f.emulator.gps[j].hyper().zeta);
        CHECK(serial.gps[j].hyper().phi == f.emulator.gps[j].hyper().phi);
    }
}

TEST_CASE("cross validation of an identical-row ensemble is perfect") {
    GridSpec g(2, 3, {0, 0}, {1, 1});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix pts(12, 1);
    for (int i = 0; i < 12; ++i) pts(i, 0) = unif(rng);
    DesignMatrix design(pts, {"a"}, {{0, 1}}, {false});
    Eigen::MatrixXi row(1, 6);
    row << 1, 0, 1, 1, 0, 0;
    EnsembleMatrix ensemble(design, g, row.replicate(12, 1));
    CvReport report = cross_validate(ensemble, 1, 0.25, 3);
    CHECK(report.overall_rate == 0.0);
    for (double r : report.per_run_rate) CHECK(r == 0.0);
}

TEST_CASE("cross validation validates the fold fraction") {
    const Fixture& f = fixture();
    CHECK_THROWS(cross_validate(f.ensemble, 4, 0.6, 1));
    CHECK_THROWS(cross_validate(f.ensemble, 4, 0.0, 1));
}

TEST_CASE("cv report covers every run exactly once and is serializable") {
    TempDir tmp;
    const Fixture& f = fixture();
    LogisticPcaOptions lo;
    lo.seed = 2;
    lo.max_iter = 300;
    GpFitOptions go;
    go.seed = 2;
    go.restarts = 2;
    CvReport report = cross_validate(f.ensemble, 3, 0.2, 7, lo, go, 2);
    CHECK(report.per_run_rate.size() == static_cast<size_t>(f.ensemble.p()));
    CHECK(report.per_cell_rate.size() == f.ensemble.n());
    CHECK(report.overall_rate >= 0.0);
    CHECK(report.overall_rate <= 1.0);
    CHECK_NOTHROW(save_cv_report(report, tmp.file("cv.csv")));
}

TEST_CASE("emulator artifact round trip preserves predictions") {
    TempDir tmp;
    const Fixture& f = fixture();
    save_emulator(f.emulator, tmp.file("emu.json"), "lpca.json");
    PcEmulator back = load_emulator(tmp.file("emu.json"));
    CHECK(back.j_y() == f.emulator.j_y());
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        Vector x(2);
        x << unif(rng), unif(rng);
        EmulatorPrediction a = predict_scores(f.emulator, x);
        EmulatorPrediction b = predict_scores(back, x);
        CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((a.sd - b.sd).cwiseAbs().maxCoeff() < 1e-12);
    }
}
