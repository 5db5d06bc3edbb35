#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <initializer_list>
#include <limits>
#include <random>

#include "bincal/gp.hpp"
#include "bincal/optim.hpp"
#include "helpers.hpp"

using namespace bincal;

namespace {

PcGpHyper make_hyper(double kappa, std::initializer_list<double> phi,
                     double zeta) {
    PcGpHyper h;
    h.kappa = kappa;
    h.phi = Vector(static_cast<Eigen::Index>(phi.size()));
    Eigen::Index i = 0;
    for (double v : phi) h.phi[i++] = v;
    h.zeta = zeta;
    return h;
}

Matrix random_design(int p, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix x(p, d);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = unif(rng);
    return x;
}

Vector sample_scores(const Matrix& design, const PcGpHyper& hyper,
                     std::uint64_t seed) {
    Eigen::LLT<Matrix> llt;
    REQUIRE(cholesky_with_jitter(build_cov_matrix(design, hyper), llt));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Vector z(design.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = gauss(rng);
    return llt.matrixL() * z;
}

}  // namespace

TEST_CASE("cov_exp closed forms") {
    Vector a(1), b(1);
    a << 0.2;
    b << 0.2;
    CHECK(cov_exp(a, b, make_hyper(2.0, {1.0}, 0.1)) == doctest::Approx(2.1));
    b << 1.2;
    CHECK(cov_exp(a, b, make_hyper(1.0, {1.0}, 0.0)) ==
          doctest::Approx(0.3678794412).epsilon(1e-9));
    CHECK(cov_exp(a, b, make_hyper(3.0, {1e12}, 0.0)) == doctest::Approx(3.0));
    // nugget applies only under bitwise equality
    b << 0.2;
    CHECK(cov_exp(a, b, make_hyper(1.0, {1.0}, 0.5)) == doctest::Approx(1.5));
    b << std::nextafter(0.2, 1.0);
    CHECK(cov_exp(a, b, make_hyper(1.0, {1.0}, 0.5)) < 1.1);
}

TEST_CASE("kriging interpolates exactly and bounds its variance") {
    const Matrix design = random_design(40, 2, 8);
    const PcGpHyper hyper = make_hyper(1.3, {0.4, 0.7}, 0.0);
    const Vector scores = sample_scores(design, hyper, 9);
    PcGpModel model(design, scores, hyper);

    for (int i = 0; i < design.rows(); ++i) {
        auto [mean, sd] = model.predict(design.row(i).transpose());
        CHECK(std::abs(mean - scores[i]) < 1e-8);
        CHECK(sd < 1e-4);
    }

    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        Vector x(2);
        x << unif(rng), unif(rng);
        auto [mean, sd] = model.predict(x);
        CHECK(sd * sd >= 0.0);
        CHECK(sd * sd <= hyper.kappa + hyper.zeta + 1e-10);
    }
}

TEST_CASE("with a nugget, prediction at a design point returns the noisy score") {
    const Matrix design = random_design(25, 1, 3);
    const PcGpHyper hyper = make_hyper(1.0, {0.3}, 0.05);
    const Vector scores = sample_scores(design, hyper, 4);
    PcGpModel model(design, scores, hyper);
    for (int i = 0; i < design.rows(); ++i) {
        auto [mean, sd] = model.predict(design.row(i).transpose());
        CHECK(std::abs(mean - scores[i]) < 1e-8);
    }
}

TEST_CASE("prior reversion far from the data") {
    Matrix design(5, 1);
    design << 0.0, 0.01, 0.02, 0.03, 0.04;
    const PcGpHyper hyper = make_hyper(2.0, {1e-3}, 0.1);
    Vector scores(5);
    scores << 1.0, -0.5, 0.8, 0.3, -0.2;
    PcGpModel model(design, scores, hyper);
    Vector far(1);
    far << 1.0;
    auto [mean, sd] = model.predict(far);
    CHECK(std::abs(mean) < 1e-6);
    CHECK(sd * sd == doctest::Approx(hyper.kappa + hyper.zeta).epsilon(1e-9));
}

TEST_CASE("two-point kriging matches the hand-solved system") {
    Matrix design(2, 1);
    design << 0.3, 0.7;
    const double kappa = 1.5, phi = 0.5, zeta = 0.0;
    const PcGpHyper hyper = make_hyper(kappa, {phi}, zeta);
    Vector scores(2);
    scores << 0.9, -0.4;
    PcGpModel model(design, scores, hyper);

    Vector x(1);
    x << 0.5;
    auto [mean, sd] = model.predict(x);

    // Solve the 2x2 system explicitly: Sigma = kappa [[1, rho],[rho, 1]]
    const double rho = std::exp(-0.4 / phi);
    const double c = kappa * std::exp(-0.2 / phi);
    const double det = kappa * kappa * (1.0 - rho * rho);
    // Sigma^{-1} = (1/det) kappa [[1, -rho],[-rho, 1]]
    const double a0 = kappa * (c * 1.0 - c * rho) / det;
    const double mean_hand = a0 * scores[0] + a0 * scores[1];
    const double var_hand =
        kappa - (kappa * (c * c + c * c - 2.0 * rho * c * c)) / det;
    CHECK(mean == doctest::Approx(mean_hand).epsilon(1e-12));
    CHECK(sd * sd == doctest::Approx(var_hand).epsilon(1e-9));
}

TEST_CASE("prediction mean and sd are locally Lipschitz away from the data") {
    const Matrix design = random_design(30, 2, 21);
    const PcGpHyper hyper = make_hyper(1.0, {0.2, 0.2}, 0.01);
    const Vector scores = sample_scores(design, hyper, 22);
    PcGpModel model(design, scores, hyper);

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    const double h = 1e-6, C = 1e3;
    for (int k = 0; k < 50; ++k) {
        Vector x(2);
        x << unif(rng), unif(rng);
        Vector xh = x;
        xh[0] += h;
        auto [m0, s0] = model.predict(x);
        auto [m1, s1] = model.predict(xh);
        CHECK(std::abs(m1 - m0) <= C * h);
        CHECK(std::abs(s1 - s0) <= C * h);
    }
}

TEST_CASE("zero scores drive kappa to its lower bound") {
    const Matrix design = random_design(20, 1, 30);
    GpFitOptions opts;
    opts.seed = 5;
    PcGpModel model = fit_pc_gp(Vector::Zero(20), design, opts);
    CHECK(model.hyper().kappa < 1e-3);
}

TEST_CASE("MLE agrees with a brute-force likelihood grid") {
    const int p = 120;
    const Matrix design = random_design(p, 1, 40);
    const PcGpHyper truth = make_hyper(1.0, {0.3}, 0.01);
    const Vector scores = sample_scores(design, truth, 41);

    GpFitOptions opts;
    opts.seed = 6;
    double fit_ll = 0.0;
    bool conv = false;
    PcGpHyper fit =
        fit_gp_hyper(design, scores, opts, false, nullptr, &fit_ll, &conv);

    // brute-force grid over log-parameters around the truth
    const int nk = 40, nphi = 40, nz = 12;
    double best = -1e300;
    Vector best_z(3);
    for (int a = 0; a < nk; ++a)
        for (int b = 0; b < nphi; ++b)
            for (int c = 0; c < nz; ++c) {
                PcGpHyper h = make_hyper(
                    std::exp(-2.0 + 4.0 * a / (nk - 1.0)),
                    {std::exp(-3.5 + 4.0 * b / (nphi - 1.0))},
                    std::exp(-9.0 + 6.0 * c / (nz - 1.0)));
                const double ll = gp_log_lik(design, scores, h);
                if (ll > best) {
                    best = ll;
                    best_z << std::log(h.kappa), std::log(h.phi[0]),
                        std::log(h.zeta);
                }
            }
    CHECK(fit_ll >= best - 1e-6);
    const double dk = 4.0 / (nk - 1.0), dphi = 4.0 / (nphi - 1.0);
    CHECK(std::abs(std::log(fit.kappa) - best_z[0]) <= 2.0 * dk);
    CHECK(std::abs(std::log(fit.phi[0]) - best_z[1]) <= 2.0 * dphi);

    // finite-difference stationarity at the MLE for interior coordinates
    Vector z(3);
    z << std::log(fit.kappa), std::log(fit.phi[0]), std::log(fit.zeta);
    const double fd_h = 1e-4;
    for (int i = 0; i < 3; ++i) {
        const double lo = (i == 0 ? opts.log_kappa_min
                           : i == 1 ? opts.log_phi_min : opts.log_zeta_min);
        const double hi = (i == 0 ? opts.log_kappa_max
                           : i == 1 ? opts.log_phi_max : opts.log_zeta_max);
        if (z[i] - lo < 1e-3 || hi - z[i] < 1e-3) continue;  // at the box edge
        auto eval = [&](double zi) {
            Vector zz = z;
            zz[i] = zi;
            return gp_log_lik(design, scores,
                              make_hyper(std::exp(zz[0]), {std::exp(zz[1])},
                                         std::exp(zz[2])));
        };
        const double grad = (eval(z[i] + fd_h) - eval(z[i] - fd_h)) / (2 * fd_h);
        CHECK(std::abs(grad) < 1e-3 * (1.0 + std::abs(fit_ll)));
    }
}

TEST_CASE("fit_gp_hyper validates its input") {
    const Matrix design = random_design(3, 2, 1);
    CHECK_THROWS(fit_gp_hyper(design, Vector::Zero(3), {}, false, nullptr,
                              nullptr, nullptr));  // p < d+2
    Vector bad(6);
    bad.setConstant(std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS(fit_gp_hyper(random_design(6, 1, 2), bad, {}, false, nullptr,
                              nullptr, nullptr));
}

TEST_CASE("nelder_mead minimizes a bounded quadratic") {
    Vector start(2), lower(2), upper(2);
    start << 0.9, 0.1;
    lower << -1.0, -1.0;
    upper << 1.0, 1.0;
    auto f = [](const Vector& x) {
        return (x[0] - 0.3) * (x[0] - 0.3) + 2.0 * (x[1] + 0.4) * (x[1] + 0.4);
    };
    NelderMeadResult res = nelder_mead(f, start, lower, upper, 0.5, 2000, 1e-12);
    CHECK(res.x[0] == doctest::Approx(0.3).epsilon(1e-4));
    CHECK(res.x[1] == doctest::Approx(-0.4).epsilon(1e-4));
    CHECK(res.converged);
}
