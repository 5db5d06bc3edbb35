#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "bincal/discrepancy.hpp"
#include "bincal/synthetic.hpp"
#include "helpers.hpp"

using namespace bincal;
using testutil::TempDir;

namespace {

EnsembleMatrix tiny_ensemble(const Eigen::MatrixXi& y) {
    GridSpec g(1, static_cast<int>(y.cols()), {0, 0}, {1, 1});
    Matrix pts(y.rows(), 1);
    for (int i = 0; i < y.rows(); ++i) pts(i, 0) = i / (y.rows() - 1.0);
    DesignMatrix design(pts, {"a"}, {{0, 1}}, {false});
    return EnsembleMatrix(design, g, y);
}

}  // namespace

TEST_CASE("mismatch proportions hand cases") {
    Eigen::MatrixXi y(2, 3);
    y << 1, 1, 1, 1, 1, 0;
    EnsembleMatrix ens = tiny_ensemble(y);
    Eigen::VectorXi z(3);
    z << 1, 0, 0;
    BinaryField obs(ens.grid, z);
    Vector r = mismatch_proportions(ens, obs);
    CHECK(r[0] == 0.0);   // column equals observation
    CHECK(r[1] == 1.0);   // (1,1) vs 0
    CHECK(r[2] == 0.5);   // (1,0) vs 0
}

TEST_CASE("mismatch can be negative and grids must agree") {
    Eigen::MatrixXi y(2, 2);
    y << 0, 0, 0, 1;
    EnsembleMatrix ens = tiny_ensemble(y);
    Eigen::VectorXi z(2);
    z << 1, 1;
    Vector r = mismatch_proportions(ens, BinaryField(ens.grid, z));
    CHECK(r[0] == -1.0);
    CHECK(r[1] == -0.5);

    GridSpec other(2, 1, {0, 0}, {1, 1});
    CHECK_THROWS(mismatch_proportions(ens, BinaryField(other, z)));
}

TEST_CASE("basis closed forms, cutoff, and clamping") {
    Vector r(4);
    r << 0.3, 0.6, 1.0, -0.5;
    DiscrepancyBasis b = build_basis(r, 0.5);
    CHECK(b.k_d[0] == 0.0);
    CHECK(b.k_d[1] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(b.k_d[2] == doctest::Approx(std::log(1.999 / 0.001)).epsilon(1e-9));
    CHECK(b.k_d[3] == 0.0);  // |r| == cutoff stays zero

    CHECK_THROWS(build_basis(r, 0.0));
    CHECK_THROWS(build_basis(r, 1.0));
    Vector bad(1);
    bad << 1.5;
    CHECK_THROWS(build_basis(bad, 0.5));
}

TEST_CASE("antisymmetry, sparsity monotonicity, and boundedness") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector r(200);
    for (int j = 0; j < 200; ++j) r[j] = unif(rng);

    DiscrepancyBasis pos = build_basis(r, 0.5);
    DiscrepancyBasis neg = build_basis((-r).eval(), 0.5);
    CHECK((pos.k_d + neg.k_d).cwiseAbs().maxCoeff() < 1e-12);

    const double bound = std::log(1.999 / 0.001);
    int prev_nnz = 201;
    for (double c : {0.2, 0.4, 0.6, 0.8}) {
        DiscrepancyBasis b = build_basis(r, c);
        int nnz = 0;
        for (int j = 0; j < 200; ++j) {
            if (b.k_d[j] != 0.0) ++nnz;
            CHECK(std::abs(b.k_d[j]) <= bound);
        }
        CHECK(nnz <= prev_nnz);
        prev_nnz = nnz;
    }
}

TEST_CASE("recover_check alignment scoring") {
    Vector r(6);
    r << 0.8, -0.9, 0.7, 0.0, 0.2, -0.6;
    DiscrepancyBasis b = build_basis(r, 0.5);

    CHECK(recover_check(b, b.k_d) == doctest::Approx(1.0));
    // the negated pattern scores identically: direction is unidentified
    CHECK(recover_check(b, (-b.k_d).eval()) == doctest::Approx(1.0));

    // construct a pattern exactly decorrelated from k_d on its support
    std::vector<int> support;
    for (int j = 0; j < 6; ++j)
        if (b.k_d[j] != 0.0) support.push_back(j);
    const int m = static_cast<int>(support.size());
    Vector a(m), raw(m);
    for (int i = 0; i < m; ++i) {
        a[i] = b.k_d[support[i]];
        raw[i] = (i % 2 == 0) ? 1.0 : 2.0;  // anything not collinear with a
    }
    Vector ac = (a.array() - a.mean()).matrix();
    Vector rc = (raw.array() - raw.mean()).matrix();
    rc -= ac * (rc.dot(ac) / ac.squaredNorm());  // Gram-Schmidt
    Vector ortho = Vector::Zero(6);
    for (int i = 0; i < m; ++i) ortho[support[i]] = rc[i];
    CHECK(std::abs(recover_check(b, ortho)) < 1e-9);

    CHECK_THROWS(recover_check(b, Vector::Zero(5)));
    CHECK_THROWS(recover_check(b, Vector::Zero(6)));  // zero variance
}

TEST_CASE("planted synthetic discrepancy is recovered") {
    SyntheticConfig cfg;
    cfg.seed = 3;
    const EnsembleMatrix ens = synth_ensemble(cfg);
    SyntheticObservation obs = make_observation(cfg);
    DiscrepancyBasis basis =
        build_basis(mismatch_proportions(ens, obs.observation));
    CHECK(recover_check(basis, obs.true_logit_discrepancy) > 0.5);
    for (int j = 0; j < basis.r.size(); ++j)
        if (std::abs(basis.r[j]) <= 0.5) CHECK(basis.k_d[j] == 0.0);
}

TEST_CASE("basis csv round trip") {
    TempDir tmp;
    Vector r(5);
    r << 0.9, -0.7, 0.1, 0.55, -1.0;
    DiscrepancyBasis b = build_basis(r, 0.5);
    save_basis(b, tmp.file("basis.csv"));
    DiscrepancyBasis back = load_basis(tmp.file("basis.csv"));
    CHECK(back.cutoff == b.cutoff);
    CHECK(back.k_d == b.k_d);
    CHECK(back.r == b.r);
}
