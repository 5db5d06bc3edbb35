#include "bincal/synthetic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "bincal/gp.hpp"

namespace bincal {

GridSpec synth_grid(const SyntheticConfig& cfg) {
    // Lattice nodes span the field inclusively: s1 = -1..1, s2 = -1.5..1.5.
    return GridSpec(cfg.grid_rows, cfg.grid_cols, {-1.0, -1.5},
                    {2.0 / (cfg.grid_cols - 1), 3.0 / (cfg.grid_rows - 1)});
}

BinaryField synth_output(std::pair<double, double> theta, const GridSpec& grid,
                         const SyntheticConfig& cfg) {
    const auto [t1, t2] = theta;
    if (t1 < cfg.theta1_range.first || t1 > cfg.theta1_range.second ||
        t2 < cfg.theta2_range.first || t2 > cfg.theta2_range.second)
        throw std::invalid_argument("synth_output: theta out of range");

    Eigen::VectorXi values(grid.n_cells());
    for (int flat = 0; flat < grid.n_cells(); ++flat) {
        const auto [s1, s2] = grid.coordinate(flat);
        const double radicand =
            1.0 - s1 * s1 - (s2 / 1.5) * (s2 / 1.5) - t1 + t2 * (s2 + 1.5);
        values[flat] = radicand > 0.0 ? 1 : 0;
    }
    return BinaryField(grid, std::move(values));
}

DesignMatrix synth_design(const SyntheticConfig& cfg) {
    const int side = cfg.design_side;
    const int p = side * side;
    Matrix pts(p, 2);
    for (int i1 = 0; i1 < side; ++i1)
        for (int i2 = 0; i2 < side; ++i2) {
            const int k = i1 * side + i2;
            pts(k, 0) = static_cast<double>(i1) / (side - 1);
            pts(k, 1) = static_cast<double>(i2) / (side - 1);
        }
    return DesignMatrix(std::move(pts), {"theta1", "theta2"},
                        {cfg.theta1_range, cfg.theta2_range}, {false, false});
}

EnsembleMatrix synth_ensemble(const SyntheticConfig& cfg) {
    const DesignMatrix design = synth_design(cfg);
    const GridSpec grid = synth_grid(cfg);
    Eigen::MatrixXi values(design.p(), grid.n_cells());
    for (int i = 0; i < design.p(); ++i) {
        const Vector native = to_native(design, design.points.row(i).transpose());
        const BinaryField field =
            synth_output({native[0], native[1]}, grid, cfg);
        values.row(i) = field.values.transpose();
    }
    return EnsembleMatrix(design, grid, std::move(values));
}

Vector sample_gp_field(const GridSpec& grid, double sill, double range,
                       double nugget, std::uint64_t seed) {
    if (sill < 0.0 || nugget < 0.0 || (sill > 0.0 && range <= 0.0))
        throw std::invalid_argument("sample_gp_field: invalid covariance parameters");
    const int n = grid.n_cells();
    if (sill == 0.0 && nugget == 0.0) return Vector::Zero(n);

    Matrix sigma(n, n);
    for (int j = 0; j < n; ++j) {
        const auto [xj, yj] = grid.coordinate(j);
        sigma(j, j) = sill + nugget;
        for (int k = j + 1; k < n; ++k) {
            const auto [xk, yk] = grid.coordinate(k);
            const double dist = std::hypot(xj - xk, yj - yk);
            const double c = sill * std::exp(-dist / range);
            sigma(j, k) = c;
            sigma(k, j) = c;
        }
    }
    Eigen::LLT<Matrix> llt;
    if (!cholesky_with_jitter(std::move(sigma), llt))
        throw std::runtime_error("sample_gp_field: covariance factorization failed");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector z(n);
    for (int j = 0; j < n; ++j) z[j] = gauss(rng);
    return llt.matrixL() * z;
}

SyntheticObservation make_observation(const SyntheticConfig& cfg) {
    const GridSpec grid = synth_grid(cfg);
    BinaryField clean = synth_output(cfg.truth, grid, cfg);
    const Vector noise = sample_gp_field(grid, cfg.noise.sill, cfg.noise.range,
                                         cfg.noise.nugget, cfg.seed);

    Eigen::VectorXi values(grid.n_cells());
    for (int j = 0; j < grid.n_cells(); ++j) {
        const double logit =
            cfg.saturation_logit * (2 * clean.values[j] - 1) + noise[j];
        values[j] = logit > 0.0 ? 1 : 0;
    }
    SyntheticObservation out;
    out.observation = BinaryField(grid, std::move(values));
    out.true_logit_discrepancy = noise;
    out.truth_output = std::move(clean);
    return out;
}

double synth_response(double theta1, double theta2) {
    return 100.0 * std::exp(-1.5 * theta1) + 30.0 * theta2 * (1.0 + theta1);
}

Vector synth_responses(const DesignMatrix& design) {
    Vector out(design.p());
    for (int i = 0; i < design.p(); ++i) {
        const Vector native = to_native(design, design.points.row(i).transpose());
        out[i] = synth_response(native[0], native[1]);
    }
    return out;
}

}  // namespace bincal
