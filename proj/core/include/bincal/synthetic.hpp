#pragma once

#include <cstdint>
#include <utility>

#include "bincal/types.hpp"

namespace bincal {

struct GpNoiseConfig {
    double sill = 1.5;
    double range = 0.03;
    double nugget = 1e-5;
};

/// Benchmark with known ground truth: an indicator-of-quadratic binary
/// pattern over a 30x30 grid on [-1,1]x[-1.5,1.5], a 10x10 design lattice,
/// and a GP-contaminated synthetic observation.
struct SyntheticConfig {
    std::pair<double, double> theta1_range{0.3, 0.65};
    std::pair<double, double> theta2_range{0.0, 0.2};
    int grid_rows = 30;  // rows index s2 in [-1.5, 1.5]
    int grid_cols = 30;  // cols index s1 in [-1, 1]
    int design_side = 10;
    GpNoiseConfig noise{};
    std::pair<double, double> truth{0.494, 0.089};
    // Logit magnitude assigned to the clean binary field before adding the
    // discrepancy draw. Calibrated so that sill 1.5 flips ~10% of cells:
    // flip probability = Phi(-L / sqrt(sill + nugget)).
    double saturation_logit = 1.5697;
    std::uint64_t seed = 0;
};

GridSpec synth_grid(const SyntheticConfig& cfg);

/// Cell is 1 iff 1 - s1^2 - (s2/1.5)^2 - theta1 + theta2 (s2 + 1.5) > 0.
BinaryField synth_output(std::pair<double, double> theta, const GridSpec& grid,
                         const SyntheticConfig& cfg);

/// Regular design_side x design_side lattice over the unit square, with
/// native ranges taken from the config.
DesignMatrix synth_design(const SyntheticConfig& cfg);

/// Deterministic p = design_side^2 ensemble over the lattice.
EnsembleMatrix synth_ensemble(const SyntheticConfig& cfg);

/// One draw from a zero-mean GP with exponential covariance
/// sill * exp(-||s_j - s_k|| / range) + nugget * 1(j=k), distances in the
/// grid's native coordinates. Dense factorization.
Vector sample_gp_field(const GridSpec& grid, double sill, double range,
                       double nugget, std::uint64_t seed);

struct SyntheticObservation {
    BinaryField observation;
    Vector true_logit_discrepancy;
    BinaryField truth_output;
};

/// Contaminates the truth-point output on the logit scale and dichotomizes
/// at zero, returning the drawn discrepancy for recovery checks.
SyntheticObservation make_observation(const SyntheticConfig& cfg);

/// Planted smooth scalar response standing in for a simulator summary
/// (e.g. volume change); evaluated on native-unit coordinates.
double synth_response(double theta1, double theta2);
Vector synth_responses(const DesignMatrix& design);

}  // namespace bincal
