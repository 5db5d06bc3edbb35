#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bincal/discrepancy.hpp"
#include "bincal/emulator.hpp"
#include "bincal/types.hpp"

namespace bincal {

/// Uniform prior box for theta (in unit-cube coordinates) and the
/// inverse-Gamma prior IG(a_d, b_d) on the discrepancy variance sigma_d^2.
struct PriorConfig {
    std::vector<std::pair<double, double>> theta_bounds;
    double a_d = 2.0;
    double b_d = 3.0;

    static PriorConfig unit_cube(int d, double a_d = 2.0, double b_d = 3.0);
};

/// One point of the calibration posterior over (theta, eta, v, sigma_d^2).
/// The observation logits are derived: lambda = mu + Ky eta + k_d v.
struct CalibState {
    Vector theta;
    Vector eta;
    double v = 0.0;
    double sigma2_d = 1.0;
};

/// Per-block Gaussian random-walk standard deviations, in update order.
struct ProposalScales {
    double theta = 0.05;
    double eta = 0.1;
    double v = 0.5;
    double log_sigma2 = 0.5;
};

struct McmcConfig {
    int iterations = 100000;
    int burn_in = 20000;
    int thin = 10;
    bool adapt = true;
    std::uint64_t seed = 0;
    ProposalScales initial_scales{};
    /// When false the observation likelihood is dropped, leaving the prior
    /// (and the GP terms, which integrate out of the theta marginal).
    bool use_observation = true;
};

struct Chain {
    int d = 0;
    int j_y = 0;
    std::vector<CalibState> samples;  // post burn-in, thinned
    std::vector<double> log_posts;
    std::array<double, 4> acceptance{};  // theta, eta, v, sigma2_d blocks
    McmcConfig config;
    ProposalScales adapted_scales;

    std::vector<double> theta_series(int coord) const;
    std::vector<double> eta_series(int coord) const;
};

/// Bernoulli log-likelihood sum_j [z_j lambda_j - log(1 + exp(lambda_j))],
/// overflow-safe.
double observation_log_lik(const BinaryField& observation, const Vector& lambda);

/// Log posterior density (up to the likelihood's constant); -inf outside the
/// support (theta out of bounds or sigma_d^2 <= 0).
double log_posterior(const CalibState& state, const BinaryField& observation,
                     const LogisticPcaModel& lpca, const PcEmulator& emulator,
                     const DiscrepancyBasis& basis, const PriorConfig& priors,
                     bool use_observation = true);

/// Same density with the GP score prediction at state.theta precomputed.
double log_posterior_with_pred(const CalibState& state,
                               const BinaryField& observation,
                               const LogisticPcaModel& lpca,
                               const EmulatorPrediction& pred,
                               const DiscrepancyBasis& basis,
                               const PriorConfig& priors,
                               bool use_observation = true);

/// One sweep of block-wise Gaussian random-walk Metropolis-Hastings in the
/// order (theta, eta, v, log sigma_d^2), with the log-transform Jacobian for
/// the variance block. Deterministic given the rng stream.
std::pair<CalibState, std::array<bool, 4>> mh_step(
    const CalibState& state, const BinaryField& observation,
    const LogisticPcaModel& lpca, const PcEmulator& emulator,
    const DiscrepancyBasis& basis, const PriorConfig& priors,
    const ProposalScales& scales, std::mt19937_64& rng,
    bool use_observation = true);

/// Runs the sampler with Robbins-Monro scale adaptation during burn-in only
/// (targets 0.25 for multivariate blocks, 0.44 for scalars), then emits the
/// post-burn-in thinned chain.
Chain calibrate(const BinaryField& observation, const LogisticPcaModel& lpca,
                const PcEmulator& emulator, const DiscrepancyBasis& basis,
                const PriorConfig& priors, const McmcConfig& config);

struct McseResult {
    double mean = 0.0;
    double mcse = 0.0;
    double ess = 0.0;
};

/// Batch-means Monte Carlo standard error with batch size floor(sqrt(T)).
McseResult mcse_batch_means(const std::vector<double>& series);

struct DensityGrid {
    Vector x;  // grid nodes for the first coordinate
    Vector y;
    Matrix density;  // y-major: density(iy, ix)
};

/// 2-D Gaussian-kernel density estimate of a theta pair over its prior box,
/// normalized to integrate to one under the trapezoid rule.
DensityGrid pairwise_density(const Chain& chain, int coord_a, int coord_b,
                             const PriorConfig& priors, int grid_points = 64);

void save_density_grid(const DensityGrid& grid, const std::string& csv_path);

// Chain CSV: iteration,theta_*,eta_*,v,sigma2_d,log_post.
void save_chain(const Chain& chain, const std::string& csv_path);
Chain load_chain(const std::string& csv_path);

/// Diagnostics JSON: per-block acceptance plus mean/MCSE/ESS per coordinate.
void save_diagnostics(const Chain& chain, const std::string& json_path);

}  // namespace bincal
