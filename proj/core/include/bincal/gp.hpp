#pragma once

#include <cstdint>
#include <utility>

#include "bincal/types.hpp"

namespace bincal {

/// Exponential-covariance hyperparameters for one GP: partial sill kappa,
/// per-input-dimension ranges phi, and nugget zeta.
struct PcGpHyper {
    double kappa = 1.0;
    Vector phi;
    double zeta = 0.0;
};

/// kappa * exp(-sum_i |a_i - b_i| / phi_i) + zeta * 1(a == b).
/// The indicator uses bitwise equality of the coordinates, so the nugget
/// contributes to cross-covariance only when a prediction point coincides
/// exactly with a design point.
double cov_exp(const Vector& a, const Vector& b, const PcGpHyper& hyper);

struct GpFitOptions {
    int restarts = 5;
    int max_evals = 400;
    std::uint64_t seed = 0;
    // Box bounds for the simplex search in log-parameter space.
    double log_kappa_min = -8.0, log_kappa_max = 8.0;
    double log_phi_min = -6.0, log_phi_max = 4.0;
    double log_zeta_min = -12.0, log_zeta_max = 2.0;
};

/// A zero-mean GP fitted to one logistic-PC score column, with the training
/// covariance factorization cached for prediction.
class PcGpModel {
public:
    PcGpModel() = default;
    /// Builds and factorizes the training covariance; throws if it is not
    /// positive definite even after a 1e-10 jitter.
    PcGpModel(Matrix design_points, Vector scores, PcGpHyper hyper);

    const PcGpHyper& hyper() const { return hyper_; }
    const Matrix& design_points() const { return design_points_; }
    const Vector& scores() const { return scores_; }
    double log_lik() const { return log_lik_; }
    bool converged() const { return converged_; }
    int p() const { return static_cast<int>(scores_.size()); }
    int d() const { return static_cast<int>(design_points_.cols()); }

    /// Kriging mean and standard deviation at a unit-cube point.
    /// Variance is (kappa + zeta) - c^T Sigma^{-1} c, floored at zero.
    std::pair<double, double> predict(const Vector& point) const;

    /// Zero-mean Gaussian log-likelihood of the training scores.
    double training_log_lik() const { return log_lik_; }

    void set_fit_metadata(double log_lik, bool converged) {
        log_lik_ = log_lik;
        converged_ = converged;
    }

private:
    PcGpHyper hyper_;
    Matrix design_points_;  // p x d
    Vector scores_;         // p
    Eigen::LLT<Matrix> chol_;
    Vector alpha_;  // Sigma^{-1} scores
    double log_lik_ = 0.0;
    bool converged_ = true;
};

/// Dense training covariance under cov_exp (nugget on the diagonal only).
Matrix build_cov_matrix(const Matrix& points, const PcGpHyper& hyper);

/// Cholesky factorization, retried once with a 1e-10 diagonal jitter.
bool cholesky_with_jitter(Matrix sigma, Eigen::LLT<Matrix>& llt);

/// Zero-mean Gaussian log-likelihood of `values` under cov_exp over the
/// design. With profile_mean, a constant mean is profiled out by GLS and
/// written to *mean_out. Returns -inf when the covariance is not PD.
double gp_log_lik(const Matrix& design_points, const Vector& values,
                  const PcGpHyper& hyper, bool profile_mean = false,
                  double* mean_out = nullptr);

/// MLE of (kappa, phi, zeta) by simplex search in log space with seeded
/// restarts.
PcGpModel fit_pc_gp(const Vector& scores, const Matrix& design_points,
                    const GpFitOptions& opts = {});

/// Same search, but profiling a constant mean; used by the scalar emulator.
PcGpHyper fit_gp_hyper(const Matrix& design_points, const Vector& values,
                       const GpFitOptions& opts, bool profile_mean,
                       double* mean_out, double* log_lik_out,
                       bool* converged_out);

}  // namespace bincal
