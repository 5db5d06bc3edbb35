#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bincal/types.hpp"

namespace bincal {

/// Numerically stable logistic function 1/(1+exp(-x)); saturates to 0/1
/// in floating point without overflow for any finite x.
double sigmoid(double x);

/// Stable -log(sigmoid(x)), i.e. softplus(-x).
double neg_log_g(double x);

struct LogisticPcaOptions {
    int max_iter = 2000;
    double rel_tol = 1e-6;
    int restarts = 1;
    std::uint64_t seed = 0;
};

/// Low-rank factorization of the logit matrix, Gamma = 1 mu^T + W Ky^T,
/// fitted by majorization-minimization of the Bernoulli deviance.
/// W has orthonormal columns; all scale lives in the basis Ky.
struct LogisticPcaModel {
    Vector mu;      // length n, logit units
    Matrix basis;   // n x J, Ky
    Matrix scores;  // p x J, W
    int j_y = 0;
    std::vector<double> deviance_trace;  // NLL per iteration, non-increasing
    bool converged = true;
    double final_rel_change = 0.0;
    LogisticPcaOptions options;
};

/// One iteration of the MM fit. `working` holds the quadratic-majorizer
/// target matrix X^(m) computed from the current factorization.
struct MmState {
    int iteration = 0;
    Vector mu;
    Matrix basis;
    Matrix scores;
    Matrix working;  // p x n
};

/// Bernoulli negative log-likelihood -sum_ij log g(y*_ij gamma_ij).
double neg_log_lik(const Eigen::MatrixXi& y, const Vector& mu,
                   const Matrix& basis, const Matrix& scores);
double neg_log_lik(const EnsembleMatrix& y, const LogisticPcaModel& model);

/// Deterministic start: mu from column means of the +/-1 matrix, W and Ky
/// from the rank-J SVD of the centered matrix with Ky scaled by 4 (the
/// inverse slope of the logistic at zero).
MmState mm_init(const Eigen::MatrixXi& y, int j_y);

/// One MM update cycle: working matrix, then mu, then W (through the SVD
/// of the regression solution, keeping W orthonormal), then Ky.
/// Never increases the negative log-likelihood.
MmState mm_step(const Eigen::MatrixXi& y, const MmState& state);

LogisticPcaModel fit_lpca(const Eigen::MatrixXi& y, int j_y,
                          const LogisticPcaOptions& opts = {});
LogisticPcaModel fit_lpca(const EnsembleMatrix& y, int j_y,
                          const LogisticPcaOptions& opts = {});

/// Logit field mu + Ky * w for a stored row or an arbitrary score vector.
Vector reconstruct(const LogisticPcaModel& model, int row);
Vector reconstruct(const LogisticPcaModel& model, const Vector& scores);

/// Artifact: JSON header at `json_path` plus sibling CSV blocks for
/// mu, basis, and scores.
void save_lpca(const LogisticPcaModel& model, const std::string& json_path);
LogisticPcaModel load_lpca(const std::string& json_path);

}  // namespace bincal
