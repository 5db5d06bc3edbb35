#include "bincal/gp.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "bincal/optim.hpp"

namespace bincal {

namespace {

constexpr double kJitter = 1e-10;
constexpr double kLog2Pi = 1.8378770664093453;

}  // namespace

Matrix build_cov_matrix(const Matrix& points, const PcGpHyper& hyper) {
    const Eigen::Index p = points.rows();
    Matrix sigma(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        sigma(i, i) = hyper.kappa + hyper.zeta;
        for (Eigen::Index k = i + 1; k < p; ++k) {
            double expo = 0.0;
            for (Eigen::Index j = 0; j < points.cols(); ++j)
                expo += std::abs(points(i, j) - points(k, j)) / hyper.phi[j];
            const double c = hyper.kappa * std::exp(-expo);
            sigma(i, k) = c;
            sigma(k, i) = c;
        }
    }
    return sigma;
}

bool cholesky_with_jitter(Matrix sigma, Eigen::LLT<Matrix>& llt) {
    llt.compute(sigma);
    if (llt.info() == Eigen::Success) return true;
    sigma.diagonal().array() += kJitter;
    llt.compute(sigma);
    return llt.info() == Eigen::Success;
}

double cov_exp(const Vector& a, const Vector& b, const PcGpHyper& hyper) {
    if (a.size() != b.size() || a.size() != hyper.phi.size())
        throw std::invalid_argument("cov_exp: dimension mismatch");
    double expo = 0.0;
    bool equal = true;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        expo += std::abs(a[i] - b[i]) / hyper.phi[i];
        equal = equal && (a[i] == b[i]);
    }
    return hyper.kappa * std::exp(-expo) + (equal ? hyper.zeta : 0.0);
}

double gp_log_lik(const Matrix& design_points, const Vector& values,
                  const PcGpHyper& hyper, bool profile_mean, double* mean_out) {
    const Eigen::Index p = values.size();
    Eigen::LLT<Matrix> llt;
    if (!cholesky_with_jitter(build_cov_matrix(design_points, hyper), llt))
        return -std::numeric_limits<double>::infinity();

    Vector resid = values;
    double mean = 0.0;
    if (profile_mean) {
        const Vector ones = Vector::Ones(p);
        const Vector si_ones = llt.solve(ones);
        mean = si_ones.dot(values) / si_ones.dot(ones);
        resid.array() -= mean;
    }
    if (mean_out) *mean_out = mean;

    const Vector alpha = llt.solve(resid);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
        log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
    return -0.5 * resid.dot(alpha) - 0.5 * log_det - 0.5 * p * kLog2Pi;
}

PcGpModel::PcGpModel(Matrix design_points, Vector scores, PcGpHyper hyper)
    : hyper_(std::move(hyper)),
      design_points_(std::move(design_points)),
      scores_(std::move(scores)) {
    if (design_points_.rows() != scores_.size())
        throw std::invalid_argument("PcGpModel: design/scores size mismatch");
    if (hyper_.phi.size() != design_points_.cols())
        throw std::invalid_argument("PcGpModel: phi length != design d");
    if (!(hyper_.kappa > 0.0) || !(hyper_.zeta >= 0.0) ||
        !(hyper_.phi.array() > 0.0).all())
        throw std::invalid_argument("PcGpModel: hyperparameters must be positive");
    if (!cholesky_with_jitter(build_cov_matrix(design_points_, hyper_), chol_))
        throw std::runtime_error("PcGpModel: training covariance not positive definite");
    alpha_ = chol_.solve(scores_);
    log_lik_ = gp_log_lik(design_points_, scores_, hyper_);
}

std::pair<double, double> PcGpModel::predict(const Vector& point) const {
    if (point.size() != design_points_.cols())
        throw std::invalid_argument("predict: point length != design d");
    const Eigen::Index pp = scores_.size();
    Vector c(pp);
    for (Eigen::Index i = 0; i < pp; ++i)
        c[i] = cov_exp(point, design_points_.row(i).transpose(), hyper_);
    const double mean = c.dot(alpha_);
    const double var = hyper_.kappa + hyper_.zeta - c.dot(chol_.solve(c));
    return {mean, std::sqrt(std::max(var, 0.0))};
}

PcGpHyper fit_gp_hyper(const Matrix& design_points, const Vector& values,
                       const GpFitOptions& opts, bool profile_mean,
                       double* mean_out, double* log_lik_out,
                       bool* converged_out) {
    const int d = static_cast<int>(design_points.cols());
    if (values.size() < d + 2)
        throw std::invalid_argument("fit_gp_hyper: p >= d+2 required");
    if (!values.allFinite())
        throw std::invalid_argument("fit_gp_hyper: non-finite training values");

    const int nparam = d + 2;  // log kappa, log phi_1..d, log zeta
    Vector lower(nparam), upper(nparam);
    lower[0] = opts.log_kappa_min;
    upper[0] = opts.log_kappa_max;
    for (int i = 0; i < d; ++i) {
        lower[1 + i] = opts.log_phi_min;
        upper[1 + i] = opts.log_phi_max;
    }
    lower[nparam - 1] = opts.log_zeta_min;
    upper[nparam - 1] = opts.log_zeta_max;

    auto unpack = [d](const Vector& z) {
        PcGpHyper h;
        h.kappa = std::exp(z[0]);
        h.phi = z.segment(1, d).array().exp();
        h.zeta = std::exp(z[d + 1]);
        return h;
    };
    auto objective = [&](const Vector& z) {
        const double ll = gp_log_lik(design_points, values, unpack(z),
                                     profile_mean, nullptr);
        return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
    };

    const double var =
        (values.array() - values.mean()).square().sum() /
        std::max<Eigen::Index>(values.size() - 1, 1);
    Vector start(nparam);
    start[0] = std::log(std::max(var, 1e-8));
    for (int i = 0; i < d; ++i) start[1 + i] = std::log(0.5);
    start[nparam - 1] = std::log(std::max(1e-6, 0.01 * var));
    start = start.cwiseMax(lower).cwiseMin(upper);

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);

    NelderMeadResult best;
    best.value = std::numeric_limits<double>::infinity();
    bool any_converged = false;
    for (int r = 0; r < opts.restarts; ++r) {
        Vector s = start;
        if (r > 0)
            for (int i = 0; i < nparam; ++i)
                s[i] = std::min(upper[i], std::max(lower[i], s[i] + 2.0 * jitter(rng)));
        NelderMeadResult res =
            nelder_mead(objective, s, lower, upper, 0.5, opts.max_evals);
        any_converged = any_converged || res.converged;
        if (res.value < best.value) best = res;
    }
    if (!std::isfinite(best.value))
        throw std::runtime_error("fit_gp_hyper: no positive-definite covariance found");

    PcGpHyper hyper = unpack(best.x);
    double mean = 0.0;
    const double ll = gp_log_lik(design_points, values, hyper, profile_mean, &mean);
    if (mean_out) *mean_out = mean;
    if (log_lik_out) *log_lik_out = ll;
    if (converged_out) *converged_out = any_converged;
    return hyper;
}

PcGpModel fit_pc_gp(const Vector& scores, const Matrix& design_points,
                    const GpFitOptions& opts) {
    double ll = 0.0;
    bool conv = false;
    PcGpHyper hyper =
        fit_gp_hyper(design_points, scores, opts, false, nullptr, &ll, &conv);
    PcGpModel model(design_points, scores, hyper);
    model.set_fit_metadata(ll, conv);
    return model;
}

}  // namespace bincal
