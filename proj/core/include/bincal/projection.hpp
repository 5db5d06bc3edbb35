#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bincal/calibration.hpp"
#include "bincal/gp.hpp"
#include "bincal/types.hpp"

namespace bincal {

/// Constant-mean GP emulator for a scalar simulator summary (such as a
/// volume change), used to turn a calibration chain into projections.
class ScalarGp {
public:
    ScalarGp() = default;
    ScalarGp(Matrix design_points, Vector response, PcGpHyper hyper,
             double mean_const);

    const PcGpHyper& hyper() const { return hyper_; }
    double mean_const() const { return mean_const_; }
    const Vector& response() const { return response_; }
    double log_lik() const { return log_lik_; }
    bool converged() const { return converged_; }

    std::pair<double, double> predict(const Vector& point) const;

    void set_fit_metadata(double log_lik, bool converged) {
        log_lik_ = log_lik;
        converged_ = converged;
    }

private:
    PcGpHyper hyper_;
    double mean_const_ = 0.0;
    Matrix design_points_;
    Vector response_;
    Eigen::LLT<Matrix> chol_;
    Vector alpha_;  // Sigma^{-1} (response - mean)
    double log_lik_ = 0.0;
    bool converged_ = true;
};

/// MLE with the constant mean profiled out by GLS at each hyperparameter
/// evaluation; same simplex-search contract as fit_pc_gp.
ScalarGp fit_scalar(const Matrix& design_points, const Vector& response,
                    const GpFitOptions& opts = {});

enum class ProjectionMode { MeanPlugIn, SamplePredictive };

/// One predictive value per chain sample: the kriging mean, or a draw from
/// the kriging normal in sample-predictive mode.
std::vector<double> project_chain(const Chain& chain, const ScalarGp& sgp,
                                  ProjectionMode mode,
                                  std::uint64_t seed = 0);

/// Baseline with theta drawn uniformly over the prior box, as if every
/// ensemble parameter setting were equally likely.
std::vector<double> uncalibrated_baseline(const PriorConfig& priors,
                                          const ScalarGp& sgp, int m,
                                          std::uint64_t seed,
                                          ProjectionMode mode =
                                              ProjectionMode::SamplePredictive);

struct PredictiveSummary {
    double p2_5 = 0.0;
    double p50 = 0.0;
    double p97_5 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

PredictiveSummary summarize_predictive(std::vector<double> samples);

void save_projection(const std::vector<double>& samples,
                     const PredictiveSummary& summary, ProjectionMode mode,
                     const std::string& samples_csv,
                     const std::string& summary_json);

}  // namespace bincal
