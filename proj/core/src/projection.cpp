#include "bincal/projection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "bincal/io.hpp"
#include "json.hpp"

using nlohmann::json;

namespace bincal {

ScalarGp::ScalarGp(Matrix design_points, Vector response, PcGpHyper hyper,
                   double mean_const)
    : hyper_(std::move(hyper)),
      mean_const_(mean_const),
      design_points_(std::move(design_points)),
      response_(std::move(response)) {
    if (design_points_.rows() != response_.size())
        throw std::invalid_argument("ScalarGp: design/response size mismatch");
    if (!cholesky_with_jitter(build_cov_matrix(design_points_, hyper_), chol_))
        throw std::runtime_error("ScalarGp: covariance not positive definite");
    alpha_ = chol_.solve((response_.array() - mean_const_).matrix());
}

std::pair<double, double> ScalarGp::predict(const Vector& point) const {
    if (point.size() != design_points_.cols())
        throw std::invalid_argument("ScalarGp::predict: point length mismatch");
    const Eigen::Index p = response_.size();
    Vector c(p);
    for (Eigen::Index i = 0; i < p; ++i)
        c[i] = cov_exp(point, design_points_.row(i).transpose(), hyper_);
    const double mean = mean_const_ + c.dot(alpha_);
    const double var = hyper_.kappa + hyper_.zeta - c.dot(chol_.solve(c));
    return {mean, std::sqrt(std::max(var, 0.0))};
}

ScalarGp fit_scalar(const Matrix& design_points, const Vector& response,
                    const GpFitOptions& opts) {
    double mean = 0.0, ll = 0.0;
    bool conv = false;
    PcGpHyper hyper =
        fit_gp_hyper(design_points, response, opts, true, &mean, &ll, &conv);
    ScalarGp sgp(design_points, response, hyper, mean);
    sgp.set_fit_metadata(ll, conv);
    return sgp;
}

std::vector<double> project_chain(const Chain& chain, const ScalarGp& sgp,
                                  ProjectionMode mode, std::uint64_t seed) {
    if (chain.samples.empty())
        throw std::invalid_argument("project_chain: empty chain");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> out;
    out.reserve(chain.samples.size());
    for (const auto& s : chain.samples) {
        const auto [mean, sd] = sgp.predict(s.theta);
        out.push_back(mode == ProjectionMode::MeanPlugIn ? mean
                                                         : mean + sd * gauss(rng));
    }
    return out;
}

std::vector<double> uncalibrated_baseline(const PriorConfig& priors,
                                          const ScalarGp& sgp, int m,
                                          std::uint64_t seed,
                                          ProjectionMode mode) {
    if (m < 1) throw std::invalid_argument("uncalibrated_baseline: m >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int d = static_cast<int>(priors.theta_bounds.size());
    std::vector<double> out;
    out.reserve(m);
    Vector theta(d);
    for (int k = 0; k < m; ++k) {
        for (int i = 0; i < d; ++i) {
            const auto& [lo, hi] = priors.theta_bounds[i];
            theta[i] = lo + unif(rng) * (hi - lo);
        }
        const auto [mean, sd] = sgp.predict(theta);
        out.push_back(mode == ProjectionMode::MeanPlugIn ? mean
                                                         : mean + sd * gauss(rng));
    }
    return out;
}

PredictiveSummary summarize_predictive(std::vector<double> samples) {
    if (samples.empty())
        throw std::invalid_argument("summarize_predictive: empty samples");
    std::sort(samples.begin(), samples.end());
    auto quantile = [&](double q) {
        const double pos = q * (samples.size() - 1);
        const size_t lo = static_cast<size_t>(pos);
        const size_t hi = std::min(lo + 1, samples.size() - 1);
        const double frac = pos - lo;
        return samples[lo] * (1.0 - frac) + samples[hi] * frac;
    };
    PredictiveSummary s;
    s.p2_5 = quantile(0.025);
    s.p50 = quantile(0.5);
    s.p97_5 = quantile(0.975);
    s.min = samples.front();
    s.max = samples.back();
    return s;
}

void save_projection(const std::vector<double>& samples,
                     const PredictiveSummary& summary, ProjectionMode mode,
                     const std::string& samples_csv,
                     const std::string& summary_json) {
    std::ofstream out(samples_csv);
    if (!out) throw std::runtime_error("cannot write file: " + samples_csv);
    out << "projection\n";
    for (double v : samples) out << format_double(v) << "\n";

    json j;
    j["mode"] = mode == ProjectionMode::MeanPlugIn ? "mean-plug-in"
                                                   : "sample-predictive";
    j["samples"] = samples.size();
    j["p2_5"] = summary.p2_5;
    j["p50"] = summary.p50;
    j["p97_5"] = summary.p97_5;
    j["min"] = summary.min;
    j["max"] = summary.max;
    std::ofstream js(summary_json);
    if (!js) throw std::runtime_error("cannot write file: " + summary_json);
    js << j.dump(2) << "\n";
}

}  // namespace bincal
