#include "bincal/calibration.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bincal/io.hpp"
#include "json.hpp"

using nlohmann::json;

namespace bincal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kMinSd = 1e-9;

double log1p_exp(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

bool in_bounds(const Vector& theta, const PriorConfig& priors) {
    for (Eigen::Index i = 0; i < theta.size(); ++i)
        if (theta[i] < priors.theta_bounds[i].first ||
            theta[i] > priors.theta_bounds[i].second)
            return false;
    return true;
}

double log_ig_density(double x, double a, double b) {
    return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

double log_uniform_prior(const PriorConfig& priors) {
    double lp = 0.0;
    for (const auto& [lo, hi] : priors.theta_bounds) lp -= std::log(hi - lo);
    return lp;
}

}  // namespace

PriorConfig PriorConfig::unit_cube(int d, double a_d, double b_d) {
    PriorConfig priors;
    priors.theta_bounds.assign(d, {0.0, 1.0});
    priors.a_d = a_d;
    priors.b_d = b_d;
    return priors;
}

std::vector<double> Chain::theta_series(int coord) const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.theta[coord]);
    return out;
}

std::vector<double> Chain::eta_series(int coord) const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.eta[coord]);
    return out;
}

double observation_log_lik(const BinaryField& observation, const Vector& lambda) {
    if (observation.values.size() != lambda.size())
        throw std::invalid_argument("observation_log_lik: length mismatch");
    double ll = 0.0;
    for (Eigen::Index j = 0; j < lambda.size(); ++j)
        ll += observation.values[j] * lambda[j] - log1p_exp(lambda[j]);
    return ll;
}

double log_posterior_with_pred(const CalibState& state,
                               const BinaryField& observation,
                               const LogisticPcaModel& lpca,
                               const EmulatorPrediction& pred,
                               const DiscrepancyBasis& basis,
                               const PriorConfig& priors, bool use_observation) {
    if (state.sigma2_d <= 0.0 || !in_bounds(state.theta, priors)) return kNegInf;

    double lp = log_uniform_prior(priors);
    lp += log_ig_density(state.sigma2_d, priors.a_d, priors.b_d);

    for (Eigen::Index k = 0; k < state.eta.size(); ++k) {
        const double sd = std::max(pred.sd[k], kMinSd);
        const double z = (state.eta[k] - pred.mean[k]) / sd;
        lp += -0.5 * z * z - std::log(sd) - 0.5 * kLog2Pi;
    }
    lp += -0.5 * state.v * state.v / state.sigma2_d -
          0.5 * std::log(state.sigma2_d) - 0.5 * kLog2Pi;

    if (use_observation) {
        const Vector lambda =
            lpca.mu + lpca.basis * state.eta + basis.k_d * state.v;
        lp += observation_log_lik(observation, lambda);
    }
    return lp;
}

double log_posterior(const CalibState& state, const BinaryField& observation,
                     const LogisticPcaModel& lpca, const PcEmulator& emulator,
                     const DiscrepancyBasis& basis, const PriorConfig& priors,
                     bool use_observation) {
    if (state.sigma2_d <= 0.0 || !in_bounds(state.theta, priors)) return kNegInf;
    const EmulatorPrediction pred = predict_scores(emulator, state.theta);
    return log_posterior_with_pred(state, observation, lpca, pred, basis, priors,
                                   use_observation);
}

namespace {

// Sampler loop body shared by mh_step and calibrate. Maintains the GP
// prediction cache for the current theta so only theta proposals pay for a
// kriging solve.
struct SweepContext {
    const BinaryField& observation;
    const LogisticPcaModel& lpca;
    const PcEmulator& emulator;
    const DiscrepancyBasis& basis;
    const PriorConfig& priors;
    bool use_observation;

    CalibState state;
    EmulatorPrediction pred;
    double log_post;

    SweepContext(const CalibState& s, const BinaryField& obs,
                 const LogisticPcaModel& l, const PcEmulator& em,
                 const DiscrepancyBasis& b, const PriorConfig& pr, bool use_obs)
        : observation(obs), lpca(l), emulator(em), basis(b), priors(pr),
          use_observation(use_obs), state(s) {
        pred = predict_scores(emulator, state.theta);
        log_post = log_posterior_with_pred(state, observation, lpca, pred,
                                           basis, priors, use_observation);
    }

    std::array<bool, 4> sweep(const ProposalScales& scales,
                              std::mt19937_64& rng) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::array<bool, 4> accepted{};

        // theta block
        {
            CalibState prop = state;
            for (Eigen::Index i = 0; i < prop.theta.size(); ++i)
                prop.theta[i] += scales.theta * gauss(rng);
            const double u = unif(rng);
            if (in_bounds(prop.theta, priors)) {
                const EmulatorPrediction prop_pred =
                    predict_scores(emulator, prop.theta);
                const double lp = log_posterior_with_pred(
                    prop, observation, lpca, prop_pred, basis, priors,
                    use_observation);
                if (std::log(u) < lp - log_post) {
                    state = std::move(prop);
                    pred = prop_pred;
                    log_post = lp;
                    accepted[0] = true;
                }
            }
        }
        // eta block
        {
            CalibState prop = state;
            for (Eigen::Index k = 0; k < prop.eta.size(); ++k)
                prop.eta[k] += scales.eta * gauss(rng);
            const double u = unif(rng);
            const double lp = log_posterior_with_pred(
                prop, observation, lpca, pred, basis, priors, use_observation);
            if (std::log(u) < lp - log_post) {
                state = std::move(prop);
                log_post = lp;
                accepted[1] = true;
            }
        }
        // v
        {
            CalibState prop = state;
            prop.v += scales.v * gauss(rng);
            const double u = unif(rng);
            const double lp = log_posterior_with_pred(
                prop, observation, lpca, pred, basis, priors, use_observation);
            if (std::log(u) < lp - log_post) {
                state = std::move(prop);
                log_post = lp;
                accepted[2] = true;
            }
        }
        // log sigma_d^2, with the change-of-variables Jacobian
        {
            CalibState prop = state;
            const double step = scales.log_sigma2 * gauss(rng);
            prop.sigma2_d = state.sigma2_d * std::exp(step);
            const double u = unif(rng);
            const double lp = log_posterior_with_pred(
                prop, observation, lpca, pred, basis, priors, use_observation);
            if (std::log(u) < lp - log_post + step) {
                state = std::move(prop);
                log_post = lp;
                accepted[3] = true;
            }
        }
        return accepted;
    }
};

}  // namespace

std::pair<CalibState, std::array<bool, 4>> mh_step(
    const CalibState& state, const BinaryField& observation,
    const LogisticPcaModel& lpca, const PcEmulator& emulator,
    const DiscrepancyBasis& basis, const PriorConfig& priors,
    const ProposalScales& scales, std::mt19937_64& rng, bool use_observation) {
    if (!(scales.theta >= 0.0 && scales.eta >= 0.0 && scales.v >= 0.0 &&
          scales.log_sigma2 >= 0.0))
        throw std::invalid_argument("mh_step: proposal scales must be >= 0");
    SweepContext ctx(state, observation, lpca, emulator, basis, priors,
                     use_observation);
    const auto accepted = ctx.sweep(scales, rng);
    return {ctx.state, accepted};
}

Chain calibrate(const BinaryField& observation, const LogisticPcaModel& lpca,
                const PcEmulator& emulator, const DiscrepancyBasis& basis,
                const PriorConfig& priors, const McmcConfig& config) {
    if (config.iterations <= config.burn_in)
        throw std::invalid_argument("calibrate: iterations must exceed burn_in");
    if (config.thin < 1) throw std::invalid_argument("calibrate: thin >= 1");
    const int d = static_cast<int>(priors.theta_bounds.size());

    CalibState init;
    init.theta.resize(d);
    for (int i = 0; i < d; ++i)
        init.theta[i] =
            0.5 * (priors.theta_bounds[i].first + priors.theta_bounds[i].second);
    const EmulatorPrediction init_pred = predict_scores(emulator, init.theta);
    init.eta = init_pred.mean;
    init.v = 0.0;
    init.sigma2_d = priors.b_d / (priors.a_d + 1.0);  // prior mode

    std::mt19937_64 rng(config.seed);
    SweepContext ctx(init, observation, lpca, emulator, basis, priors,
                     config.use_observation);

    ProposalScales scales = config.initial_scales;
    const std::array<double, 4> targets = {d > 1 ? 0.25 : 0.44,
                                           emulator.j_y() > 1 ? 0.25 : 0.44,
                                           0.44, 0.44};
    constexpr int kAdaptBatch = 100;
    std::array<int, 4> batch_accepts{};
    std::array<long, 4> total_accepts{};
    int adapt_round = 0;

    Chain chain;
    chain.d = d;
    chain.j_y = emulator.j_y();
    chain.config = config;

    for (int it = 0; it < config.iterations; ++it) {
        const auto accepted = ctx.sweep(scales, rng);
        for (int b = 0; b < 4; ++b) {
            batch_accepts[b] += accepted[b];
            if (it >= config.burn_in) total_accepts[b] += accepted[b];
        }

        const bool in_burn_in = it < config.burn_in;
        if (config.adapt && in_burn_in && (it + 1) % kAdaptBatch == 0) {
            ++adapt_round;
            const double gain = 1.0 / std::sqrt(static_cast<double>(adapt_round));
            auto tune = [&](double& scale, int block) {
                const double rate =
                    static_cast<double>(batch_accepts[block]) / kAdaptBatch;
                scale *= std::exp(gain * (rate - targets[block]));
            };
            tune(scales.theta, 0);
            tune(scales.eta, 1);
            tune(scales.v, 2);
            tune(scales.log_sigma2, 3);
            batch_accepts = {};
        }

        if (!in_burn_in && (it - config.burn_in) % config.thin == 0) {
            chain.samples.push_back(ctx.state);
            chain.log_posts.push_back(ctx.log_post);
        }
    }

    const double kept = config.iterations - config.burn_in;
    for (int b = 0; b < 4; ++b)
        chain.acceptance[b] = static_cast<double>(total_accepts[b]) / kept;
    chain.adapted_scales = scales;
    return chain;
}

McseResult mcse_batch_means(const std::vector<double>& series) {
    const size_t t = series.size();
    if (t < 100)
        throw std::invalid_argument("mcse_batch_means: series length >= 100 required");
    const size_t b = static_cast<size_t>(std::floor(std::sqrt(double(t))));
    const size_t a = t / b;
    const size_t used = a * b;

    double grand = 0.0;
    for (size_t i = 0; i < used; ++i) grand += series[i];
    grand /= used;

    double ssq = 0.0;
    for (size_t k = 0; k < a; ++k) {
        double bm = 0.0;
        for (size_t i = k * b; i < (k + 1) * b; ++i) bm += series[i];
        bm /= b;
        ssq += (bm - grand) * (bm - grand);
    }
    const double mcse = std::sqrt(ssq / (static_cast<double>(a) * (a - 1)));

    double var = 0.0;
    for (size_t i = 0; i < used; ++i)
        var += (series[i] - grand) * (series[i] - grand);
    var /= (used - 1);

    McseResult res;
    res.mean = grand;
    res.mcse = mcse;
    res.ess = mcse > 0.0 ? var / (mcse * mcse) : static_cast<double>(used);
    return res;
}

DensityGrid pairwise_density(const Chain& chain, int coord_a, int coord_b,
                             const PriorConfig& priors, int grid_points) {
    if (chain.samples.empty())
        throw std::invalid_argument("pairwise_density: empty chain");
    if (grid_points < 16)
        throw std::invalid_argument("pairwise_density: grid >= 16 per axis");
    const auto [ax_lo, ax_hi] = priors.theta_bounds[coord_a];
    const auto [ay_lo, ay_hi] = priors.theta_bounds[coord_b];
    const size_t t = chain.samples.size();

    auto stddev = [&](int coord) {
        double m = 0.0;
        for (const auto& s : chain.samples) m += s.theta[coord];
        m /= t;
        double v = 0.0;
        for (const auto& s : chain.samples)
            v += (s.theta[coord] - m) * (s.theta[coord] - m);
        return std::sqrt(v / std::max<size_t>(t - 1, 1));
    };
    // Silverman-style 2-D bandwidth; falls back to one cell width for
    // degenerate chains.
    const double factor = std::pow(static_cast<double>(t), -1.0 / 6.0);
    double hx = stddev(coord_a) * factor;
    double hy = stddev(coord_b) * factor;
    const double dx = (ax_hi - ax_lo) / (grid_points - 1);
    const double dy = (ay_hi - ay_lo) / (grid_points - 1);
    if (hx <= 0.0) hx = dx;
    if (hy <= 0.0) hy = dy;

    DensityGrid grid;
    grid.x = Vector::LinSpaced(grid_points, ax_lo, ax_hi);
    grid.y = Vector::LinSpaced(grid_points, ay_lo, ay_hi);
    grid.density = Matrix::Zero(grid_points, grid_points);

    for (const auto& s : chain.samples) {
        const double px = s.theta[coord_a];
        const double py = s.theta[coord_b];
        for (int iy = 0; iy < grid_points; ++iy) {
            const double zy = (grid.y[iy] - py) / hy;
            if (std::abs(zy) > 6.0) continue;
            const double ky = std::exp(-0.5 * zy * zy);
            for (int ix = 0; ix < grid_points; ++ix) {
                const double zx = (grid.x[ix] - px) / hx;
                if (std::abs(zx) > 6.0) continue;
                grid.density(iy, ix) += ky * std::exp(-0.5 * zx * zx);
            }
        }
    }

    // Normalize to integrate to one over the box under the trapezoid rule.
    double integral = 0.0;
    for (int iy = 0; iy < grid_points; ++iy)
        for (int ix = 0; ix < grid_points; ++ix) {
            double w = 1.0;
            if (ix == 0 || ix == grid_points - 1) w *= 0.5;
            if (iy == 0 || iy == grid_points - 1) w *= 0.5;
            integral += w * grid.density(iy, ix);
        }
    integral *= dx * dy;
    if (integral > 0.0) grid.density /= integral;
    return grid;
}

void save_density_grid(const DensityGrid& grid, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write file: " + csv_path);
    out << "x,y,density\n";
    for (int iy = 0; iy < grid.y.size(); ++iy)
        for (int ix = 0; ix < grid.x.size(); ++ix)
            out << format_double(grid.x[ix]) << "," << format_double(grid.y[iy])
                << "," << format_double(grid.density(iy, ix)) << "\n";
}

void save_chain(const Chain& chain, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write file: " + csv_path);
    out << "iteration";
    for (int i = 0; i < chain.d; ++i) out << ",theta_" << (i + 1);
    for (int k = 0; k < chain.j_y; ++k) out << ",eta_" << (k + 1);
    out << ",v,sigma2_d,log_post\n";
    for (size_t s = 0; s < chain.samples.size(); ++s) {
        const auto& st = chain.samples[s];
        out << chain.config.burn_in + static_cast<long>(s) * chain.config.thin;
        for (int i = 0; i < chain.d; ++i) out << "," << format_double(st.theta[i]);
        for (int k = 0; k < chain.j_y; ++k) out << "," << format_double(st.eta[k]);
        out << "," << format_double(st.v) << "," << format_double(st.sigma2_d)
            << "," << format_double(chain.log_posts[s]) << "\n";
    }
}

Chain load_chain(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open file: " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty chain file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) header.push_back(f);
    }
    int d = 0, j_y = 0;
    for (const auto& h : header) {
        if (h.rfind("theta_", 0) == 0) ++d;
        if (h.rfind("eta_", 0) == 0) ++j_y;
    }
    if (d == 0 || header.size() != static_cast<size_t>(1 + d + j_y + 3))
        throw std::runtime_error("unexpected chain header in " + csv_path);

    Chain chain;
    chain.d = d;
    chain.j_y = j_y;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f;
        std::vector<double> vals;
        while (std::getline(ss, f, ',')) vals.push_back(std::stod(f));
        CalibState st;
        st.theta = Eigen::Map<const Vector>(vals.data() + 1, d);
        st.eta = Eigen::Map<const Vector>(vals.data() + 1 + d, j_y);
        st.v = vals[1 + d + j_y];
        st.sigma2_d = vals[2 + d + j_y];
        chain.samples.push_back(std::move(st));
        chain.log_posts.push_back(vals[3 + d + j_y]);
    }
    return chain;
}

void save_diagnostics(const Chain& chain, const std::string& json_path) {
    json j;
    j["acceptance"] = {{"theta", chain.acceptance[0]},
                       {"eta", chain.acceptance[1]},
                       {"v", chain.acceptance[2]},
                       {"sigma2_d", chain.acceptance[3]}};
    j["samples"] = chain.samples.size();
    j["config"] = {{"iterations", chain.config.iterations},
                   {"burn_in", chain.config.burn_in},
                   {"thin", chain.config.thin},
                   {"seed", chain.config.seed},
                   {"use_observation", chain.config.use_observation}};
    j["adapted_scales"] = {{"theta", chain.adapted_scales.theta},
                           {"eta", chain.adapted_scales.eta},
                           {"v", chain.adapted_scales.v},
                           {"log_sigma2", chain.adapted_scales.log_sigma2}};

    auto summarize = [&](const std::vector<double>& series) {
        const McseResult r = mcse_batch_means(series);
        return json{{"mean", r.mean}, {"mcse", r.mcse}, {"ess", r.ess}};
    };
    json coords;
    if (chain.samples.size() >= 100) {
        for (int i = 0; i < chain.d; ++i)
            coords["theta_" + std::to_string(i + 1)] =
                summarize(chain.theta_series(i));
        for (int k = 0; k < chain.j_y; ++k)
            coords["eta_" + std::to_string(k + 1)] = summarize(chain.eta_series(k));
        std::vector<double> v_series, s_series;
        for (const auto& s : chain.samples) {
            v_series.push_back(s.v);
            s_series.push_back(s.sigma2_d);
        }
        coords["v"] = summarize(v_series);
        coords["sigma2_d"] = summarize(s_series);
    }
    j["coordinates"] = coords;

    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot write file: " + json_path);
    out << j.dump(2) << "\n";
}

}  // namespace bincal
