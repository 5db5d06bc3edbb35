#include "bincal/emulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "bincal/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bincal {

namespace {

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                    body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

PcEmulator fit_emulator(const LogisticPcaModel& lpca, const Matrix& design_points,
                        const GpFitOptions& opts, int threads) {
    if (design_points.rows() != lpca.scores.rows())
        throw std::invalid_argument("fit_emulator: design rows != score rows");
    PcEmulator emulator;
    emulator.design_points = design_points;
    emulator.gps.resize(lpca.j_y);
    parallel_for(lpca.j_y, threads, [&](int j) {
        GpFitOptions local = opts;
        local.seed = opts.seed + static_cast<std::uint64_t>(j);
        emulator.gps[j] = fit_pc_gp(lpca.scores.col(j), design_points, local);
    });
    return emulator;
}

EmulatorPrediction predict_scores(const PcEmulator& emulator, const Vector& point) {
    EmulatorPrediction pred;
    pred.mean.resize(emulator.j_y());
    pred.sd.resize(emulator.j_y());
    for (int j = 0; j < emulator.j_y(); ++j) {
        auto [m, s] = emulator.gps[j].predict(point);
        pred.mean[j] = m;
        pred.sd[j] = s;
    }
    return pred;
}

Vector emulate_probability_field(const LogisticPcaModel& lpca,
                                 const PcEmulator& emulator, const Vector& point) {
    if (emulator.j_y() != lpca.j_y)
        throw std::invalid_argument("emulate_probability_field: component count mismatch");
    const EmulatorPrediction pred = predict_scores(emulator, point);
    const Vector gamma = lpca.mu + lpca.basis * pred.mean;
    Vector probs(gamma.size());
    for (Eigen::Index j = 0; j < gamma.size(); ++j) probs[j] = sigmoid(gamma[j]);
    return probs;
}

BinaryField dichotomize(const Vector& probs, const GridSpec& grid,
                        double threshold) {
    if (probs.size() != grid.n_cells())
        throw std::invalid_argument("dichotomize: probs length != grid cells");
    Eigen::VectorXi values(probs.size());
    for (Eigen::Index j = 0; j < probs.size(); ++j)
        values[j] = probs[j] >= threshold ? 1 : 0;
    return BinaryField(grid, std::move(values));
}

CvReport cross_validate(const EnsembleMatrix& ensemble, int j_y,
                        double fold_fraction, std::uint64_t seed,
                        const LogisticPcaOptions& lpca_opts,
                        const GpFitOptions& gp_opts, int threads) {
    if (!(fold_fraction > 0.0 && fold_fraction <= 0.5))
        throw std::invalid_argument("cross_validate: fold_fraction must be in (0, 0.5]");
    const int p = ensemble.p();
    const int n = ensemble.n();
    const int d = ensemble.design.d();
    const int fold_size = static_cast<int>(std::ceil(fold_fraction * p));
    const int train_size = p - fold_size;
    if (train_size < std::max(2, d + 2) || train_size < j_y)
        throw std::invalid_argument("cross_validate: fold too small to fit");

    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    CvReport report;
    report.j_y = j_y;
    report.fold_fraction = fold_fraction;
    report.per_run_rate.assign(p, 0.0);
    report.per_cell_rate = Vector::Zero(n);

    long total_mismatches = 0;
    for (int start = 0; start < p; start += fold_size) {
        const int end = std::min(start + fold_size, p);
        std::vector<bool> held(p, false);
        for (int k = start; k < end; ++k) held[order[k]] = true;

        const int train_p = p - (end - start);
        Eigen::MatrixXi train_y(train_p, n);
        Matrix train_pts(train_p, d);
        int row = 0;
        for (int i = 0; i < p; ++i) {
            if (held[i]) continue;
            train_y.row(row) = ensemble.values.row(i);
            train_pts.row(row) = ensemble.design.points.row(i);
            ++row;
        }

        const LogisticPcaModel lpca = fit_lpca(train_y, j_y, lpca_opts);
        const PcEmulator emulator = fit_emulator(lpca, train_pts, gp_opts, threads);

        for (int k = start; k < end; ++k) {
            const int i = order[k];
            const Vector probs = emulate_probability_field(
                lpca, emulator, ensemble.design.points.row(i).transpose());
            int mismatches = 0;
            for (int j = 0; j < n; ++j) {
                const int pred = probs[j] >= 0.5 ? 1 : 0;
                if (pred != ensemble.values(i, j)) {
                    ++mismatches;
                    report.per_cell_rate[j] += 1.0;
                }
            }
            report.per_run_rate[i] = static_cast<double>(mismatches) / n;
            total_mismatches += mismatches;
        }
    }
    report.per_cell_rate /= static_cast<double>(p);
    report.overall_rate =
        static_cast<double>(total_mismatches) / (static_cast<double>(p) * n);
    return report;
}

void save_cv_report(const CvReport& report, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write file: " + csv_path);
    out << "# j_y=" << report.j_y << " fold_fraction="
        << format_double(report.fold_fraction)
        << " overall_rate=" << format_double(report.overall_rate) << "\n";
    out << "run,misclassification_rate\n";
    for (size_t i = 0; i < report.per_run_rate.size(); ++i)
        out << i << "," << format_double(report.per_run_rate[i]) << "\n";
}

void save_emulator(const PcEmulator& emulator, const std::string& json_path,
                   const std::string& lpca_artifact) {
    json j;
    j["type"] = "bincal-emulator";
    j["lpca_artifact"] = lpca_artifact;
    j["p"] = emulator.design_points.rows();
    j["d"] = emulator.design_points.cols();
    j["j_y"] = emulator.j_y();

    json pts = json::array();
    for (Eigen::Index i = 0; i < emulator.design_points.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < emulator.design_points.cols(); ++k)
            row.push_back(emulator.design_points(i, k));
        pts.push_back(row);
    }
    j["design_points"] = pts;

    json comps = json::array();
    for (const auto& gp : emulator.gps) {
        json c;
        c["kappa"] = gp.hyper().kappa;
        c["phi"] = std::vector<double>(gp.hyper().phi.data(),
                                       gp.hyper().phi.data() + gp.hyper().phi.size());
        c["zeta"] = gp.hyper().zeta;
        c["log_lik"] = gp.log_lik();
        c["converged"] = gp.converged();
        c["scores"] = std::vector<double>(gp.scores().data(),
                                          gp.scores().data() + gp.scores().size());
        comps.push_back(c);
    }
    j["components"] = comps;

    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot write file: " + json_path);
    out << j.dump(2) << "\n";
}

PcEmulator load_emulator(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error("cannot open file: " + json_path);
    json j;
    in >> j;
    if (j.value("type", "") != "bincal-emulator")
        throw std::runtime_error("not an emulator artifact: " + json_path);

    const int p = j.at("p").get<int>();
    const int d = j.at("d").get<int>();
    PcEmulator emulator;
    emulator.design_points.resize(p, d);
    for (int i = 0; i < p; ++i)
        for (int k = 0; k < d; ++k)
            emulator.design_points(i, k) = j.at("design_points")[i][k].get<double>();

    for (const auto& c : j.at("components")) {
        PcGpHyper hyper;
        hyper.kappa = c.at("kappa").get<double>();
        const auto phi = c.at("phi").get<std::vector<double>>();
        hyper.phi = Eigen::Map<const Vector>(phi.data(), phi.size());
        hyper.zeta = c.at("zeta").get<double>();
        const auto scores = c.at("scores").get<std::vector<double>>();
        PcGpModel gp(emulator.design_points,
                     Eigen::Map<const Vector>(scores.data(), scores.size()), hyper);
        gp.set_fit_metadata(c.at("log_lik").get<double>(),
                            c.at("converged").get<bool>());
        emulator.gps.push_back(std::move(gp));
    }
    return emulator;
}

}  // namespace bincal
