#include "bincal/lpca.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "bincal/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bincal {

namespace {

// Separable binary data drives logits to +/- infinity; clamping the
// working logits keeps the SVD well-conditioned without affecting
// dichotomized output.
constexpr double kLogitClamp = 30.0;

Matrix reconstruct_gamma(const Vector& mu, const Matrix& basis,
                         const Matrix& scores) {
    return Matrix::Ones(scores.rows(), 1) * mu.transpose() +
           scores * basis.transpose();
}

// Deterministic column signs: flip each component so the largest-magnitude
// basis entry is positive. Invariant under column permutations of y.
void fix_signs(Matrix& scores, Matrix& basis) {
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
        Eigen::Index idx;
        basis.col(j).cwiseAbs().maxCoeff(&idx);
        if (basis(idx, j) < 0.0) {
            basis.col(j) = -basis.col(j);
            scores.col(j) = -scores.col(j);
        }
    }
}

}  // namespace

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double neg_log_g(double x) {
    // softplus(-x)
    return x >= 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double neg_log_lik(const Eigen::MatrixXi& y, const Vector& mu,
                   const Matrix& basis, const Matrix& scores) {
    const Eigen::Index p = y.rows(), n = y.cols();
    if (mu.size() != n || basis.rows() != n || scores.rows() != p ||
        basis.cols() != scores.cols())
        throw std::invalid_argument("neg_log_lik: dimension mismatch");
    const Matrix gamma = reconstruct_gamma(mu, basis, scores);
    double nll = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            nll += neg_log_g((2 * y(i, j) - 1) * gamma(i, j));
    return nll;
}

double neg_log_lik(const EnsembleMatrix& y, const LogisticPcaModel& model) {
    return neg_log_lik(y.values, model.mu, model.basis, model.scores);
}

MmState mm_init(const Eigen::MatrixXi& y, int j_y) {
    const Eigen::Index p = y.rows(), n = y.cols();
    if (j_y < 1 || j_y > std::min(p, n))
        throw std::invalid_argument("mm_init: 1 <= j_y <= min(p,n) required");

    const Matrix ystar = (2 * y.array() - 1).cast<double>();
    MmState state;
    state.mu = ystar.colwise().mean().transpose();
    const Matrix centered = ystar - Matrix::Ones(p, 1) * state.mu.transpose();

    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    state.scores = svd.matrixU().leftCols(j_y);
    state.basis = svd.matrixV().leftCols(j_y) *
                  (4.0 * svd.singularValues().head(j_y)).asDiagonal();
    fix_signs(state.scores, state.basis);
    state.iteration = 0;
    return state;
}

MmState mm_step(const Eigen::MatrixXi& y, const MmState& state) {
    const Eigen::Index p = y.rows(), n = y.cols();
    if (state.mu.size() != n || state.basis.rows() != n || state.scores.rows() != p)
        throw std::invalid_argument("mm_step: state inconsistent with ensemble");

    const Matrix ystar = (2 * y.array() - 1).cast<double>();
    Matrix gamma = reconstruct_gamma(state.mu, state.basis, state.scores)
                       .cwiseMax(-kLogitClamp)
                       .cwiseMin(kLogitClamp);

    // x_ij = gamma_ij + 4 y*_ij (1 - g(y*_ij gamma_ij))
    Matrix working(p, n);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            working(i, j) = gamma(i, j) + 4.0 * ystar(i, j) *
                            (1.0 - sigmoid(ystar(i, j) * gamma(i, j)));

    MmState next;
    next.working = working;

    next.mu = (working - state.scores * state.basis.transpose())
                  .colwise().mean().transpose();

    const Matrix centered = working - Matrix::Ones(p, 1) * next.mu.transpose();
    const Matrix gram = state.basis.transpose() * state.basis;
    const Matrix wstar =
        gram.ldlt().solve(state.basis.transpose() * centered.transpose())
            .transpose();

    Eigen::BDCSVD<Matrix> svd(wstar, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-12 * sv(0)) {
        // Degenerate target (e.g. a pure-mean ensemble drives the basis to
        // zero): keep the previous orthonormal scores. The mu and basis
        // updates below still minimize the majorizer, so descent holds.
        next.scores = state.scores;
    } else {
        next.scores = svd.matrixU() * svd.matrixV().transpose();
    }
    next.basis = centered.transpose() * next.scores;
    next.iteration = state.iteration + 1;
    return next;
}

namespace {

LogisticPcaModel run_mm(const Eigen::MatrixXi& y, MmState state,
                        const LogisticPcaOptions& opts) {
    LogisticPcaModel model;
    model.j_y = static_cast<int>(state.basis.cols());
    model.options = opts;

    double nll = neg_log_lik(y, state.mu, state.basis, state.scores);
    model.deviance_trace.push_back(nll);
    double rel = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_iter; ++it) {
        state = mm_step(y, state);
        const double next = neg_log_lik(y, state.mu, state.basis, state.scores);
        model.deviance_trace.push_back(next);
        rel = std::abs(nll - next) / std::max(std::abs(nll), 1e-300);
        nll = next;
        if (rel < opts.rel_tol) break;
    }
    model.converged = rel < opts.rel_tol;
    model.final_rel_change = rel;
    model.mu = std::move(state.mu);
    model.basis = std::move(state.basis);
    model.scores = std::move(state.scores);
    return model;
}

Matrix orthonormalize(const Matrix& m) {
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
    return q;
}

}  // namespace

LogisticPcaModel fit_lpca(const Eigen::MatrixXi& y, int j_y,
                          const LogisticPcaOptions& opts) {
    if (opts.max_iter < 1) throw std::invalid_argument("fit_lpca: max_iter >= 1");
    if (opts.restarts < 1) throw std::invalid_argument("fit_lpca: restarts >= 1");

    const MmState init = mm_init(y, j_y);
    LogisticPcaModel best = run_mm(y, init, opts);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int r = 1; r < opts.restarts; ++r) {
        MmState start = init;
        Matrix noise(start.scores.rows(), start.scores.cols());
        for (Eigen::Index i = 0; i < noise.rows(); ++i)
            for (Eigen::Index j = 0; j < noise.cols(); ++j)
                noise(i, j) = gauss(rng);
        start.scores = orthonormalize(start.scores + 0.1 * noise);
        const Matrix ystar = (2 * y.array() - 1).cast<double>();
        const Matrix centered =
            ystar - Matrix::Ones(y.rows(), 1) * start.mu.transpose();
        start.basis = 4.0 * centered.transpose() * start.scores;

        LogisticPcaModel cand = run_mm(y, start, opts);
        if (cand.deviance_trace.back() < best.deviance_trace.back())
            best = std::move(cand);
    }
    return best;
}

LogisticPcaModel fit_lpca(const EnsembleMatrix& y, int j_y,
                          const LogisticPcaOptions& opts) {
    return fit_lpca(y.values, j_y, opts);
}

Vector reconstruct(const LogisticPcaModel& model, int row) {
    if (row < 0 || row >= model.scores.rows())
        throw std::out_of_range("reconstruct: row index out of range");
    return reconstruct(model, model.scores.row(row).transpose());
}

Vector reconstruct(const LogisticPcaModel& model, const Vector& scores) {
    if (scores.size() != model.j_y)
        throw std::invalid_argument("reconstruct: scores length != j_y");
    return model.mu + model.basis * scores;
}

void save_lpca(const LogisticPcaModel& model, const std::string& json_path) {
    const fs::path base(json_path);
    const std::string stem = (base.parent_path() / base.stem()).string();

    json j;
    j["type"] = "bincal-lpca";
    j["p"] = model.scores.rows();
    j["n"] = model.mu.size();
    j["j_y"] = model.j_y;
    j["converged"] = model.converged;
    j["final_rel_change"] = model.final_rel_change;
    j["deviance_trace"] = model.deviance_trace;
    j["options"] = {{"max_iter", model.options.max_iter},
                    {"rel_tol", model.options.rel_tol},
                    {"restarts", model.options.restarts},
                    {"seed", model.options.seed}};
    j["blocks"] = {{"mu", base.stem().string() + ".mu.csv"},
                   {"basis", base.stem().string() + ".basis.csv"},
                   {"scores", base.stem().string() + ".scores.csv"}};
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot write file: " + json_path);
    out << j.dump(2) << "\n";

    save_vector_csv(model.mu, stem + ".mu.csv", "mu");
    save_matrix_csv(model.basis, stem + ".basis.csv", "k");
    save_matrix_csv(model.scores, stem + ".scores.csv", "w");
}

LogisticPcaModel load_lpca(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error("cannot open file: " + json_path);
    json j;
    in >> j;
    if (j.value("type", "") != "bincal-lpca")
        throw std::runtime_error("not an lpca artifact: " + json_path);

    const fs::path dir = fs::path(json_path).parent_path();
    LogisticPcaModel model;
    model.j_y = j.at("j_y").get<int>();
    model.converged = j.at("converged").get<bool>();
    model.final_rel_change = j.at("final_rel_change").get<double>();
    model.deviance_trace = j.at("deviance_trace").get<std::vector<double>>();
    const auto& o = j.at("options");
    model.options.max_iter = o.at("max_iter").get<int>();
    model.options.rel_tol = o.at("rel_tol").get<double>();
    model.options.restarts = o.at("restarts").get<int>();
    model.options.seed = o.at("seed").get<std::uint64_t>();
    model.mu = load_vector_csv((dir / j.at("blocks").at("mu").get<std::string>()).string());
    model.basis = load_matrix_csv((dir / j.at("blocks").at("basis").get<std::string>()).string());
    model.scores = load_matrix_csv((dir / j.at("blocks").at("scores").get<std::string>()).string());
    return model;
}

}  // namespace bincal
