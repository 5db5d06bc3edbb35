#include "bincal/types.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace bincal {

GridSpec::GridSpec(int rows, int cols, std::pair<double, double> org,
                   std::pair<double, double> cell)
    : n_rows(rows), n_cols(cols), origin(org), cell_size(cell) {
    if (n_rows <= 0 || n_cols <= 0)
        throw std::invalid_argument("GridSpec: grid dimensions must be positive");
    if (cell_size.first <= 0.0 || cell_size.second <= 0.0)
        throw std::invalid_argument("GridSpec: cell sizes must be positive");
}

std::pair<double, double> GridSpec::coordinate(int flat) const {
    if (flat < 0 || flat >= n_cells())
        throw std::out_of_range("GridSpec: flat index out of range");
    const int row = flat / n_cols;
    const int col = flat % n_cols;
    return {origin.first + col * cell_size.first,
            origin.second + row * cell_size.second};
}

BinaryField::BinaryField(GridSpec g, Eigen::VectorXi vals)
    : grid(std::move(g)), values(std::move(vals)) {
    if (values.size() != grid.n_cells())
        throw std::invalid_argument("BinaryField: value count does not match grid");
    for (Eigen::Index j = 0; j < values.size(); ++j)
        if (values[j] != 0 && values[j] != 1)
            throw std::invalid_argument("BinaryField: non-binary entry at index " +
                                        std::to_string(j));
}

DesignMatrix::DesignMatrix(Matrix pts, std::vector<std::string> nm,
                           std::vector<std::pair<double, double>> rng,
                           std::vector<bool> logs)
    : points(std::move(pts)),
      names(std::move(nm)),
      ranges(std::move(rng)),
      log_scaled(std::move(logs)) {
    const int pp = p();
    const int dd = d();
    if (pp < 2) throw std::invalid_argument("DesignMatrix: p >= 2 required");
    if (dd < 1) throw std::invalid_argument("DesignMatrix: d >= 1 required");
    if (static_cast<int>(names.size()) != dd ||
        static_cast<int>(ranges.size()) != dd ||
        static_cast<int>(log_scaled.size()) != dd)
        throw std::invalid_argument("DesignMatrix: metadata length mismatch");
    std::set<std::string> seen;
    for (const auto& name : names)
        if (!seen.insert(name).second)
            throw std::invalid_argument("DesignMatrix: duplicate parameter name '" +
                                        name + "'");
    for (const auto& [low, high] : ranges)
        if (!(low < high))
            throw std::invalid_argument("DesignMatrix: range low must be < high");
    for (int i = 0; i < pp; ++i)
        for (int j = 0; j < dd; ++j)
            if (!(points(i, j) >= 0.0 && points(i, j) <= 1.0))
                throw std::invalid_argument(
                    "DesignMatrix: value outside [0,1] at (" + std::to_string(i) +
                    "," + std::to_string(j) + ")");
}

EnsembleMatrix::EnsembleMatrix(DesignMatrix dsn, GridSpec g, Eigen::MatrixXi vals)
    : design(std::move(dsn)), grid(std::move(g)), values(std::move(vals)) {
    if (values.rows() != design.p())
        throw std::invalid_argument("EnsembleMatrix: row count does not match design");
    if (values.cols() != grid.n_cells())
        throw std::invalid_argument("EnsembleMatrix: column count does not match grid");
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            if (values(i, j) != 0 && values(i, j) != 1)
                throw std::invalid_argument("EnsembleMatrix: non-binary entry at (" +
                                            std::to_string(i) + "," +
                                            std::to_string(j) + ")");
}

Vector to_native(const DesignMatrix& design, const Vector& point) {
    if (point.size() != design.d())
        throw std::invalid_argument("to_native: point length does not match design d");
    Vector out(point.size());
    for (Eigen::Index i = 0; i < point.size(); ++i) {
        const auto [low, high] = design.ranges[i];
        const double x = point[i];
        if (design.log_scaled[i]) {
            const double ll = std::log10(low);
            const double lh = std::log10(high);
            // Map endpoints exactly so x in {0,1} returns low/high bit-exactly.
            out[i] = (x == 0.0) ? low
                   : (x == 1.0) ? high
                                : std::pow(10.0, ll + x * (lh - ll));
        } else {
            out[i] = (x == 1.0) ? high : low + x * (high - low);
        }
    }
    return out;
}

}  // namespace bincal
