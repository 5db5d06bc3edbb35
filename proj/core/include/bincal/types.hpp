#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace bincal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Regular spatial grid. Cells are linearized row-major (row index varies
/// slowest): flat = row * n_cols + col. The coordinate of cell (row, col)
/// is (origin.x + col * cell_size.x, origin.y + row * cell_size.y).
struct GridSpec {
    int n_rows = 0;
    int n_cols = 0;
    std::pair<double, double> origin{0.0, 0.0};
    std::pair<double, double> cell_size{1.0, 1.0};

    GridSpec() = default;
    GridSpec(int rows, int cols, std::pair<double, double> org,
             std::pair<double, double> cell);

    int n_cells() const { return n_rows * n_cols; }
    int flat_index(int row, int col) const { return row * n_cols + col; }

    /// Native (x, y) coordinate of the cell at a flat index.
    std::pair<double, double> coordinate(int flat) const;

    bool operator==(const GridSpec&) const = default;
};

/// A single binary spatial pattern over a grid.
struct BinaryField {
    GridSpec grid;
    Eigen::VectorXi values;  // entries in {0,1}, length grid.n_cells()

    BinaryField() = default;
    BinaryField(GridSpec g, Eigen::VectorXi vals);
};

/// Design of p simulator runs over a d-dimensional unit cube, with the
/// native-units range and scaling metadata needed to map back.
struct DesignMatrix {
    Matrix points;  // p x d, entries in [0,1]
    std::vector<std::string> names;
    std::vector<std::pair<double, double>> ranges;  // native (low, high)
    std::vector<bool> log_scaled;

    DesignMatrix() = default;
    DesignMatrix(Matrix pts, std::vector<std::string> nm,
                 std::vector<std::pair<double, double>> rng,
                 std::vector<bool> logs);

    int p() const { return static_cast<int>(points.rows()); }
    int d() const { return static_cast<int>(points.cols()); }
};

/// p x n binary matrix of simulator outputs: one row per design point, one
/// column per grid cell.
struct EnsembleMatrix {
    DesignMatrix design;
    GridSpec grid;
    Eigen::MatrixXi values;  // p x n, entries in {0,1}

    EnsembleMatrix() = default;
    EnsembleMatrix(DesignMatrix dsn, GridSpec g, Eigen::MatrixXi vals);

    int p() const { return static_cast<int>(values.rows()); }
    int n() const { return static_cast<int>(values.cols()); }
};

/// Map a unit-cube point to native units. Linear coordinates use
/// low + x * (high - low); log-scaled coordinates interpolate in log10
/// space and exponentiate, so x = 0.5 lands on the geometric midpoint.
Vector to_native(const DesignMatrix& design, const Vector& point);

}  // namespace bincal
