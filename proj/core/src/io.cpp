#include "bincal/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bincal {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return in;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, const std::string& path) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("malformed numeric field '" + s + "' in " + path);
    }
}

int parse_binary(const std::string& s, int row, int col) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw std::runtime_error("non-binary entry at (" + std::to_string(row) + "," +
                             std::to_string(col) + "): '" + s + "'");
}

json load_json(const std::string& path) {
    auto in = open_or_throw(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

std::string sibling(const std::string& path, const std::string& suffix) {
    fs::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

}  // namespace

GridSpec load_grid(const std::string& path) {
    json j = load_json(path);
    return GridSpec(j.at("n_rows").get<int>(), j.at("n_cols").get<int>(),
                    {j.at("origin")[0].get<double>(), j.at("origin")[1].get<double>()},
                    {j.at("cell_size")[0].get<double>(),
                     j.at("cell_size")[1].get<double>()});
}

void save_grid(const GridSpec& grid, const std::string& path) {
    json j;
    j["n_rows"] = grid.n_rows;
    j["n_cols"] = grid.n_cols;
    j["origin"] = {grid.origin.first, grid.origin.second};
    j["cell_size"] = {grid.cell_size.first, grid.cell_size.second};
    j["ordering"] = "row-major";  // flat = row * n_cols + col
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

DesignMatrix load_design(const std::string& csv_path,
                         const std::string& meta_path) {
    auto in = open_or_throw(csv_path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty design file: " + csv_path);
    const auto names = split_csv_line(line);
    const int d = static_cast<int>(names.size());

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != d)
            throw std::runtime_error("design row " + std::to_string(rows.size()) +
                                     " has " + std::to_string(fields.size()) +
                                     " fields, expected " + std::to_string(d));
        std::vector<double> row(d);
        for (int j = 0; j < d; ++j) row[j] = parse_double(fields[j], csv_path);
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2)
        throw std::runtime_error("design: p >= 2 required, got " +
                                 std::to_string(rows.size()));

    Matrix pts(rows.size(), d);
    for (size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < d; ++j) pts(i, j) = rows[i][j];

    json meta = load_json(meta_path);
    std::vector<std::pair<double, double>> ranges;
    for (const auto& r : meta.at("ranges"))
        ranges.emplace_back(r[0].get<double>(), r[1].get<double>());
    std::vector<bool> logs = meta.at("log_scaled").get<std::vector<bool>>();

    return DesignMatrix(std::move(pts), names, std::move(ranges), std::move(logs));
}

DesignMatrix load_design(const std::string& csv_path) {
    return load_design(csv_path, sibling(csv_path, ".meta.json"));
}

void save_design(const DesignMatrix& design, const std::string& csv_path,
                 const std::string& meta_path) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write file: " + csv_path);
    for (int j = 0; j < design.d(); ++j)
        out << (j ? "," : "") << design.names[j];
    out << "\n";
    for (int i = 0; i < design.p(); ++i) {
        for (int j = 0; j < design.d(); ++j)
            out << (j ? "," : "") << format_double(design.points(i, j));
        out << "\n";
    }

    json meta;
    meta["ranges"] = json::array();
    for (const auto& [lo, hi] : design.ranges) meta["ranges"].push_back({lo, hi});
    meta["log_scaled"] = design.log_scaled;
    std::ofstream mout(meta_path);
    if (!mout) throw std::runtime_error("cannot write file: " + meta_path);
    mout << meta.dump(2) << "\n";
}

namespace {

Eigen::MatrixXi load_binary_rows(const std::string& csv_path, int expect_rows) {
    auto in = open_or_throw(csv_path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty ensemble file: " + csv_path);
    const auto header = split_csv_line(line);
    const int n = static_cast<int>(header.size());
    for (int j = 0; j < n; ++j)
        if (header[j] != "cell_" + std::to_string(j))
            throw std::runtime_error("unexpected ensemble header column '" +
                                     header[j] + "' at position " +
                                     std::to_string(j));

    std::vector<std::vector<int>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != n)
            throw std::runtime_error("row " + std::to_string(rows.size()) +
                                     " has " + std::to_string(fields.size()) +
                                     " fields, expected " + std::to_string(n));
        std::vector<int> row(n);
        for (int j = 0; j < n; ++j)
            row[j] = parse_binary(fields[j], static_cast<int>(rows.size()), j);
        rows.push_back(std::move(row));
    }
    if (expect_rows >= 0 && static_cast<int>(rows.size()) != expect_rows)
        throw std::runtime_error("ensemble has " + std::to_string(rows.size()) +
                                 " rows, design has " + std::to_string(expect_rows));

    Eigen::MatrixXi vals(rows.size(), n);
    for (size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < n; ++j) vals(static_cast<int>(i), j) = rows[i][j];
    return vals;
}

}  // namespace

EnsembleMatrix load_ensemble(const std::string& csv_path,
                             const std::string& grid_path,
                             const DesignMatrix& design) {
    GridSpec grid = load_grid(grid_path);
    Eigen::MatrixXi vals = load_binary_rows(csv_path, design.p());
    return EnsembleMatrix(design, grid, std::move(vals));
}

EnsembleMatrix load_ensemble(const std::string& csv_path) {
    const std::string grid_path = sibling(csv_path, ".grid.json");
    const fs::path dir = fs::path(csv_path).parent_path();
    DesignMatrix design = load_design((dir / "design.csv").string(),
                                      (dir / "design.meta.json").string());
    return load_ensemble(csv_path, grid_path, design);
}

void save_ensemble(const EnsembleMatrix& ensemble, const std::string& csv_path,
                   const std::string& grid_path) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write file: " + csv_path);
    for (int j = 0; j < ensemble.n(); ++j)
        out << (j ? "," : "") << "cell_" << j;
    out << "\n";
    for (int i = 0; i < ensemble.p(); ++i) {
        for (int j = 0; j < ensemble.n(); ++j)
            out << (j ? "," : "") << ensemble.values(i, j);
        out << "\n";
    }
    save_grid(ensemble.grid, grid_path);
}

BinaryField load_observation(const std::string& csv_path, const GridSpec& grid) {
    Eigen::MatrixXi vals = load_binary_rows(csv_path, 1);
    if (vals.cols() != grid.n_cells())
        throw std::runtime_error("observation has " + std::to_string(vals.cols()) +
                                 " cells, grid has " +
                                 std::to_string(grid.n_cells()));
    return BinaryField(grid, vals.row(0).transpose());
}

void save_observation(const BinaryField& field, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write file: " + csv_path);
    for (int j = 0; j < field.values.size(); ++j)
        out << (j ? "," : "") << "cell_" << j;
    out << "\n";
    for (int j = 0; j < field.values.size(); ++j)
        out << (j ? "," : "") << field.values[j];
    out << "\n";
}

Matrix load_matrix_csv(const std::string& path) {
    auto in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
    const int cols = static_cast<int>(split_csv_line(line).size());
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != cols)
            throw std::runtime_error("ragged CSV in " + path);
        std::vector<double> row(cols);
        for (int j = 0; j < cols; ++j) row[j] = parse_double(fields[j], path);
        rows.push_back(std::move(row));
    }
    Matrix m(rows.size(), cols);
    for (size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < cols; ++j) m(static_cast<int>(i), j) = rows[i][j];
    return m;
}

void save_matrix_csv(const Matrix& m, const std::string& path,
                     const std::string& col_prefix) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (int j = 0; j < m.cols(); ++j)
        out << (j ? "," : "") << col_prefix << "_" << j;
    out << "\n";
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j)
            out << (j ? "," : "") << format_double(m(i, j));
        out << "\n";
    }
}

Vector load_vector_csv(const std::string& path) {
    Matrix m = load_matrix_csv(path);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw std::runtime_error("expected a single row or column in " + path);
}

void save_vector_csv(const Vector& v, const std::string& path,
                     const std::string& col_prefix) {
    save_matrix_csv(v, path, col_prefix);
}

}  // namespace bincal
