#pragma once

#include <string>

#include "bincal/types.hpp"

namespace bincal {

// All real values are serialized as decimal text with 17 significant
// digits so a save/load round trip reproduces doubles bit-exactly.
std::string format_double(double x);

// Grid JSON: {"n_rows":int,"n_cols":int,"origin":[x,y],"cell_size":[dx,dy]}
GridSpec load_grid(const std::string& path);
void save_grid(const GridSpec& grid, const std::string& path);

// Design CSV has a header of parameter names and rows of unit-cube reals.
// The metadata JSON holds {"ranges": [[low,high],...], "log_scaled": [...]}.
DesignMatrix load_design(const std::string& csv_path,
                         const std::string& meta_path);
/// Resolves the metadata file as `<csv stem>.meta.json`.
DesignMatrix load_design(const std::string& csv_path);
void save_design(const DesignMatrix& design, const std::string& csv_path,
                 const std::string& meta_path);

// Ensemble CSV: header `cell_0,...,cell_{n-1}`, one 0/1 row per design point.
EnsembleMatrix load_ensemble(const std::string& csv_path,
                             const std::string& grid_path,
                             const DesignMatrix& design);
/// Resolves the grid spec as `<csv stem>.grid.json` and the design as
/// `design.csv` / `design.meta.json` in the same directory.
EnsembleMatrix load_ensemble(const std::string& csv_path);
void save_ensemble(const EnsembleMatrix& ensemble, const std::string& csv_path,
                   const std::string& grid_path);

// Observation CSV: a single row matching the ensemble header.
BinaryField load_observation(const std::string& csv_path, const GridSpec& grid);
void save_observation(const BinaryField& field, const std::string& csv_path);

// Generic column-labeled CSV blocks used by model artifacts.
Matrix load_matrix_csv(const std::string& path);
void save_matrix_csv(const Matrix& m, const std::string& path,
                     const std::string& col_prefix = "c");
Vector load_vector_csv(const std::string& path);
void save_vector_csv(const Vector& v, const std::string& path,
                     const std::string& col_prefix = "c");

}  // namespace bincal
