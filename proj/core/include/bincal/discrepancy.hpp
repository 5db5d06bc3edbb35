#pragma once

#include <string>

#include "bincal/types.hpp"

namespace bincal {

/// Single-vector logit-scale discrepancy basis built from the signed
/// proportion of persistent ensemble/observation mismatch.
struct DiscrepancyBasis {
    Vector k_d;      // length n, zero wherever |r| <= cutoff
    Vector r;        // signed mismatch proportions in [-1, 1]
    double cutoff = 0.5;
};

/// r_j = sum_i sgn(Y_ij - Z_j) 1(Y_ij != Z_j) / p.
Vector mismatch_proportions(const EnsembleMatrix& ensemble,
                            const BinaryField& observation);

/// k_d[j] = log((1 + r~_j) / (1 - r~_j)) when |r_j| > cutoff, else 0,
/// with r~ clamped to magnitude 0.999.
DiscrepancyBasis build_basis(const Vector& r, double cutoff = 0.5);

/// Pearson correlation magnitude between k_d and a known truth pattern,
/// restricted to the basis support (cells where k_d is nonzero — the cells
/// where the basis makes a claim). The basis direction is sign-indeterminate
/// (its coefficient has a symmetric prior), so only the alignment strength
/// is meaningful. Intended for synthetic studies.
double recover_check(const DiscrepancyBasis& basis, const Vector& true_logit);

/// CSV aligned with the grid flat index, including r for audit.
void save_basis(const DiscrepancyBasis& basis, const std::string& csv_path);
DiscrepancyBasis load_basis(const std::string& csv_path);

}  // namespace bincal
