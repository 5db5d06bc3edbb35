#pragma once

#include <cstdint>
#include <functional>

#include "bincal/types.hpp"

namespace bincal {

struct NelderMeadResult {
    Vector x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Derivative-free simplex minimization with box constraints (arguments are
/// projected onto [lower, upper] before evaluation). The objective may
/// return +inf to reject a point.
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f,
                             const Vector& start, const Vector& lower,
                             const Vector& upper, double step = 0.5,
                             int max_evals = 500, double tol = 1e-9);

}  // namespace bincal
