#include "bincal/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace bincal {

namespace {

Vector project(const Vector& x, const Vector& lo, const Vector& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f,
                             const Vector& start, const Vector& lower,
                             const Vector& upper, double step, int max_evals,
                             double tol) {
    const int n = static_cast<int>(start.size());
    int evals = 0;
    auto eval = [&](const Vector& x) {
        ++evals;
        return f(project(x, lower, upper));
    };

    std::vector<Vector> simplex(n + 1);
    std::vector<double> values(n + 1);
    simplex[0] = project(start, lower, upper);
    values[0] = eval(simplex[0]);
    for (int i = 0; i < n; ++i) {
        Vector v = simplex[0];
        v[i] += step;
        if (v[i] > upper[i]) v[i] = simplex[0][i] - step;
        simplex[i + 1] = v;
        values[i + 1] = eval(v);
    }

    std::vector<int> order(n + 1);
    bool converged = false;
    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return values[a] < values[b]; });
        const int best = order[0], worst = order[n], second = order[n - 1];

        if (std::isfinite(values[best]) &&
            std::abs(values[worst] - values[best]) <
                tol * (1.0 + std::abs(values[best]))) {
            converged = true;
            break;
        }

        Vector centroid = Vector::Zero(n);
        for (int k = 0; k <= n; ++k)
            if (k != worst) centroid += simplex[k];
        centroid /= n;

        const Vector reflected = centroid + (centroid - simplex[worst]);
        const double fr = eval(reflected);
        if (fr < values[order[0]]) {
            const Vector expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = eval(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if (fr < values[second]) {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            const Vector contracted =
                centroid + 0.5 * (simplex[worst] - centroid);
            const double fc = eval(contracted);
            if (fc < values[worst]) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                for (int k = 0; k <= n; ++k) {
                    if (k == best) continue;
                    simplex[k] = simplex[best] + 0.5 * (simplex[k] - simplex[best]);
                    values[k] = eval(simplex[k]);
                }
            }
        }
    }

    int best = 0;
    for (int k = 1; k <= n; ++k)
        if (values[k] < values[best]) best = k;

    NelderMeadResult result;
    result.x = project(simplex[best], lower, upper);
    result.value = values[best];
    result.evaluations = evals;
    result.converged = converged;
    return result;
}

}  // namespace bincal
