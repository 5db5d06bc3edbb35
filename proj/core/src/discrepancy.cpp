#include "bincal/discrepancy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bincal/io.hpp"

namespace bincal {

Vector mismatch_proportions(const EnsembleMatrix& ensemble,
                            const BinaryField& observation) {
    if (!(ensemble.grid == observation.grid))
        throw std::invalid_argument("mismatch_proportions: grids differ");
    const int p = ensemble.p();
    const int n = ensemble.n();
    Vector r = Vector::Zero(n);
    for (int j = 0; j < n; ++j) {
        int sum = 0;
        for (int i = 0; i < p; ++i)
            sum += ensemble.values(i, j) - observation.values[j];
        r[j] = static_cast<double>(sum) / p;
    }
    return r;
}

DiscrepancyBasis build_basis(const Vector& r, double cutoff) {
    if (!(cutoff > 0.0 && cutoff < 1.0))
        throw std::invalid_argument("build_basis: cutoff must be in (0,1)");
    for (Eigen::Index j = 0; j < r.size(); ++j)
        if (!(r[j] >= -1.0 && r[j] <= 1.0))
            throw std::invalid_argument("build_basis: r entries must be in [-1,1]");

    DiscrepancyBasis basis;
    basis.r = r;
    basis.cutoff = cutoff;
    basis.k_d = Vector::Zero(r.size());
    for (Eigen::Index j = 0; j < r.size(); ++j) {
        if (std::abs(r[j]) <= cutoff) continue;
        double rt = r[j];
        if (std::abs(rt) > 0.999) rt = rt > 0.0 ? 0.999 : -0.999;
        basis.k_d[j] = std::log((1.0 + rt) / (1.0 - rt));
    }
    return basis;
}

double recover_check(const DiscrepancyBasis& basis, const Vector& true_logit) {
    if (basis.k_d.size() != true_logit.size())
        throw std::invalid_argument("recover_check: length mismatch");
    std::vector<double> a, b;
    for (Eigen::Index j = 0; j < basis.k_d.size(); ++j) {
        if (basis.k_d[j] != 0.0) {
            a.push_back(basis.k_d[j]);
            b.push_back(true_logit[j]);
        }
    }
    const size_t m = a.size();
    if (m < 2) throw std::invalid_argument("recover_check: no nonzero cells");
    double ma = 0.0, mb = 0.0;
    for (size_t k = 0; k < m; ++k) {
        ma += a[k];
        mb += b[k];
    }
    ma /= m;
    mb /= m;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (size_t k = 0; k < m; ++k) {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma) * (a[k] - ma);
        sbb += (b[k] - mb) * (b[k] - mb);
    }
    if (saa == 0.0 || sbb == 0.0)
        throw std::invalid_argument("recover_check: zero-variance input");
    // The basis direction is only identified up to sign (its coefficient is
    // symmetric around zero), so alignment is measured orientation-free.
    return std::abs(sab) / std::sqrt(saa * sbb);
}

void save_basis(const DiscrepancyBasis& basis, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write file: " + csv_path);
    out << "# cutoff=" << format_double(basis.cutoff) << "\n";
    out << "cell,k_d,r\n";
    for (Eigen::Index j = 0; j < basis.k_d.size(); ++j)
        out << j << "," << format_double(basis.k_d[j]) << ","
            << format_double(basis.r[j]) << "\n";
}

DiscrepancyBasis load_basis(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open file: " + csv_path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# cutoff=", 0) != 0)
        throw std::runtime_error("not a basis file: " + csv_path);
    DiscrepancyBasis basis;
    basis.cutoff = std::stod(line.substr(9));
    std::getline(in, line);  // header
    std::vector<double> kd, r;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell, k, rr;
        std::getline(ss, cell, ',');
        std::getline(ss, k, ',');
        std::getline(ss, rr, ',');
        kd.push_back(std::stod(k));
        r.push_back(std::stod(rr));
    }
    basis.k_d = Eigen::Map<const Vector>(kd.data(), kd.size());
    basis.r = Eigen::Map<const Vector>(r.data(), r.size());
    return basis;
}

}  // namespace bincal
