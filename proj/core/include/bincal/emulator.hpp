#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bincal/gp.hpp"
#include "bincal/lpca.hpp"
#include "bincal/types.hpp"

namespace bincal {

/// Independent per-component GP emulators over the logistic-PC scores.
struct PcEmulator {
    Matrix design_points;        // p x d, unit cube
    std::vector<PcGpModel> gps;  // one per PC column

    int j_y() const { return static_cast<int>(gps.size()); }
};

struct EmulatorPrediction {
    Vector mean;  // length J_y
    Vector sd;    // length J_y, each sd^2 <= kappa + zeta
};

/// Fits one GP per score column. Component fits are independent and run
/// on up to `threads` workers.
PcEmulator fit_emulator(const LogisticPcaModel& lpca, const Matrix& design_points,
                        const GpFitOptions& opts = {}, int threads = 1);

EmulatorPrediction predict_scores(const PcEmulator& emulator, const Vector& point);

/// Plug-in probability field g(mu + Ky * predicted score means).
Vector emulate_probability_field(const LogisticPcaModel& lpca,
                                 const PcEmulator& emulator, const Vector& point);

/// 1 where prob >= threshold (ties map to 1), else 0.
BinaryField dichotomize(const Vector& probs, const GridSpec& grid,
                        double threshold = 0.5);

struct CvReport {
    int j_y = 0;
    double fold_fraction = 0.0;
    std::vector<double> per_run_rate;  // indexed by original run order
    Vector per_cell_rate;
    double overall_rate = 0.0;
};

/// Leave-fold_fraction-out cross-validation: each run is held out exactly
/// once; the logistic PCA and all GPs are refitted on the remaining runs and
/// the held-out fields are emulated and dichotomized.
CvReport cross_validate(const EnsembleMatrix& ensemble, int j_y,
                        double fold_fraction = 0.1, std::uint64_t seed = 0,
                        const LogisticPcaOptions& lpca_opts = {},
                        const GpFitOptions& gp_opts = {}, int threads = 1);

void save_cv_report(const CvReport& report, const std::string& csv_path);

/// Emulator artifact: JSON with per-component hyperparameters, the training
/// scores and design, and a reference to the lpca artifact it was built from.
void save_emulator(const PcEmulator& emulator, const std::string& json_path,
                   const std::string& lpca_artifact);
PcEmulator load_emulator(const std::string& json_path);

}  // namespace bincal
