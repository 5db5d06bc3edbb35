// Pipeline driver: synthesize | lpca | emulate | cv | calibrate | project |
// diagnose. Every subcommand is a pure function of (input files, flags,
// seed); artifacts embed the configuration that produced them.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bincal/calibration.hpp"
#include "bincal/discrepancy.hpp"
#include "bincal/emulator.hpp"
#include "bincal/io.hpp"
#include "bincal/lpca.hpp"
#include "bincal/projection.hpp"
#include "bincal/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out = ".";
};

std::string out_path(const GlobalOpts& g, const std::string& name) {
    fs::create_directories(g.out);
    return (fs::path(g.out) / name).string();
}

void write_config(const GlobalOpts& g, const std::string& name, json cfg) {
    cfg["seed"] = g.seed;
    cfg["threads"] = g.threads;
    const std::string path = out_path(g, name);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << cfg.dump(2) << "\n";
}

void note_written(const std::string& path) {
    std::cout << "wrote " << path << "\n";
}

// ---------------------------------------------------------------- synthesize

struct SynthArgs {
    double sill = bincal::GpNoiseConfig{}.sill;
    double range = bincal::GpNoiseConfig{}.range;
    double nugget = bincal::GpNoiseConfig{}.nugget;
    double saturation = bincal::SyntheticConfig{}.saturation_logit;
    int grid_side = 30;
    int design_side = 10;
    std::vector<double> truth{0.494, 0.089};
};

int cmd_synthesize(const GlobalOpts& g, const SynthArgs& a) {
    if (a.truth.size() != 2)
        throw std::invalid_argument("--truth takes exactly two values");
    bincal::SyntheticConfig cfg;
    cfg.noise = {a.sill, a.range, a.nugget};
    cfg.saturation_logit = a.saturation;
    cfg.grid_rows = a.grid_side;
    cfg.grid_cols = a.grid_side;
    cfg.design_side = a.design_side;
    cfg.truth = {a.truth[0], a.truth[1]};
    cfg.seed = g.seed;

    const bincal::EnsembleMatrix ensemble = bincal::synth_ensemble(cfg);
    const bincal::SyntheticObservation obs = bincal::make_observation(cfg);

    bincal::save_design(ensemble.design, out_path(g, "design.csv"),
                        out_path(g, "design.meta.json"));
    bincal::save_ensemble(ensemble, out_path(g, "ensemble.csv"),
                          out_path(g, "ensemble.grid.json"));
    bincal::save_observation(obs.observation, out_path(g, "observation.csv"));
    bincal::save_observation(obs.truth_output, out_path(g, "truth_output.csv"));
    bincal::save_vector_csv(obs.true_logit_discrepancy,
                            out_path(g, "true_discrepancy.csv"), "delta");

    write_config(g, "synthesize.config.json",
                 {{"command", "synthesize"},
                  {"noise", {{"sill", a.sill}, {"range", a.range}, {"nugget", a.nugget}}},
                  {"saturation_logit", a.saturation},
                  {"grid_side", a.grid_side},
                  {"design_side", a.design_side},
                  {"truth", a.truth}});
    note_written(out_path(g, "ensemble.csv"));
    std::cout << "synthetic ensemble: " << ensemble.p() << " runs x "
              << ensemble.n() << " cells\n";
    return 0;
}

// ---------------------------------------------------------------------- lpca

struct LpcaArgs {
    std::string ensemble;
    int components = 10;
    int max_iter = bincal::LogisticPcaOptions{}.max_iter;
    double rel_tol = bincal::LogisticPcaOptions{}.rel_tol;
    int restarts = bincal::LogisticPcaOptions{}.restarts;
};

int cmd_lpca(const GlobalOpts& g, const LpcaArgs& a) {
    const bincal::EnsembleMatrix ensemble = bincal::load_ensemble(a.ensemble);
    bincal::LogisticPcaOptions opts;
    opts.max_iter = a.max_iter;
    opts.rel_tol = a.rel_tol;
    opts.restarts = a.restarts;
    opts.seed = g.seed;
    const bincal::LogisticPcaModel model =
        bincal::fit_lpca(ensemble, a.components, opts);

    const std::string artifact = out_path(g, "lpca.json");
    bincal::save_lpca(model, artifact);
    write_config(g, "lpca.config.json",
                 {{"command", "lpca"},
                  {"ensemble", a.ensemble},
                  {"components", a.components},
                  {"max_iter", a.max_iter},
                  {"rel_tol", a.rel_tol},
                  {"restarts", a.restarts}});
    note_written(artifact);
    std::cout << "logistic PCA: J_y=" << model.j_y
              << " converged=" << (model.converged ? "yes" : "no")
              << " final_nll="
              << bincal::format_double(model.deviance_trace.back()) << "\n";
    return 0;
}

// ----------------------------------------------------------- emulate and cv

struct GpArgs {
    int restarts = bincal::GpFitOptions{}.restarts;
    int max_evals = bincal::GpFitOptions{}.max_evals;
};

bincal::GpFitOptions gp_options(const GlobalOpts& g, const GpArgs& a) {
    bincal::GpFitOptions opts;
    opts.restarts = a.restarts;
    opts.max_evals = a.max_evals;
    opts.seed = g.seed;
    return opts;
}

struct EmulateArgs {
    std::string lpca;
    std::string design;
    GpArgs gp;
};

int cmd_emulate(const GlobalOpts& g, const EmulateArgs& a) {
    const bincal::LogisticPcaModel lpca = bincal::load_lpca(a.lpca);
    const bincal::DesignMatrix design = bincal::load_design(a.design);
    const bincal::PcEmulator emulator = bincal::fit_emulator(
        lpca, design.points, gp_options(g, a.gp), g.threads);

    for (int j = 0; j < emulator.j_y(); ++j) {
        const auto& gp = emulator.gps[j];
        std::cout << "pc " << (j + 1)
                  << ": kappa=" << bincal::format_double(gp.hyper().kappa);
        for (Eigen::Index k = 0; k < gp.hyper().phi.size(); ++k)
            std::cout << " phi" << (k + 1) << "="
                      << bincal::format_double(gp.hyper().phi[k]);
        std::cout << " zeta=" << bincal::format_double(gp.hyper().zeta)
                  << " log_lik=" << bincal::format_double(gp.log_lik())
                  << " converged=" << (gp.converged() ? "yes" : "no") << "\n";
    }

    const std::string artifact = out_path(g, "emulator.json");
    bincal::save_emulator(emulator, artifact, a.lpca);
    write_config(g, "emulate.config.json",
                 {{"command", "emulate"},
                  {"lpca", a.lpca},
                  {"design", a.design},
                  {"restarts", a.gp.restarts},
                  {"max_evals", a.gp.max_evals}});
    note_written(artifact);
    return 0;
}

struct CvArgs {
    std::string ensemble;
    int components = 10;
    double folds = 0.1;
    LpcaArgs lpca;  // reuses max_iter/rel_tol/restarts defaults
    GpArgs gp;
};

int cmd_cv(const GlobalOpts& g, const CvArgs& a) {
    const bincal::EnsembleMatrix ensemble = bincal::load_ensemble(a.ensemble);
    bincal::LogisticPcaOptions lopts;
    lopts.max_iter = a.lpca.max_iter;
    lopts.rel_tol = a.lpca.rel_tol;
    lopts.seed = g.seed;
    const bincal::CvReport report =
        bincal::cross_validate(ensemble, a.components, a.folds, g.seed, lopts,
                               gp_options(g, a.gp), g.threads);

    const std::string path = out_path(g, "cv_report.csv");
    bincal::save_cv_report(report, path);
    write_config(g, "cv.config.json", {{"command", "cv"},
                                       {"ensemble", a.ensemble},
                                       {"components", a.components},
                                       {"folds", a.folds}});
    note_written(path);
    std::cout << "cv overall misclassification rate: "
              << bincal::format_double(report.overall_rate) << "\n";
    return 0;
}

// ----------------------------------------------------------------- calibrate

struct CalibrateArgs {
    std::string ensemble;
    std::string lpca;
    std::string emulator;
    std::string observation;
    double cutoff = 0.5;
    double a_d = 2.0;
    double b_d = 3.0;
    int iterations = bincal::McmcConfig{}.iterations;
    int burn_in = bincal::McmcConfig{}.burn_in;
    int thin = bincal::McmcConfig{}.thin;
    bool no_adapt = false;
    int chains = 1;
    int grid_points = 64;
};

std::string chain_name(const std::string& stem, int k, const std::string& ext) {
    return stem + "_" + std::to_string(k + 1) + ext;
}

void emit_pairwise_densities(const GlobalOpts& g, const bincal::Chain& pooled,
                             const bincal::PriorConfig& priors,
                             const std::vector<std::string>& names,
                             int grid_points) {
    for (int i = 0; i < pooled.d; ++i)
        for (int j = i + 1; j < pooled.d; ++j) {
            const bincal::DensityGrid dens =
                bincal::pairwise_density(pooled, i, j, priors, grid_points);
            const std::string path =
                out_path(g, "density_" + names[i] + "_" + names[j] + ".csv");
            bincal::save_density_grid(dens, path);
            note_written(path);
        }
}

int cmd_calibrate(const GlobalOpts& g, const CalibrateArgs& a) {
    if (a.chains < 1) throw std::invalid_argument("--chains must be >= 1");
    const bincal::EnsembleMatrix ensemble = bincal::load_ensemble(a.ensemble);
    const bincal::LogisticPcaModel lpca = bincal::load_lpca(a.lpca);
    const bincal::PcEmulator emulator = bincal::load_emulator(a.emulator);
    const bincal::BinaryField observation =
        bincal::load_observation(a.observation, ensemble.grid);

    const bincal::DiscrepancyBasis basis = bincal::build_basis(
        bincal::mismatch_proportions(ensemble, observation), a.cutoff);
    const std::string basis_path = out_path(g, "discrepancy_basis.csv");
    bincal::save_basis(basis, basis_path);
    note_written(basis_path);

    const int d = static_cast<int>(emulator.design_points.cols());
    const bincal::PriorConfig priors =
        bincal::PriorConfig::unit_cube(d, a.a_d, a.b_d);
    std::cout << "reduced model estimates J_y + d + 2 = "
              << (lpca.j_y + d + 2) << " parameters\n";

    std::vector<bincal::Chain> chains(a.chains);
    std::vector<std::string> errors(a.chains);
    auto run_chain = [&](int k) {
        try {
            bincal::McmcConfig cfg;
            cfg.iterations = a.iterations;
            cfg.burn_in = a.burn_in;
            cfg.thin = a.thin;
            cfg.adapt = !a.no_adapt;
            cfg.seed = g.seed + static_cast<std::uint64_t>(k);
            chains[k] = bincal::calibrate(observation, lpca, emulator, basis,
                                          priors, cfg);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    };
    const int workers = std::max(1, g.threads);
    for (int base = 0; base < a.chains; base += workers) {
        std::vector<std::thread> pool;
        for (int k = base; k < std::min(a.chains, base + workers); ++k)
            pool.emplace_back(run_chain, k);
        for (auto& t : pool) t.join();
    }
    for (const auto& err : errors)
        if (!err.empty()) throw std::runtime_error(err);

    json merged;
    merged["chains"] = a.chains;
    merged["per_chain"] = json::array();
    for (int k = 0; k < a.chains; ++k) {
        const std::string chain_path = out_path(g, chain_name("chain", k, ".csv"));
        const std::string diag_path =
            out_path(g, chain_name("diagnostics", k, ".json"));
        bincal::save_chain(chains[k], chain_path);
        bincal::save_diagnostics(chains[k], diag_path);
        note_written(chain_path);
        std::ifstream in(diag_path);
        json diag;
        in >> diag;
        merged["per_chain"].push_back(diag);
    }
    {
        const std::string path = out_path(g, "diagnostics.json");
        std::ofstream out(path);
        out << merged.dump(2) << "\n";
        note_written(path);
    }

    bincal::Chain pooled = chains[0];
    for (int k = 1; k < a.chains; ++k)
        pooled.samples.insert(pooled.samples.end(), chains[k].samples.begin(),
                              chains[k].samples.end());
    emit_pairwise_densities(g, pooled, priors, ensemble.design.names,
                            a.grid_points);

    write_config(g, "calibrate.config.json",
                 {{"command", "calibrate"},
                  {"ensemble", a.ensemble},
                  {"lpca", a.lpca},
                  {"emulator", a.emulator},
                  {"observation", a.observation},
                  {"cutoff", a.cutoff},
                  {"a_d", a.a_d},
                  {"b_d", a.b_d},
                  {"iterations", a.iterations},
                  {"burn_in", a.burn_in},
                  {"thin", a.thin},
                  {"adapt", !a.no_adapt},
                  {"chains", a.chains},
                  {"grid_points", a.grid_points}});
    return 0;
}

// ------------------------------------------------------------------- project

struct ProjectArgs {
    std::string chain;
    std::string design;
    std::string response;  // scalar response CSV; empty => planted synthetic
    std::string mode = "sample";
    int baseline = 0;
    GpArgs gp;
};

int cmd_project(const GlobalOpts& g, const ProjectArgs& a) {
    const bincal::Chain chain = bincal::load_chain(a.chain);
    const bincal::DesignMatrix design = bincal::load_design(a.design);
    const bincal::Vector response = a.response.empty()
                                        ? bincal::synth_responses(design)
                                        : bincal::load_vector_csv(a.response);

    bincal::ProjectionMode mode;
    if (a.mode == "sample")
        mode = bincal::ProjectionMode::SamplePredictive;
    else if (a.mode == "mean")
        mode = bincal::ProjectionMode::MeanPlugIn;
    else
        throw std::invalid_argument("--mode must be 'sample' or 'mean'");

    const bincal::ScalarGp sgp =
        bincal::fit_scalar(design.points, response, gp_options(g, a.gp));
    std::cout << "scalar GP: mean=" << bincal::format_double(sgp.mean_const())
              << " kappa=" << bincal::format_double(sgp.hyper().kappa)
              << " zeta=" << bincal::format_double(sgp.hyper().zeta)
              << " converged=" << (sgp.converged() ? "yes" : "no") << "\n";

    const std::vector<double> samples =
        bincal::project_chain(chain, sgp, mode, g.seed);
    bincal::save_projection(samples, bincal::summarize_predictive(samples),
                            mode, out_path(g, "projection_samples.csv"),
                            out_path(g, "projection_summary.json"));
    note_written(out_path(g, "projection_summary.json"));

    if (a.baseline > 0) {
        const bincal::PriorConfig priors = bincal::PriorConfig::unit_cube(chain.d);
        const std::vector<double> base = bincal::uncalibrated_baseline(
            priors, sgp, a.baseline, g.seed + 1, mode);
        bincal::save_projection(base, bincal::summarize_predictive(base), mode,
                                out_path(g, "baseline_samples.csv"),
                                out_path(g, "baseline_summary.json"));
        note_written(out_path(g, "baseline_summary.json"));
    }

    write_config(g, "project.config.json", {{"command", "project"},
                                            {"chain", a.chain},
                                            {"design", a.design},
                                            {"response", a.response},
                                            {"mode", a.mode},
                                            {"baseline", a.baseline}});
    return 0;
}

// ------------------------------------------------------------------ diagnose

struct DiagnoseArgs {
    std::vector<std::string> chains;
    int grid_points = 64;
};

int cmd_diagnose(const GlobalOpts& g, const DiagnoseArgs& a) {
    if (a.chains.empty()) throw std::invalid_argument("--chain is required");
    std::vector<bincal::Chain> loaded;
    for (const auto& path : a.chains) loaded.push_back(bincal::load_chain(path));

    json merged;
    merged["chains"] = loaded.size();
    merged["per_chain"] = json::array();
    for (size_t k = 0; k < loaded.size(); ++k) {
        const std::string diag_path =
            out_path(g, chain_name("diagnostics", static_cast<int>(k), ".json"));
        bincal::save_diagnostics(loaded[k], diag_path);
        note_written(diag_path);
        std::ifstream in(diag_path);
        json diag;
        in >> diag;
        merged["per_chain"].push_back(diag);
    }
    {
        const std::string path = out_path(g, "diagnostics.json");
        std::ofstream out(path);
        out << merged.dump(2) << "\n";
        note_written(path);
    }

    bincal::Chain pooled = loaded[0];
    for (size_t k = 1; k < loaded.size(); ++k)
        pooled.samples.insert(pooled.samples.end(), loaded[k].samples.begin(),
                              loaded[k].samples.end());
    std::vector<std::string> names;
    for (int i = 0; i < pooled.d; ++i)
        names.push_back("theta" + std::to_string(i + 1));
    emit_pairwise_densities(g, pooled, bincal::PriorConfig::unit_cube(pooled.d),
                            names, a.grid_points);

    write_config(g, "diagnose.config.json",
                 {{"command", "diagnose"},
                  {"chains", a.chains},
                  {"grid_points", a.grid_points}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Binary-output simulator calibration pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Global RNG seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Internal parallelism bound")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.fallthrough();

    SynthArgs synth;
    auto* c_synth = app.add_subcommand(
        "synthesize", "Generate the synthetic benchmark dataset");
    c_synth->add_option("--sill", synth.sill, "Discrepancy GP sill")
        ->capture_default_str();
    c_synth->add_option("--range", synth.range, "Discrepancy GP range")
        ->capture_default_str();
    c_synth->add_option("--nugget", synth.nugget, "Discrepancy GP nugget")
        ->capture_default_str();
    c_synth
        ->add_option("--saturation-logit", synth.saturation,
                     "Clean-field logit magnitude")
        ->capture_default_str();
    c_synth->add_option("--grid-side", synth.grid_side, "Grid side length")
        ->check(CLI::Range(2, 200))
        ->capture_default_str();
    c_synth->add_option("--design-side", synth.design_side, "Design lattice side")
        ->check(CLI::Range(2, 100))
        ->capture_default_str();
    c_synth->add_option("--truth", synth.truth, "True (theta1, theta2)")
        ->expected(2);

    LpcaArgs lpca;
    auto* c_lpca =
        app.add_subcommand("lpca", "Fit logistic principal components");
    c_lpca->add_option("--ensemble", lpca.ensemble, "Ensemble CSV")->required();
    c_lpca->add_option("--components", lpca.components, "Number of components")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_lpca->add_option("--max-iter", lpca.max_iter, "MM iteration cap")
        ->capture_default_str();
    c_lpca->add_option("--rel-tol", lpca.rel_tol, "Relative NLL tolerance")
        ->capture_default_str();
    c_lpca->add_option("--restarts", lpca.restarts, "Randomized restarts")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    EmulateArgs emu;
    auto* c_emu = app.add_subcommand("emulate", "Fit per-component score GPs");
    c_emu->add_option("--lpca", emu.lpca, "LPCA artifact JSON")->required();
    c_emu->add_option("--design", emu.design, "Design CSV")->required();
    c_emu->add_option("--restarts", emu.gp.restarts, "GP fit restarts")
        ->capture_default_str();
    c_emu->add_option("--max-evals", emu.gp.max_evals, "Simplex evaluation cap")
        ->capture_default_str();

    CvArgs cv;
    auto* c_cv =
        app.add_subcommand("cv", "Leave-fraction-out emulation cross-validation");
    c_cv->add_option("--ensemble", cv.ensemble, "Ensemble CSV")->required();
    c_cv->add_option("--components", cv.components, "Number of components")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_cv->add_option("--folds", cv.folds, "Held-out fraction per fold")
        ->capture_default_str();
    c_cv->add_option("--restarts", cv.gp.restarts, "GP fit restarts")
        ->capture_default_str();
    c_cv->add_option("--max-evals", cv.gp.max_evals, "Simplex evaluation cap")
        ->capture_default_str();

    CalibrateArgs cal;
    auto* c_cal =
        app.add_subcommand("calibrate", "Sample the calibration posterior");
    c_cal->add_option("--ensemble", cal.ensemble, "Ensemble CSV")->required();
    c_cal->add_option("--lpca", cal.lpca, "LPCA artifact JSON")->required();
    c_cal->add_option("--emulator", cal.emulator, "Emulator artifact JSON")
        ->required();
    c_cal->add_option("--observation", cal.observation, "Observation CSV")
        ->required();
    c_cal->add_option("--cutoff", cal.cutoff, "Discrepancy mismatch cutoff")
        ->capture_default_str();
    c_cal->add_option("--a-d", cal.a_d, "IG shape for sigma_d^2")
        ->capture_default_str();
    c_cal->add_option("--b-d", cal.b_d, "IG scale for sigma_d^2")
        ->capture_default_str();
    c_cal->add_option("--iterations", cal.iterations, "MCMC iterations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_cal->add_option("--burn-in", cal.burn_in, "Burn-in iterations")
        ->capture_default_str();
    c_cal->add_option("--thin", cal.thin, "Thinning interval")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_cal->add_flag("--no-adapt", cal.no_adapt,
                    "Disable burn-in proposal adaptation");
    c_cal->add_option("--chains", cal.chains, "Independent chain count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_cal->add_option("--grid-points", cal.grid_points, "Density grid side")
        ->capture_default_str();

    ProjectArgs proj;
    auto* c_proj = app.add_subcommand(
        "project", "Push a calibration chain through a scalar response GP");
    c_proj->add_option("--chain", proj.chain, "Chain CSV")->required();
    c_proj->add_option("--design", proj.design, "Design CSV")->required();
    c_proj->add_option("--response", proj.response,
                       "Scalar response CSV (one value per design run); "
                       "defaults to the planted synthetic response");
    c_proj->add_option("--mode", proj.mode, "'sample' or 'mean'")
        ->capture_default_str();
    c_proj->add_option("--baseline", proj.baseline,
                       "Also emit an uncalibrated baseline of this many draws")
        ->capture_default_str();
    c_proj->add_option("--restarts", proj.gp.restarts, "GP fit restarts")
        ->capture_default_str();

    DiagnoseArgs diag;
    auto* c_diag =
        app.add_subcommand("diagnose", "Chain diagnostics and density grids");
    c_diag->add_option("--chain", diag.chains, "Chain CSV (repeatable)")
        ->required();
    c_diag->add_option("--grid-points", diag.grid_points, "Density grid side")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (c_synth->parsed()) return cmd_synthesize(g, synth);
        if (c_lpca->parsed()) return cmd_lpca(g, lpca);
        if (c_emu->parsed()) return cmd_emulate(g, emu);
        if (c_cv->parsed()) return cmd_cv(g, cv);
        if (c_cal->parsed()) return cmd_calibrate(g, cal);
        if (c_proj->parsed()) return cmd_project(g, proj);
        if (c_diag->parsed()) return cmd_diagnose(g, diag);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
