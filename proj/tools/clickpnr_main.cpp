// Command-line front end: simulate, calibrate, reconstruct, and deconvolve
// multiplexed click-detector data.

#include "clickpnr/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using clickpnr::RunConfig;

struct CommandState {
    RunConfig config;
    std::string fit_order = "quadratic";
    CLI::Option* eta_option = nullptr;

    void finalize() {
        config.fit_order = clickpnr::fit_order_from_string(fit_order);
        if (eta_option && eta_option->count() > 0) config.eta_explicit = config.eta;
    }
};

void add_common_options(CLI::App* cmd, CommandState& state) {
    RunConfig& cfg = state.config;
    cmd->add_option("--n-bins", cfg.n_bins, "Detection bins N")->capture_default_str();
    state.eta_option =
        cmd->add_option("--eta", cfg.eta, "Quantum efficiency")->capture_default_str();
    cmd->add_option("--nu", cfg.nu, "Dark-count rate per bin")->capture_default_str();
    cmd->add_option("--gamma", cfg.gamma, "Second-order response coefficient")
        ->capture_default_str();
    cmd->add_option("--nbar", cfg.nbars, "Mean photon number (repeatable)");
    cmd->add_option("--shots", cfg.shots, "Shots per data set")->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    cmd->add_option("--n-max", cfg.n_max, "Photon-number truncation (0 = automatic)")
        ->capture_default_str();
    cmd->add_option("--fit-order", state.fit_order, "Response model order")
        ->check(CLI::IsMember({"linear", "quadratic"}))
        ->capture_default_str();
    cmd->add_option("--bootstrap", cfg.bootstrap_resamples, "Bootstrap resamples")
        ->capture_default_str();
    cmd->add_flag("--clamp", cfg.clamp, "Clip negative quasi-probabilities in plot CSVs");
    cmd->add_option("--eta-to", cfg.eta_to, "Deconvolution stage efficiencies (repeatable)");
    cmd->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--format", cfg.format, "json: reports only; csv: plus plot CSVs")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clickpnr: photon-number statistics from multiplexed click detection"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file (INI, [subcommand] sections, keys = flag names)");

    CommandState sim, tomo, qp, inv, dec, paper;

    auto* c_sim = app.add_subcommand("simulate", "Sample shot files for coherent light");
    add_common_options(c_sim, sim);

    auto* c_tomo = app.add_subcommand(
        "tomography", "Fit the detector response and run bin diagnostics on shot files");
    add_common_options(c_tomo, tomo);
    c_tomo->add_option("inputs", tomo.config.inputs, "Calibration shot files")
        ->required()
        ->expected(-1);

    auto* c_qp = app.add_subcommand(
        "qparams", "Mandel/binomial parameters of a shot file, report, or analytic sweep");
    add_common_options(c_qp, qp);
    c_qp->add_option("input", qp.config.inputs, "Shot file or report JSON");
    c_qp->add_flag("--analytic", qp.config.analytic,
                   "Theory curves over the nbar grid instead of data");

    auto* c_inv = app.add_subcommand("invert", "Pseudo-photon-number reconstruction");
    add_common_options(c_inv, inv);
    c_inv->add_option("input", inv.config.inputs, "Shot file")->required();
    c_inv->add_option("--response-fit", inv.config.response_fit_path,
                      "Tomography report supplying the fitted efficiency");

    auto* c_dec = app.add_subcommand("deconvolve", "Loss removal staircase");
    add_common_options(c_dec, dec);
    c_dec->add_option("input", dec.config.inputs, "Reconstruction report JSON")->required();

    auto* c_paper = app.add_subcommand(
        "paper-pipeline",
        "Full chain at paper scale: N=4 and N=8 sweeps, tomography, inversion, deconvolution");
    add_common_options(c_paper, paper);

    try {
        app.parse(argc, argv);

        if (c_sim->parsed()) {
            sim.finalize();
            for (const auto& p : clickpnr::cmd_simulate(sim.config))
                std::cout << p.string() << "\n";
        } else if (c_tomo->parsed()) {
            tomo.finalize();
            std::cout << clickpnr::cmd_tomography(tomo.config).string() << "\n";
        } else if (c_qp->parsed()) {
            qp.finalize();
            std::cout << clickpnr::cmd_qparams(qp.config).string() << "\n";
        } else if (c_inv->parsed()) {
            inv.finalize();
            std::cout << clickpnr::cmd_invert(inv.config).string() << "\n";
        } else if (c_dec->parsed()) {
            dec.finalize();
            std::cout << clickpnr::cmd_deconvolve(dec.config).string() << "\n";
        } else if (c_paper->parsed()) {
            paper.finalize();
            const auto outputs = clickpnr::cmd_paper_pipeline(paper.config);
            std::cout << outputs.summary.string() << "\n";
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // validation failure
    } catch (const clickpnr::validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const clickpnr::saturation_error& e) {
        std::cerr << "saturation error: " << e.what() << "\n";
        return 3;
    } catch (const clickpnr::io_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
