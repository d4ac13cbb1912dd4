#ifndef CLICKPNR_PIPELINE_HPP
#define CLICKPNR_PIPELINE_HPP

#include "clickpnr/dataio.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace clickpnr {

// Configuration shared by all commands; each command reads the fields it
// needs. Validated before any computation and serialized into every report.
struct RunConfig {
    int n_bins = 4;
    double eta = 0.608;
    double nu = 0.0;
    double gamma = 0.0;
    std::vector<double> nbars;
    std::uint64_t shots = 1'000'000;
    std::uint64_t seed = 1;
    int n_max = 0;  // 0 = max(4 * nbar * N, 30)
    std::string out_dir = "out";
    bool clamp = false;
    int bootstrap_resamples = 1000;
    FitOrder fit_order = FitOrder::quadratic;
    std::vector<double> eta_to = {0.8, 1.0};
    std::string format = "csv";  // "json": report only; "csv": plus plot CSVs
    std::vector<std::string> inputs;
    std::string response_fit_path;             // fitted report consumed by invert
    std::optional<double> eta_explicit;        // --eta given on the command line
    bool analytic = false;                     // qparams: analytic parameter sweep

    void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& config);

// Deterministic per-point simulation seed.
std::uint64_t point_seed(std::uint64_t seed, int n_bins, int point_index);

// Log-spaced calibration grid over [0.027, 0.85], the span a 15 dB attenuation
// sweep covers.
std::vector<double> default_nbar_grid(int points);

// simulate: one shot file per nbar, deterministic per seed.
std::vector<std::filesystem::path> cmd_simulate(const RunConfig& config);

// tomography: response fit over calibration shot files plus bin uniformity and
// cross-talk diagnostics on the brightest point.
std::filesystem::path cmd_tomography(const RunConfig& config);

// qparams: Mandel and binomial parameters of a shot file or stored report, or
// analytic theory curves over the nbar grid with --analytic.
std::filesystem::path cmd_qparams(const RunConfig& config);

// invert: pseudo-photon-number reconstruction of a shot file.
std::filesystem::path cmd_invert(const RunConfig& config);

// deconvolve: loss removal staircase applied to a reconstruction report.
std::filesystem::path cmd_deconvolve(const RunConfig& config);

// Full chain with paper-scale defaults: two detector configurations
// (N=4, eta=0.608, 16 points; N=8, eta=0.605, 6 points), simulate ->
// tomography -> qparams -> invert -> deconvolve, reconstruction at the fitted
// efficiency unless eta_explicit overrides it.
struct PaperPipelineOutputs {
    std::filesystem::path summary;
    std::vector<std::filesystem::path> files;  // every file written, sorted
};

PaperPipelineOutputs cmd_paper_pipeline(const RunConfig& config);

}  // namespace clickpnr

#endif
