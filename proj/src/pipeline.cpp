#include "clickpnr/pipeline.hpp"

#include "clickpnr/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace clickpnr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create directory " + dir.string() + ": " + ec.message());
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

CalibrationPoint calibration_point(const Aggregates& agg, double nbar) {
    CalibrationPoint p;
    p.nbar = nbar;
    p.click_counts = agg.click_counts;
    p.shots = agg.shots;
    p.bin_marginals = agg.bin_marginals;
    p.pair_joint = agg.pair_joint;
    return p;
}

std::vector<double> click_sigma(const ClickDistribution& d) {
    std::vector<double> sigma(d.size(), kNan);
    if (d.shot_count() == 0) return sigma;
    const double s = static_cast<double>(d.shot_count());
    for (std::size_t k = 0; k < d.size(); ++k) sigma[k] = std::sqrt(d[k] * (1.0 - d[k]) / s);
    return sigma;
}

QEstimate analytic_q(double q) {
    QEstimate e;
    e.q = q;
    e.sigma = kNan;
    e.flag = "analytic_input";
    return e;
}

struct LoadedShots {
    ShotFile file;
    Aggregates agg;
    double nbar = kNan;
};

LoadedShots load_shots(const fs::path& path) {
    LoadedShots out{read_shots(path), {}, kNan};
    if (out.file.records.empty()) throw validation_error(path.string() + ": no shot records");
    out.agg = aggregate(out.file.records, out.file.header.n_bins);
    if (out.file.header.nbar) out.nbar = *out.file.header.nbar;
    return out;
}

ResponseParams response_params(const RunConfig& config) {
    return ResponseParams{config.nu, config.eta, config.gamma, config.n_bins};
}

}  // namespace

void RunConfig::validate() const {
    if (n_bins < 1 || n_bins > kMaxBins)
        throw validation_error("config: n-bins must be in [1, 32]");
    if (!(eta > 0.0) || eta > 1.0) throw validation_error("config: eta must be in (0, 1]");
    if (!(nu >= 0.0)) throw validation_error("config: nu must be >= 0");
    if (!std::isfinite(gamma)) throw validation_error("config: gamma must be finite");
    for (double nbar : nbars)
        if (!(nbar >= 0.0)) throw validation_error("config: nbar must be >= 0");
    if (shots < 1) throw validation_error("config: shots must be >= 1");
    if (n_max < 0) throw validation_error("config: n-max must be >= 0");
    if (bootstrap_resamples < 2) throw validation_error("config: bootstrap must be >= 2");
    for (double e : eta_to)
        if (!(e > 0.0) || e > 1.0) throw validation_error("config: eta-to must be in (0, 1]");
    if (format != "json" && format != "csv")
        throw validation_error("config: format must be json or csv");
}

json run_config_to_json(const RunConfig& config) {
    json j;
    j["n_bins"] = config.n_bins;
    j["eta"] = num(config.eta);
    j["nu"] = num(config.nu);
    j["gamma"] = num(config.gamma);
    json nbars = json::array();
    for (double v : config.nbars) nbars.push_back(num(v));
    j["nbars"] = nbars;
    j["shots"] = config.shots;
    j["seed"] = config.seed;
    j["n_max"] = config.n_max;
    j["out_dir"] = config.out_dir;
    j["clamp"] = config.clamp;
    j["bootstrap_resamples"] = config.bootstrap_resamples;
    j["fit_order"] = to_string(config.fit_order);
    json stages = json::array();
    for (double v : config.eta_to) stages.push_back(num(v));
    j["eta_to"] = stages;
    j["format"] = config.format;
    j["inputs"] = config.inputs;
    j["response_fit_path"] = config.response_fit_path;
    j["eta_explicit"] = config.eta_explicit ? num(*config.eta_explicit) : json(nullptr);
    j["analytic"] = config.analytic;
    return j;
}

std::uint64_t point_seed(std::uint64_t seed, int n_bins, int point_index) {
    return derive_seed(seed, (static_cast<std::uint64_t>(n_bins) << 32) |
                                 static_cast<std::uint64_t>(point_index));
}

std::vector<double> default_nbar_grid(int points) {
    if (points < 2) throw validation_error("default_nbar_grid: need at least 2 points");
    const double lo = 0.027, hi = 0.85;
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    return grid;
}

std::vector<fs::path> cmd_simulate(const RunConfig& config) {
    config.validate();
    if (config.nbars.empty()) throw validation_error("simulate: need at least one --nbar");
    ensure_dir(config.out_dir);
    const ResponseParams params = response_params(config);
    std::vector<fs::path> paths;
    for (std::size_t i = 0; i < config.nbars.size(); ++i) {
        const std::uint64_t seed = point_seed(config.seed, config.n_bins, static_cast<int>(i));
        char name[64];
        std::snprintf(name, sizeof(name), "shots_N%d_p%02zu.csv", config.n_bins, i);
        const fs::path path = fs::path(config.out_dir) / name;
        ShotFile file;
        file.header.version = kShotFormatVersion;
        file.header.n_bins = config.n_bins;
        file.header.seed = seed;
        file.header.nbar = config.nbars[i];
        file.records = sample_shots(params, config.nbars[i], config.shots, seed);
        write_shots(path, file);
        paths.push_back(path);
    }
    return paths;
}

std::filesystem::path cmd_tomography(const RunConfig& config) {
    config.validate();
    if (config.inputs.empty()) throw validation_error("tomography: need input shot files");
    if (!config.nbars.empty() && config.nbars.size() != config.inputs.size())
        throw validation_error("tomography: --nbar overrides must match the input file count");
    ensure_dir(config.out_dir);

    std::vector<CalibrationPoint> points;
    int n_bins = 0;
    std::size_t brightest = 0;
    Aggregates brightest_agg;
    for (std::size_t i = 0; i < config.inputs.size(); ++i) {
        LoadedShots shots = load_shots(config.inputs[i]);
        if (i == 0)
            n_bins = shots.file.header.n_bins;
        else if (shots.file.header.n_bins != n_bins)
            throw validation_error("tomography: input files disagree on bin count");
        const double nbar = !config.nbars.empty() ? config.nbars[i] : shots.nbar;
        if (!std::isfinite(nbar))
            throw validation_error(config.inputs[i] + ": no nbar in header; pass --nbar overrides");
        points.push_back(calibration_point(shots.agg, nbar));
        if (nbar >= points[brightest].nbar) {
            brightest = i;
            brightest_agg = std::move(shots.agg);
        }
    }

    const FitOrder other = config.fit_order == FitOrder::linear ? FitOrder::quadratic
                                                                : FitOrder::linear;
    ReportFile report;
    report.kind = "tomography";
    report.config = run_config_to_json(config);
    report.fit = fit_response(points, n_bins, config.fit_order);
    report.fit_alternate = fit_response(points, n_bins, other);
    report.warnings = report.fit->warnings;

    report.bins = bin_means(brightest_agg.bin_marginals, brightest_agg.shots);
    report.covariances =
        bin_covariances(brightest_agg.bin_marginals, brightest_agg.pair_joint, brightest_agg.shots);
    report.uniformity = uniformity_test(*report.bins);
    report.scalars["brightest_nbar"] = points[brightest].nbar;

    const fs::path report_path = fs::path(config.out_dir) / "tomography.json";
    write_report(report_path, report);

    if (config.format == "csv") {
        const ResponseFit& fit = *report.fit;
        std::vector<std::vector<double>> rows;
        for (const auto& p : points) {
            const GammaPoint g = gamma_point(p);
            const double x = g.nbar / n_bins;
            const double model = fit.nu + fit.eta * x + fit.gamma * x * x;
            rows.push_back({g.nbar, g.gamma, g.sigma, model});
        }
        std::sort(rows.begin(), rows.end());
        const std::string fit_cols[] = {"nbar", "gamma", "sigma", "fit"};
        write_plot_csv(fs::path(config.out_dir) / "response_fit.csv", fit_cols, rows);

        rows.clear();
        for (std::size_t j = 0; j < report.bins->mean.size(); ++j)
            rows.push_back({static_cast<double>(j + 1), report.bins->mean[j], report.bins->sigma[j]});
        const std::string mean_cols[] = {"bin", "mean_clicks", "sigma"};
        write_plot_csv(fs::path(config.out_dir) / "bin_means.csv", mean_cols, rows);

        rows.clear();
        const auto& cov = *report.covariances;
        for (int j = 0; j < cov.n_bins; ++j)
            for (int jp = 0; jp < cov.n_bins; ++jp)
                rows.push_back({static_cast<double>(j + 1), static_cast<double>(jp + 1),
                                cov.cov[static_cast<std::size_t>(j) * cov.n_bins + jp],
                                cov.sigma[static_cast<std::size_t>(j) * cov.n_bins + jp]});
        const std::string cov_cols[] = {"bin_j", "bin_jp", "covariance", "sigma"};
        write_plot_csv(fs::path(config.out_dir) / "bin_covariances.csv", cov_cols, rows);
    }
    return report_path;
}

std::filesystem::path cmd_qparams(const RunConfig& config) {
    config.validate();
    ensure_dir(config.out_dir);
    ReportFile report;
    report.kind = "qparams";
    report.config = run_config_to_json(config);
    const fs::path report_path = fs::path(config.out_dir) / "qparams.json";

    if (config.analytic) {
        const std::vector<double> grid =
            config.nbars.empty() ? default_nbar_grid(16) : config.nbars;
        const ResponseParams params = response_params(config);
        std::vector<std::vector<double>> rows;
        for (double nbar : grid) {
            if (nbar <= 0.0) throw validation_error("qparams --analytic: nbar must be > 0");
            const int n_max = config.n_max > 0 ? config.n_max : default_n_max(nbar, config.n_bins);
            const PhotonDistribution photon = poisson_distribution(nbar, n_max);
            const ClickDistribution clicks = coherent_click_distribution(params, nbar);
            const double qm_photon = q_mandel(photon);
            const double qb_photon = q_binomial(photon, config.n_bins);
            const double qm_click = q_mandel(clicks);
            const double qb_click = q_binomial(clicks);
            rows.push_back({nbar, qm_photon, qb_photon, qm_click, qb_click});
            const std::string suffix = "@nbar=" + format_double(nbar);
            report.q_values.push_back({"qm_photon" + suffix, QKind::mandel, analytic_q(qm_photon)});
            report.q_values.push_back(
                {"qb_photon" + suffix, QKind::binomial, analytic_q(qb_photon)});
            report.q_values.push_back({"qm_click" + suffix, QKind::mandel, analytic_q(qm_click)});
            report.q_values.push_back({"qb_click" + suffix, QKind::binomial, analytic_q(qb_click)});
        }
        write_report(report_path, report);
        if (config.format == "csv") {
            const std::string cols[] = {"nbar", "qm_photon", "qb_photon", "qm_click", "qb_click"};
            write_plot_csv(fs::path(config.out_dir) / "qparams_curves.csv", cols, rows);
        }
        return report_path;
    }

    if (config.inputs.size() != 1)
        throw validation_error("qparams: need exactly one input (shot file or report)");
    const fs::path input = config.inputs[0];
    const QUncertaintyOptions opts{config.bootstrap_resamples, config.seed, true, true};

    if (input.extension() == ".json") {
        const ReportFile stored = read_report(input);
        for (const auto& entry : stored.clicks) {
            const ClickDistribution& d = entry.dist;
            if (d.shot_count() >= 2) {
                std::vector<std::uint64_t> counts(d.size());
                for (std::size_t k = 0; k < d.size(); ++k)
                    counts[k] = static_cast<std::uint64_t>(
                        std::llround(d[k] * static_cast<double>(d.shot_count())));
                report.q_values.push_back(
                    {"qm_clicks:" + entry.label, QKind::mandel,
                     q_uncertainty(counts, QKind::mandel, opts)});
                report.q_values.push_back(
                    {"qb_clicks:" + entry.label, QKind::binomial,
                     q_uncertainty(counts, QKind::binomial, opts)});
            } else {
                report.q_values.push_back(
                    {"qm_clicks:" + entry.label, QKind::mandel, analytic_q(q_mandel(d))});
                report.q_values.push_back(
                    {"qb_clicks:" + entry.label, QKind::binomial, analytic_q(q_binomial(d))});
            }
        }
        for (const auto& entry : stored.distributions) {
            report.q_values.push_back(
                {"qm_photon:" + entry.label, QKind::mandel, analytic_q(q_mandel(entry.dist))});
        }
        if (report.q_values.empty())
            throw validation_error(input.string() + ": report holds no distributions");
    } else {
        LoadedShots shots = load_shots(input);
        ClickEntry entry{"measured clicks", click_distribution_from(shots.agg), std::nullopt,
                         std::nullopt};
        entry.q_mandel = q_uncertainty(shots.agg.click_counts, QKind::mandel, opts);
        entry.q_binomial = q_uncertainty(shots.agg.click_counts, QKind::binomial, opts);
        report.q_values.push_back({"qm_clicks", QKind::mandel, *entry.q_mandel});
        report.q_values.push_back({"qb_clicks", QKind::binomial, *entry.q_binomial});
        report.clicks.push_back(std::move(entry));
    }
    write_report(report_path, report);
    return report_path;
}

namespace {

// Shared by cmd_invert / cmd_deconvolve / the paper pipeline.
fs::path write_inversion_report(const RunConfig& config, const ClickDistribution& clicks,
                                double eta_used, std::span<const double> stages, double nbar,
                                const std::string& report_name, const std::string& csv_name) {
    const BootstrapOptions bootstrap{config.bootstrap_resamples, config.seed, true};
    DeconvolutionAnalysis analysis =
        deconvolution_analysis(clicks, eta_used, stages, bootstrap, DeconvolveOptions{});

    ReportFile report;
    report.kind = stages.empty() ? "reconstruction" : "deconvolution";
    report.config = run_config_to_json(config);
    report.warnings = analysis.warnings;
    report.scalars["eta_used"] = eta_used;
    if (std::isfinite(nbar)) report.scalars["nbar"] = nbar;

    ClickEntry click_entry{"measured clicks", clicks, std::nullopt, std::nullopt};
    if (clicks.shot_count() >= 2) {
        const QUncertaintyOptions qopts{config.bootstrap_resamples, config.seed, true, true};
        std::vector<std::uint64_t> counts(clicks.size());
        for (std::size_t k = 0; k < clicks.size(); ++k)
            counts[k] = static_cast<std::uint64_t>(
                std::llround(clicks[k] * static_cast<double>(clicks.shot_count())));
        click_entry.q_mandel = q_uncertainty(counts, QKind::mandel, qopts);
        click_entry.q_binomial = q_uncertainty(counts, QKind::binomial, qopts);
    } else {
        click_entry.q_mandel = analytic_q(q_mandel(clicks));
        click_entry.q_binomial = analytic_q(q_binomial(clicks));
    }
    report.clicks.push_back(click_entry);

    const auto& inv = analysis.inversion;
    DistributionEntry pseudo_entry{"pseudo-photon @eta=" + format_double(eta_used),
                                   inv.output,
                                   inv.output_sigma,
                                   inv.q_mandel,
                                   negativity_report(inv.output, inv.output_sigma),
                                   std::nullopt};
    // Binomial parameter of the reconstructed vector, for the statistics flip.
    report.q_values.push_back({"qm_pseudo", QKind::mandel, inv.q_mandel});
    try {
        auto m = moments(inv.output);
        report.q_values.push_back(
            {"qb_pseudo", QKind::binomial,
             analytic_q(q_binomial(m.mean, m.variance, clicks.n_bins()))});
    } catch (const validation_error&) {
        QEstimate undefined = analytic_q(kNan);
        undefined.flag = "undefined_parameter";
        report.q_values.push_back({"qb_pseudo", QKind::binomial, undefined});
    }
    report.distributions.push_back(pseudo_entry);

    for (const auto& stage : analysis.stages) {
        DistributionEntry entry{"deconvolved @eta=" + format_double(stage.eta_to),
                                stage.dist,
                                stage.sigma,
                                stage.q_mandel,
                                stage.negativity,
                                std::isfinite(stage.negativity_sigma)
                                    ? std::optional<double>(stage.negativity_sigma)
                                    : std::nullopt};
        report.distributions.push_back(std::move(entry));
    }

    std::optional<PhotonDistribution> ideal;
    if (std::isfinite(nbar) && !analysis.stages.empty()) {
        Warnings tail_warnings;
        ideal = poisson_distribution(nbar, clicks.n_bins(), &tail_warnings);
        const auto& final_stage = analysis.stages.back();
        report.scalars["total_variation_vs_ideal"] =
            total_variation(final_stage.dist, *ideal);
    }

    write_report(fs::path(config.out_dir) / report_name, report);

    if (config.format == "csv") {
        std::vector<std::string> cols = {"index", "clicks", "clicks_sigma", "pseudo",
                                         "pseudo_sigma"};
        for (const auto& stage : analysis.stages) {
            cols.push_back("deconv_eta" + format_double(stage.eta_to));
            cols.push_back("deconv_eta" + format_double(stage.eta_to) + "_sigma");
        }
        if (ideal) cols.push_back("ideal_poisson");

        auto plotted = [&](const PhotonDistribution& d) {
            return config.clamp ? clamp_nonnegative(d) : d;
        };
        const PhotonDistribution pseudo_plot = plotted(inv.output);
        std::vector<PhotonDistribution> stage_plots;
        for (const auto& stage : analysis.stages) stage_plots.push_back(plotted(stage.dist));

        const std::vector<double> csig = click_sigma(clicks);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < clicks.size(); ++i) {
            std::vector<double> row = {static_cast<double>(i), clicks[i], csig[i], pseudo_plot[i],
                                       inv.output_sigma.empty() ? kNan : inv.output_sigma[i]};
            for (std::size_t s = 0; s < analysis.stages.size(); ++s) {
                row.push_back(stage_plots[s][i]);
                row.push_back(analysis.stages[s].sigma.empty() ? kNan
                                                               : analysis.stages[s].sigma[i]);
            }
            if (ideal) row.push_back((*ideal)[i]);
            rows.push_back(std::move(row));
        }
        write_plot_csv(fs::path(config.out_dir) / csv_name, cols, rows);
    }
    return fs::path(config.out_dir) / report_name;
}

double resolve_eta(const RunConfig& config) {
    if (config.eta_explicit) return *config.eta_explicit;
    if (!config.response_fit_path.empty()) {
        const ReportFile fit_report = read_report(config.response_fit_path);
        if (!fit_report.fit)
            throw validation_error(config.response_fit_path + ": no response fit in report");
        const double eta = fit_report.fit->eta;
        if (!(eta > 0.0) || eta > 1.0)
            throw validation_error(config.response_fit_path +
                                   ": fitted efficiency outside (0, 1]");
        return eta;
    }
    throw validation_error("reconstruction needs --eta or --response-fit");
}

}  // namespace

std::filesystem::path cmd_invert(const RunConfig& config) {
    config.validate();
    if (config.inputs.size() != 1)
        throw validation_error("invert: need exactly one input shot file");
    ensure_dir(config.out_dir);
    const double eta_used = resolve_eta(config);
    LoadedShots shots = load_shots(config.inputs[0]);
    const ClickDistribution clicks = click_distribution_from(shots.agg);
    return write_inversion_report(config, clicks, eta_used, {}, shots.nbar,
                                  "reconstruction.json", "reconstruction.csv");
}

std::filesystem::path cmd_deconvolve(const RunConfig& config) {
    config.validate();
    if (config.inputs.size() != 1)
        throw validation_error("deconvolve: need exactly one reconstruction report");
    if (config.eta_to.empty()) throw validation_error("deconvolve: need at least one --eta-to");
    ensure_dir(config.out_dir);

    const ReportFile stored = read_report(config.inputs[0]);
    if (stored.clicks.empty())
        throw validation_error(config.inputs[0] + ": report holds no click distribution");
    const ClickDistribution& clicks = stored.clicks.front().dist;

    double eta_used;
    if (config.eta_explicit) {
        eta_used = *config.eta_explicit;
    } else if (stored.scalars.count("eta_used")) {
        eta_used = stored.scalars.at("eta_used");
    } else if (!stored.distributions.empty()) {
        eta_used = stored.distributions.front().dist.eta_tag();
    } else {
        throw validation_error(config.inputs[0] + ": cannot determine detector efficiency");
    }

    std::vector<double> stages(config.eta_to);
    std::sort(stages.begin(), stages.end());
    double nbar = kNan;
    if (auto it = stored.scalars.find("nbar"); it != stored.scalars.end()) nbar = it->second;
    return write_inversion_report(config, clicks, eta_used, stages, nbar, "deconvolution.json",
                                  "deconvolution.csv");
}

PaperPipelineOutputs cmd_paper_pipeline(const RunConfig& config) {
    config.validate();
    ensure_dir(config.out_dir);

    struct Setup {
        int n_bins;
        double eta;
        int points;
    };
    const Setup setups[] = {{4, 0.608, 16}, {8, 0.605, 6}};

    PaperPipelineOutputs outputs;
    ReportFile summary;
    summary.kind = "paper_pipeline";
    summary.config = run_config_to_json(config);

    for (const Setup& setup : setups) {
        const std::string tag = "N" + std::to_string(setup.n_bins);
        const fs::path base = fs::path(config.out_dir) / tag;

        RunConfig sim = config;
        sim.n_bins = setup.n_bins;
        sim.eta = setup.eta;
        sim.nu = 0.0;
        sim.gamma = 0.0;
        sim.nbars = default_nbar_grid(setup.points);
        sim.out_dir = (base / "shots").string();
        const std::vector<fs::path> shot_files = cmd_simulate(sim);
        for (const auto& p : shot_files) outputs.files.push_back(p);

        RunConfig tomo = sim;
        tomo.out_dir = base.string();
        tomo.inputs.clear();
        for (const auto& p : shot_files) tomo.inputs.push_back(p.string());
        tomo.nbars.clear();
        const fs::path tomo_report = cmd_tomography(tomo);
        outputs.files.push_back(tomo_report);
        if (config.format == "csv") {
            outputs.files.push_back(base / "response_fit.csv");
            outputs.files.push_back(base / "bin_means.csv");
            outputs.files.push_back(base / "bin_covariances.csv");
        }

        RunConfig curves = sim;
        curves.out_dir = base.string();
        curves.analytic = true;
        curves.eta = 1.0;  // theory curves for the ideal device
        curves.nu = 0.0;
        curves.gamma = 0.0;
        const fs::path curves_report = cmd_qparams(curves);
        outputs.files.push_back(curves_report);
        if (config.format == "csv") outputs.files.push_back(base / "qparams_curves.csv");

        // Reconstruction on the brightest calibration point, at the fitted
        // efficiency unless the caller pinned one.
        RunConfig invert = config;
        invert.n_bins = setup.n_bins;
        invert.out_dir = base.string();
        invert.inputs = {shot_files.back().string()};
        invert.response_fit_path = tomo_report.string();
        const fs::path invert_report = cmd_invert(invert);
        outputs.files.push_back(invert_report);
        if (config.format == "csv") outputs.files.push_back(base / "reconstruction.csv");

        RunConfig deconv = invert;
        deconv.inputs = {invert_report.string()};
        deconv.eta_to = config.eta_to;
        const fs::path deconv_report = cmd_deconvolve(deconv);
        outputs.files.push_back(deconv_report);
        if (config.format == "csv") outputs.files.push_back(base / "deconvolution.csv");

        const ReportFile tomo_loaded = read_report(tomo_report);
        const ReportFile deconv_loaded = read_report(deconv_report);
        summary.scalars["eta_fit_" + tag] = tomo_loaded.fit->eta;
        summary.scalars["eta_fit_sigma_" + tag] = tomo_loaded.fit->std_errors[1];
        summary.scalars["r_squared_" + tag] = tomo_loaded.fit->r_squared;
        summary.scalars["eta_used_" + tag] = deconv_loaded.scalars.at("eta_used");
        if (deconv_loaded.scalars.count("total_variation_vs_ideal"))
            summary.scalars["total_variation_vs_ideal_" + tag] =
                deconv_loaded.scalars.at("total_variation_vs_ideal");
        for (const auto& q : deconv_loaded.q_values)
            if (q.label == "qm_pseudo")
                summary.scalars["qm_pseudo_" + tag] = q.estimate.q;
    }

    summary.schema_version = kReportSchemaVersion;
    const fs::path summary_path = fs::path(config.out_dir) / "pipeline_summary.json";
    write_report(summary_path, summary);
    outputs.summary = summary_path;
    outputs.files.push_back(summary_path);
    std::sort(outputs.files.begin(), outputs.files.end());
    return outputs;
}

}  // namespace clickpnr
