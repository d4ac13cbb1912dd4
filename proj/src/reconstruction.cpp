#include "clickpnr/reconstruction.hpp"

#include "clickpnr/combinatorics.hpp"
#include "clickpnr/rng.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace clickpnr {

namespace {

using BigFloat = boost::multiprecision::cpp_bin_float_50;

double round_once(const BigRational& r) {
    return static_cast<double>(BigFloat(numerator(r)) / BigFloat(denominator(r)));
}

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kInversionPurpose = 0x1453'C0DEULL;

ChannelMatrix build_pseudo_inverse(int n_bins) {
    const auto& table = shared_table(n_bins);
    ChannelMatrix m(ChannelRole::pseudo_inverse_Cplus, n_bins + 1, n_bins + 1,
                    "pseudo-photon number m", "total clicks k");
    m.set_n_bins(n_bins);
    BigInt n_pow = 1;  // N^m
    std::vector<BigInt> k_fac(n_bins + 1);
    k_fac[0] = 1;
    for (int k = 1; k <= n_bins; ++k) k_fac[k] = k_fac[k - 1] * k;
    for (int row = 0; row <= n_bins; ++row) {
        for (int k = 0; k <= n_bins; ++k) {
            const BigInt num = n_pow * table.stirling_first_signed(k, row);
            if (num != 0)
                m.at(row, k) = round_once(BigRational(num, table.binomial(n_bins, k) * k_fac[k]));
        }
        n_pow *= n_bins;
    }
    return m;
}

}  // namespace

const ChannelMatrix& pseudo_inverse_matrix(int n_bins) {
    if (n_bins < 1) throw validation_error("pseudo_inverse_matrix: need at least one bin");
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<const ChannelMatrix>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n_bins);
    if (it == cache.end())
        it = cache.emplace(n_bins, std::make_unique<const ChannelMatrix>(build_pseudo_inverse(n_bins)))
                 .first;
    return *it->second;
}

NegativityReport negativity_report(const PhotonDistribution& p, std::span<const double> sigma) {
    if (!sigma.empty() && sigma.size() != p.size())
        throw validation_error("negativity_report: sigma length mismatch");
    NegativityReport report;
    double worst = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
        if (p[n] < 0.0) {
            report.neg_mass += p[n];
            if (p[n] < worst) {
                worst = p[n];
                report.worst_index = static_cast<int>(n);
            }
        }
    }
    if (report.worst_index && !sigma.empty()) {
        const double s = sigma[static_cast<std::size_t>(*report.worst_index)];
        if (s > 0.0) report.significance = std::abs(worst) / s;
    }
    return report;
}

namespace {

QEstimate summarize_bootstrap(double point, std::span<const double> samples) {
    QEstimate est;
    est.q = point;
    double sum = 0.0;
    int used = 0;
    for (double v : samples)
        if (std::isfinite(v)) {
            sum += v;
            ++used;
        }
    if (used < 2) {
        est.sigma = kNan;
        est.degenerate = true;
        est.flag = "degenerate_resamples";
        return est;
    }
    const double mean = sum / used;
    double ss = 0.0;
    for (double v : samples)
        if (std::isfinite(v)) ss += (v - mean) * (v - mean);
    est.sigma = std::sqrt(ss / (used - 1));
    est.resamples_used = used;
    return est;
}

double sigma_of(std::span<const double> samples) {
    double sum = 0.0;
    int used = 0;
    for (double v : samples)
        if (std::isfinite(v)) {
            sum += v;
            ++used;
        }
    if (used < 2) return kNan;
    const double mean = sum / used;
    double ss = 0.0;
    for (double v : samples)
        if (std::isfinite(v)) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (used - 1));
}

double safe_q_mandel(std::span<const double> values) {
    const auto m = moments(values);
    if (!(m.mean > 0.0)) return kNan;
    return m.variance / m.mean - 1.0;
}

double neg_mass_of(std::span<const double> values) {
    double neg = 0.0;
    for (double v : values)
        if (v < 0.0) neg += v;
    return neg;
}

}  // namespace

ReconstructionReport pseudo_invert(const ClickDistribution& clicks, double detector_eta,
                                   const BootstrapOptions& options) {
    DeconvolutionAnalysis analysis =
        deconvolution_analysis(clicks, detector_eta, {}, options, DeconvolveOptions{});
    return std::move(analysis.inversion);
}

PhotonDistribution deconvolve_loss(const PhotonDistribution& p, double eta_to, Warnings* warnings,
                                   const DeconvolveOptions& options) {
    const double eta_from = p.eta_tag();
    if (!(eta_to > 0.0) || eta_to > 1.0)
        throw validation_error("deconvolve_loss: eta_to must be in (0, 1]");
    if (eta_to < eta_from)
        throw validation_error("deconvolve_loss: eta_to below the distribution's eta tag; "
                               "this operation cannot add loss");
    const double ratio = eta_from / eta_to;
    if (ratio < options.condition_warning_ratio) {
        std::ostringstream os;
        os << "deconvolve_loss: efficiency ratio " << ratio << " below "
           << options.condition_warning_ratio
           << "; inverse loss entries grow without bound and amplify noise";
        warn(warnings, "ill_conditioned_deconvolution", os.str());
    }
    const int dim = p.max_index();
    const ChannelMatrix inverse = loss_matrix(1.0 / ratio, dim);
    std::vector<double> out = inverse.apply(p.values());
    return PhotonDistribution(std::move(out), eta_to, DistributionKind::deconvolved, p.tail_mass());
}

PhotonDistribution clamp_nonnegative(const PhotonDistribution& p) {
    std::vector<double> values(p.values().begin(), p.values().end());
    double sum = 0.0;
    for (double& v : values) {
        if (v < 0.0) v = 0.0;
        sum += v;
    }
    if (sum <= 0.0) throw validation_error("clamp_nonnegative: no positive mass");
    for (double& v : values) v /= sum;
    return PhotonDistribution(std::move(values), p.eta_tag(), p.kind(), 0.0);
}

DeconvolutionAnalysis deconvolution_analysis(const ClickDistribution& clicks, double detector_eta,
                                             std::span<const double> eta_stages,
                                             const BootstrapOptions& bootstrap,
                                             const DeconvolveOptions& options) {
    if (!(detector_eta > 0.0) || detector_eta > 1.0)
        throw validation_error("deconvolution_analysis: detector eta must be in (0, 1]");
    for (double eta_to : eta_stages)
        if (!(eta_to >= detector_eta) || eta_to > 1.0)
            throw validation_error("deconvolution_analysis: stages must satisfy "
                                   "detector_eta <= eta_to <= 1");

    const int n_bins = clicks.n_bins();
    const ChannelMatrix& inverse = pseudo_inverse_matrix(n_bins);
    const std::size_t n_stages = eta_stages.size();

    Warnings warnings;
    std::vector<ChannelMatrix> stage_maps;
    stage_maps.reserve(n_stages);
    for (double eta_to : eta_stages) {
        const double ratio = detector_eta / eta_to;
        if (ratio < options.condition_warning_ratio) {
            std::ostringstream os;
            os << "deconvolution to eta " << eta_to << ": efficiency ratio " << ratio << " below "
               << options.condition_warning_ratio
               << "; inverse loss entries grow without bound and amplify noise";
            warn(&warnings, "ill_conditioned_deconvolution", os.str());
        }
        stage_maps.push_back(loss_matrix(1.0 / ratio, n_bins));
    }

    const std::vector<double> pseudo_point = inverse.apply(clicks.values());
    std::vector<std::vector<double>> stage_points;
    for (const auto& map : stage_maps) stage_points.push_back(map.apply(pseudo_point));

    // Bootstrap: resample the click histogram, push every resample through the
    // inversion and all stages. Slot-per-resample storage keeps the reduction
    // identical for any thread count.
    const std::uint64_t shots = clicks.shot_count();
    const bool have_shots = shots >= 2;
    const int resamples = have_shots ? bootstrap.resamples : 0;
    const std::size_t dim = pseudo_point.size();

    std::vector<double> qm_samples(resamples, kNan);
    std::vector<std::vector<double>> stage_qm(n_stages, std::vector<double>(resamples, kNan));
    std::vector<std::vector<double>> stage_neg(n_stages, std::vector<double>(resamples, kNan));
    // entry_samples[s][b*dim + i]
    std::vector<double> pseudo_entries(static_cast<std::size_t>(resamples) * dim, kNan);
    std::vector<std::vector<double>> stage_entries(
        n_stages, std::vector<double>(static_cast<std::size_t>(resamples) * dim, kNan));

    if (have_shots) {
        const std::uint64_t seed = derive_seed(bootstrap.seed, kInversionPurpose);
        const auto probs = clicks.values();
        auto one_resample = [&](int b) {
            CounterRng rng(seed, static_cast<std::uint64_t>(b));
            const auto counts = detail::multinomial_draw(probs, shots, rng);
            std::vector<double> freq(counts.size());
            for (std::size_t i = 0; i < counts.size(); ++i)
                freq[i] = static_cast<double>(counts[i]) / static_cast<double>(shots);
            const std::vector<double> pseudo = inverse.apply(freq);
            qm_samples[b] = safe_q_mandel(pseudo);
            for (std::size_t i = 0; i < dim; ++i)
                pseudo_entries[static_cast<std::size_t>(b) * dim + i] = pseudo[i];
            for (std::size_t s = 0; s < n_stages; ++s) {
                const std::vector<double> staged = stage_maps[s].apply(pseudo);
                stage_qm[s][b] = safe_q_mandel(staged);
                stage_neg[s][b] = neg_mass_of(staged);
                for (std::size_t i = 0; i < dim; ++i)
                    stage_entries[s][static_cast<std::size_t>(b) * dim + i] = staged[i];
            }
        };
#ifdef _OPENMP
        if (bootstrap.parallel) {
#pragma omp parallel for schedule(static)
            for (int b = 0; b < resamples; ++b) one_resample(b);
        } else
#endif
        {
            for (int b = 0; b < resamples; ++b) one_resample(b);
        }
    }

    auto entry_sigmas = [&](const std::vector<double>& entries) {
        std::vector<double> sigmas;
        if (!have_shots) return sigmas;
        sigmas.resize(dim);
        std::vector<double> column(resamples);
        for (std::size_t i = 0; i < dim; ++i) {
            for (int b = 0; b < resamples; ++b)
                column[b] = entries[static_cast<std::size_t>(b) * dim + i];
            sigmas[i] = sigma_of(column);
        }
        return sigmas;
    };

    DeconvolutionAnalysis analysis{
        ReconstructionReport{clicks,
                             PhotonDistribution(pseudo_point, detector_eta,
                                                DistributionKind::pseudo, clicks.tail_mass()),
                             neg_mass_of(pseudo_point),
                             QEstimate{},
                             {},
                             {}},
        {},
        std::move(warnings)};

    if (have_shots) {
        analysis.inversion.q_mandel = summarize_bootstrap(safe_q_mandel(pseudo_point), qm_samples);
        analysis.inversion.output_sigma = entry_sigmas(pseudo_entries);
    } else {
        analysis.inversion.q_mandel.q = safe_q_mandel(pseudo_point);
        analysis.inversion.q_mandel.sigma = kNan;
        analysis.inversion.q_mandel.flag = "analytic_input";
    }

    for (std::size_t s = 0; s < n_stages; ++s) {
        DeconvolutionStage stage{
            eta_stages[s],
            PhotonDistribution(stage_points[s], eta_stages[s], DistributionKind::deconvolved,
                               clicks.tail_mass()),
            entry_sigmas(stage_entries[s]),
            QEstimate{},
            NegativityReport{},
            kNan};
        if (have_shots) {
            stage.q_mandel = summarize_bootstrap(safe_q_mandel(stage_points[s]), stage_qm[s]);
            stage.negativity_sigma = sigma_of(stage_neg[s]);
        } else {
            stage.q_mandel.q = safe_q_mandel(stage_points[s]);
            stage.q_mandel.sigma = kNan;
            stage.q_mandel.flag = "analytic_input";
        }
        stage.negativity = negativity_report(stage.dist, stage.sigma);
        analysis.stages.push_back(std::move(stage));
    }
    return analysis;
}

}  // namespace clickpnr
