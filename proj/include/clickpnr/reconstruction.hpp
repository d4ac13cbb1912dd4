#ifndef CLICKPNR_RECONSTRUCTION_HPP
#define CLICKPNR_RECONSTRUCTION_HPP

#include "clickpnr/errors.hpp"
#include "clickpnr/forward_model.hpp"
#include "clickpnr/statistics.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace clickpnr {

// Analytic pseudo-inverse of the conversion matrix, shape (N+1) x (N+1):
// Cplus[m][k] = binom(N,k)^-1 * N^m/k! * s(k,m). Exact on photon statistics
// supported on n <= N. Assembled in exact rationals, rounded once, and cached
// per N (it is applied unchanged to every data set).
const ChannelMatrix& pseudo_inverse_matrix(int n_bins);

struct BootstrapOptions {
    int resamples = 1000;
    std::uint64_t seed = 0;
    bool parallel = true;
};

struct NegativityReport {
    double neg_mass = 0.0;                  // sum of negative entries (<= 0)
    std::optional<int> worst_index;          // most negative entry
    std::optional<double> significance;      // |p| / sigma at worst_index, when sigma known
};

// neg_mass = sum of min(p_n, 0); significance uses per-entry sigmas when given.
NegativityReport negativity_report(const PhotonDistribution& p, std::span<const double> sigma = {});

struct ReconstructionReport {
    ClickDistribution input;
    PhotonDistribution output;           // pseudo-photon statistics, eta_tag = detector eta
    double negativity = 0.0;             // sum of negative entries of output
    QEstimate q_mandel;                  // bootstrap sigma when input has shot counts
    std::vector<double> output_sigma;    // per-entry bootstrap sigma; empty for analytic input
    Warnings warnings;
};

// Applies the pseudo-inverse to measured click statistics. detector_eta tags the
// output with the loss level it still carries. When the input was estimated from
// shots, a multinomial bootstrap provides per-entry sigmas and sigma(Q_M).
ReconstructionReport pseudo_invert(const ClickDistribution& clicks, double detector_eta = 1.0,
                                   const BootstrapOptions& options = {});

struct DeconvolveOptions {
    // Warn when the efficiency ratio eta_from/eta_to falls below this: inverse
    // loss entries grow like (1 - 1/r)^N and amplify noise without bound.
    double condition_warning_ratio = 0.25;
};

// Removes loss from a photon distribution by applying the inverse loss map
// H(eta_to/eta_from) on the same truncated space. Negative entries are
// preserved and reported, never clamped. eta_to < eta_from is refused (this
// operation cannot add loss).
PhotonDistribution deconvolve_loss(const PhotonDistribution& p, double eta_to,
                                   Warnings* warnings = nullptr,
                                   const DeconvolveOptions& options = {});

// Plotting aid: clip negative entries at zero and renormalize.
PhotonDistribution clamp_nonnegative(const PhotonDistribution& p);

struct DeconvolutionStage {
    double eta_to = 1.0;
    PhotonDistribution dist;
    std::vector<double> sigma;           // per-entry bootstrap sigma; empty for analytic input
    QEstimate q_mandel;
    NegativityReport negativity;
    double negativity_sigma = 0.0;       // bootstrap sigma of neg_mass; NaN for analytic input
};

struct DeconvolutionAnalysis {
    ReconstructionReport inversion;
    std::vector<DeconvolutionStage> stages;
    Warnings warnings;
};

// Full inversion + staircase deconvolution with one shared bootstrap: every
// resample is pushed through the pseudo-inverse and every stage, yielding
// per-entry sigmas, sigma(Q_M), and sigma(negativity) per stage.
DeconvolutionAnalysis deconvolution_analysis(const ClickDistribution& clicks, double detector_eta,
                                             std::span<const double> eta_stages,
                                             const BootstrapOptions& bootstrap = {},
                                             const DeconvolveOptions& options = {});

}  // namespace clickpnr

#endif
