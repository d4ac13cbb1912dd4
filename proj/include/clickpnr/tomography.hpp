#ifndef CLICKPNR_TOMOGRAPHY_HPP
#define CLICKPNR_TOMOGRAPHY_HPP

#include "clickpnr/errors.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace clickpnr {

// One coherent-state calibration measurement: independently known mean photon
// number and the click histogram recorded at it. Per-bin marginals and pairwise
// joint counts are optional (needed only for the bin diagnostics).
struct CalibrationPoint {
    double nbar = 0.0;
    std::vector<std::uint64_t> click_counts;      // k = 0..N
    std::uint64_t shots = 0;
    std::vector<std::uint64_t> bin_marginals;     // length N, clicks per bin
    std::vector<std::uint64_t> pair_joint;        // N*N row-major, both-clicked counts
};

// Response exponent from the mean click number: Gamma = -ln(1 - kbar/N).
// kbar >= N means the detector is saturated and the transform is undefined.
double gamma_from_mean_clicks(double kbar, int n_bins);

// A calibration point transformed to fit space: (nbar, Gamma, sigma_Gamma) with
// sigma propagated from the multinomial uncertainty of kbar.
struct GammaPoint {
    double nbar = 0.0;
    double gamma = 0.0;
    double sigma = 0.0;
};

GammaPoint gamma_point(const CalibrationPoint& point);

enum class FitOrder { linear, quadratic };

const char* to_string(FitOrder order);
FitOrder fit_order_from_string(const std::string& s);

// Least-squares fit of Gamma(nbar) = nu + eta*nbar/N + gamma*(nbar/N)^2.
// The transform to Gamma makes the model linear in its parameters, so the
// normal equations solve it in closed form. Weighted mode uses known inverse
// variances and reports the exact parameter covariance; unweighted mode scales
// the covariance by the residual variance.
struct ResponseFit {
    FitOrder order = FitOrder::quadratic;
    int n_bins = 0;
    int n_points = 0;
    double nu = 0.0;
    double eta = 0.0;
    double gamma = 0.0;                              // fixed 0 in linear mode
    std::array<double, 3> std_errors{};              // absolute 1-sigma (nu, eta, gamma)
    std::array<double, 3> rel_errors{};              // sigma / |value|
    std::array<double, 3> significance{};            // |value| / sigma
    std::array<std::array<double, 3>, 3> covariance{};
    double r_squared = 0.0;
    bool weighted = true;
    Warnings warnings;                               // negative efficiency, negligible parameters
};

ResponseFit fit_response(std::span<const CalibrationPoint> points, int n_bins, FitOrder order,
                         bool weighted = true);
ResponseFit fit_response_gamma(std::span<const GammaPoint> points, int n_bins, FitOrder order,
                               bool weighted = true);

// Per-bin mean clicks with multinomial sigma: constant across bins for a
// uniformly split input.
struct BinMeans {
    std::vector<double> mean;
    std::vector<double> sigma;
    std::uint64_t shots = 0;
};

BinMeans bin_means(std::span<const std::uint64_t> marginals, std::uint64_t shots);

// Pairwise click covariances cov(j,j') = mean(k_j k_j') - mean(k_j) mean(k_j'),
// zero off the diagonal for cross-talk-free bins. sigma per entry via the delta
// method on the multinomial moments.
struct BinCovariances {
    int n_bins = 0;
    std::vector<double> cov;     // N*N row-major
    std::vector<double> sigma;   // N*N row-major
};

BinCovariances bin_covariances(std::span<const std::uint64_t> marginals,
                               std::span<const std::uint64_t> pair_joint, std::uint64_t shots);

// Chi-square test of the bin means against their pooled mean.
struct UniformityTest {
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 0.0;
    bool degenerate = false;     // zero-variance bins
};

UniformityTest uniformity_test(const BinMeans& means);

}  // namespace clickpnr

#endif
