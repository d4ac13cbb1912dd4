#ifndef CLICKPNR_FORWARD_MODEL_HPP
#define CLICKPNR_FORWARD_MODEL_HPP

#include "clickpnr/errors.hpp"
#include "clickpnr/statistics.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace clickpnr {

// Detector response Gamma(nbar) = nu + eta*nbar/N + gamma*(nbar/N)^2:
// dark counts, quantum efficiency, and second-order nonlinearity of an
// N-bin multiplexed click detector.
struct ResponseParams {
    double nu = 0.0;
    double eta = 1.0;
    double gamma = 0.0;
    int n_bins = 1;

    void validate() const;
};

double response_gamma(const ResponseParams& params, double nbar);

enum class ChannelRole { conversion_C, pseudo_inverse_Cplus, loss_H };

const char* to_string(ChannelRole role);

// Dense real matrix tagged with its role in the pipeline and the meaning of its
// indices. conversion_C maps photon number (column) to total clicks (row);
// loss_H maps input photon number (column) to attenuated photon number (row).
class ChannelMatrix {
  public:
    ChannelMatrix(ChannelRole role, std::size_t rows, std::size_t cols,
                  std::string row_meaning, std::string col_meaning);

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    ChannelRole role() const { return role_; }
    const std::string& row_meaning() const { return row_meaning_; }
    const std::string& col_meaning() const { return col_meaning_; }

    int n_bins() const { return n_bins_; }
    double eta() const { return eta_; }
    void set_n_bins(int n) { n_bins_ = n; }
    void set_eta(double e) { eta_ = e; }

    std::vector<double> apply(std::span<const double> x) const;

  private:
    ChannelRole role_;
    std::size_t rows_, cols_;
    std::string row_meaning_, col_meaning_;
    int n_bins_ = 0;
    double eta_ = 0.0;
    std::vector<double> data_;
};

// Click statistics of coherent light: a binomial distribution over k with
// per-bin click probability 1 - exp(-Gamma(nbar)).
ClickDistribution coherent_click_distribution(const ResponseParams& params, double nbar);

// Photon-to-click conversion matrix, shape (N+1) x (n_max+1):
// C[k][n] = binom(N,k) * k!/N^n * {n k}. Entries are assembled in exact
// rationals and rounded to double once; every column is a probability vector.
ChannelMatrix conversion_matrix(int n_bins, int n_max);

// Binomial loss map, shape (dim+1) x (dim+1):
// H[n][m] = binom(m,n) * eta^n * (1-eta)^(m-n) for m >= n, else 0.
// eta > 1 yields the (signed) inverse map H(1/eta_loss).
ChannelMatrix loss_matrix(double eta, int dim);

// Push a photon distribution through a loss map (eta tags multiply) or the
// conversion matrix (photons become clicks). Warns when the input carries
// noticeable mass at its truncation edge.
PhotonDistribution apply_loss(const ChannelMatrix& loss, const PhotonDistribution& d,
                              Warnings* warnings = nullptr);
ClickDistribution apply_conversion(const ChannelMatrix& conversion, const PhotonDistribution& d,
                                   Warnings* warnings = nullptr);

// Truncated Poisson photon-number distribution with its tail mass recorded.
PhotonDistribution poisson_distribution(double nbar, int n_max, Warnings* warnings = nullptr);

// Default truncation bound max(4 * nbar * n_bins, 30).
int default_n_max(double nbar, int n_bins);

// One laser trigger's per-bin click pattern, stored as a bit mask (bin j = bit j,
// at most 32 bins).
struct ShotRecord {
    std::uint64_t shot_id = 0;
    std::uint32_t bits = 0;

    bool bit(int j) const { return (bits >> j) & 1u; }
    int click_count() const;
};

constexpr int kMaxBins = 32;

// Monte-Carlo click sampler for coherent input: every bin clicks independently
// with probability 1 - exp(-Gamma(nbar)). Shot i draws from a counter-based
// stream keyed by (seed, i), so the parallel and serial versions produce
// identical records in identical order for any thread count.
std::vector<ShotRecord> sample_shots(const ResponseParams& params, double nbar,
                                     std::uint64_t shots, std::uint64_t seed);
std::vector<ShotRecord> sample_shots_serial(const ResponseParams& params, double nbar,
                                            std::uint64_t shots, std::uint64_t seed);

// Same kernel with an explicit per-bin click probability vector (diagnostics,
// fault injection).
std::vector<ShotRecord> sample_shots_per_bin(std::span<const double> bin_click_probs,
                                             std::uint64_t shots, std::uint64_t seed);
std::vector<ShotRecord> sample_shots_per_bin_serial(std::span<const double> bin_click_probs,
                                                    std::uint64_t shots, std::uint64_t seed);

// General-state mode: draws a photon number from `photon`, splits photons
// uniformly over bins, detects each with probability eta, then adds per-bin dark
// clicks with probability 1 - exp(-nu). Requires gamma == 0 (no per-photon
// mechanism reproduces the quadratic term).
std::vector<ShotRecord> sample_shots_general(const PhotonDistribution& photon,
                                             const ResponseParams& params, std::uint64_t shots,
                                             std::uint64_t seed);

// Mean photons per pulse from laser power, attenuation, wavelength, and
// repetition rate: 10^(-(L0+L)/10) * P0 * lambda / (r * h * c).
double photon_flux(double laser_power_watts, double base_loss_db, double variable_loss_db,
                   double wavelength_m, double repetition_rate_hz);

// CODATA 2018 exact values.
constexpr double kPlanckConstant = 6.62607015e-34;   // J s
constexpr double kSpeedOfLight = 299792458.0;        // m / s

}  // namespace clickpnr

#endif
