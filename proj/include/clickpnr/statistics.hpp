#ifndef CLICKPNR_STATISTICS_HPP
#define CLICKPNR_STATISTICS_HPP

#include "clickpnr/errors.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clickpnr {

// How a photon-number vector was obtained. Proper distributions must be
// nonnegative; pseudo (inverted from clicks) and deconvolved (loss-removed)
// vectors are quasi-probabilities and may carry negative entries.
enum class DistributionKind { proper, pseudo, deconvolved };

const char* to_string(DistributionKind kind);
DistributionKind distribution_kind_from_string(const std::string& s);

// Probability vector over photon numbers n = 0..n_max. eta_tag records which
// loss level the vector refers to (1 = lossless). tail_mass is the analytic
// truncation remainder declared by a generator; entries plus tail must sum to
// one within 1e-9, and vectors outside tolerance are rejected, not renormalized.
class PhotonDistribution {
  public:
    PhotonDistribution(std::vector<double> values, double eta_tag,
                       DistributionKind kind = DistributionKind::proper, double tail_mass = 0.0);

    std::span<const double> values() const { return values_; }
    double operator[](std::size_t n) const { return values_[n]; }
    std::size_t size() const { return values_.size(); }
    int max_index() const { return static_cast<int>(values_.size()) - 1; }
    double eta_tag() const { return eta_tag_; }
    DistributionKind kind() const { return kind_; }
    double tail_mass() const { return tail_mass_; }

    static constexpr double kNormalizationTolerance = 1e-9;

  private:
    std::vector<double> values_;
    double eta_tag_;
    DistributionKind kind_;
    double tail_mass_;
};

// Probability vector over total clicks k = 0..N of an N-bin detector.
// shot_count is the number of shots it was estimated from (0 for analytic).
class ClickDistribution {
  public:
    ClickDistribution(std::vector<double> values, int n_bins, std::uint64_t shot_count = 0,
                      double tail_mass = 0.0);

    std::span<const double> values() const { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }
    std::size_t size() const { return values_.size(); }
    int n_bins() const { return n_bins_; }
    std::uint64_t shot_count() const { return shot_count_; }
    double tail_mass() const { return tail_mass_; }

    static constexpr double kNormalizationTolerance = 1e-9;

  private:
    std::vector<double> values_;
    int n_bins_;
    std::uint64_t shot_count_;
    double tail_mass_;
};

struct Moments {
    double mean;
    double variance;
};

// First two moments of a count distribution: mean = sum x*d[x],
// variance = sum x^2*d[x] - mean^2. Tiny negative variances from rounding
// (>= -1e-12) are clamped to zero.
Moments moments(std::span<const double> values);
Moments moments(const PhotonDistribution& d);
Moments moments(const ClickDistribution& d);

// Mandel parameter variance/mean - 1: zero for Poisson statistics.
double q_mandel(double mean, double variance);
double q_mandel(const PhotonDistribution& d);
double q_mandel(const ClickDistribution& d);

// Binomial parameter N*variance/(mean*(N-mean)) - 1: zero for binomial click
// statistics. Undefined at mean = 0 or mean = N.
double q_binomial(double mean, double variance, int n_bins);
double q_binomial(const ClickDistribution& d);
// Applies the binomial parameter to a photon-number vector, as when probing
// whether photon statistics could pass for N-bin click statistics.
double q_binomial(const PhotonDistribution& d, int n_bins);

enum class QKind { mandel, binomial };

struct QUncertaintyOptions {
    int resamples = 1000;
    std::uint64_t seed = 0;
    bool delta_method = false;  // also report the delta-method cross-check sigma
    bool parallel = true;
};

struct QEstimate {
    double q = 0.0;
    double sigma = 0.0;                    // NaN when degenerate
    std::optional<double> sigma_delta;     // present when delta_method requested
    bool degenerate = false;               // all mass in a single outcome
    std::string flag;                      // explanatory code when degenerate
    int resamples_used = 0;
};

// Q parameter from empirical outcome counts with a nonparametric bootstrap
// sigma. counts[i] is the number of shots with outcome i; for the binomial
// parameter the outcome range defines N = counts.size()-1. Resamples draw from
// independent counter-based substreams of the seed, so the result is identical
// for any thread count.
QEstimate q_uncertainty(std::span<const std::uint64_t> counts, QKind which,
                        const QUncertaintyOptions& options = {});

// Total variation distance 0.5 * sum |a - b|; the shorter vector is zero-padded.
double total_variation(std::span<const double> a, std::span<const double> b);
double total_variation(const PhotonDistribution& a, const PhotonDistribution& b);

class CounterRng;

namespace detail {
// Multinomial draw of `total` shots over outcome probabilities `probs` via a
// chain of binomials, consuming the rng's substream. Outcomes with zero
// probability never receive mass.
std::vector<std::uint64_t> multinomial_draw(std::span<const double> probs, std::uint64_t total,
                                            CounterRng& rng);
}  // namespace detail

}  // namespace clickpnr

#endif
