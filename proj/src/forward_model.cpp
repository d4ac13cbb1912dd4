#include "clickpnr/forward_model.hpp"

#include "clickpnr/combinatorics.hpp"
#include "clickpnr/rng.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <bit>
#include <cmath>
#include <sstream>

namespace clickpnr {

namespace {

using BigFloat = boost::multiprecision::cpp_bin_float_50;

double round_once(const BigRational& r) {
    return static_cast<double>(BigFloat(numerator(r)) / BigFloat(denominator(r)));
}

// Integer power by repeated multiplication; exact semantics for negative bases.
double ipow(double base, int exponent) {
    double out = 1.0;
    for (int i = 0; i < exponent; ++i) out *= base;
    return out;
}

constexpr std::uint64_t kSamplerPurpose = 0x5A3D'17ECULL;

}  // namespace

void ResponseParams::validate() const {
    if (!(nu >= 0.0)) throw validation_error("response params: dark-count rate nu must be >= 0");
    if (!(eta > 0.0) || eta > 1.0)
        throw validation_error("response params: quantum efficiency eta must be in (0, 1]");
    if (!std::isfinite(gamma)) throw validation_error("response params: gamma must be finite");
    if (n_bins < 1) throw validation_error("response params: need at least one bin");
}

double response_gamma(const ResponseParams& params, double nbar) {
    params.validate();
    if (!(nbar >= 0.0)) throw validation_error("response_gamma: nbar must be >= 0");
    const double x = nbar / params.n_bins;
    const double g = params.nu + params.eta * x + params.gamma * x * x;
    if (g < 0.0) {
        std::ostringstream os;
        os << "response_gamma: negative response " << g << " at nbar " << nbar
           << " (unphysical parameter set)";
        throw validation_error(os.str());
    }
    return g;
}

const char* to_string(ChannelRole role) {
    switch (role) {
        case ChannelRole::conversion_C: return "conversion_C";
        case ChannelRole::pseudo_inverse_Cplus: return "pseudo_inverse_Cplus";
        case ChannelRole::loss_H: return "loss_H";
    }
    return "conversion_C";
}

ChannelMatrix::ChannelMatrix(ChannelRole role, std::size_t rows, std::size_t cols,
                             std::string row_meaning, std::string col_meaning)
    : role_(role),
      rows_(rows),
      cols_(cols),
      row_meaning_(std::move(row_meaning)),
      col_meaning_(std::move(col_meaning)),
      data_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0) throw validation_error("channel matrix: empty shape");
}

std::vector<double> ChannelMatrix::apply(std::span<const double> x) const {
    if (x.size() != cols_)
        throw validation_error("channel matrix: dimension mismatch (" + std::to_string(x.size()) +
                               " vs " + std::to_string(cols_) + " columns)");
    std::vector<double> y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) acc += data_[i * cols_ + j] * x[j];
        y[i] = acc;
    }
    return y;
}

ClickDistribution coherent_click_distribution(const ResponseParams& params, double nbar) {
    const double g = response_gamma(params, nbar);
    const int n = params.n_bins;
    const double p = -std::expm1(-g);
    const double q = std::exp(-g);
    const auto& table = shared_table(n);
    std::vector<double> values(n + 1);
    for (int k = 0; k <= n; ++k)
        values[k] = static_cast<double>(table.binomial(n, k)) * ipow(q, n - k) * ipow(p, k);
    return ClickDistribution(std::move(values), n, 0);
}

ChannelMatrix conversion_matrix(int n_bins, int n_max) {
    if (n_bins < 1) throw validation_error("conversion_matrix: need at least one bin");
    if (n_max < n_bins) throw validation_error("conversion_matrix: n_max must be >= n_bins");
    const auto& table = shared_table(std::max(n_bins, n_max));
    ChannelMatrix m(ChannelRole::conversion_C, n_bins + 1, n_max + 1, "total clicks k",
                    "photon number n");
    m.set_n_bins(n_bins);
    BigInt n_pow = 1;  // N^n
    for (int n = 0; n <= n_max; ++n) {
        BigInt k_fac = 1;
        for (int k = 0; k <= n_bins; ++k) {
            if (k > 0) k_fac *= k;
            const BigInt num = table.binomial(n_bins, k) * k_fac * table.stirling_second(n, k);
            if (num != 0) m.at(k, n) = round_once(BigRational(num, n_pow));
        }
        n_pow *= n_bins;
    }
    return m;
}

ChannelMatrix loss_matrix(double eta, int dim) {
    if (!(eta > 0.0)) throw validation_error("loss_matrix: eta must be > 0");
    if (dim < 0) throw validation_error("loss_matrix: dim must be >= 0");
    const auto& table = shared_table(dim);
    ChannelMatrix m(ChannelRole::loss_H, dim + 1, dim + 1, "output photon number n",
                    "input photon number m");
    m.set_eta(eta);
    for (int col = 0; col <= dim; ++col)
        for (int n = 0; n <= col; ++n)
            m.at(n, col) =
                static_cast<double>(table.binomial(col, n)) * ipow(eta, n) * ipow(1.0 - eta, col - n);
    return m;
}

namespace {

void warn_truncation(const char* who, std::span<const double> values, double tail_mass,
                     Warnings* warnings) {
    if (values.back() > 1e-6 || tail_mass > 1e-6) {
        std::ostringstream os;
        os << who << ": input carries mass " << values.back() << " at its truncation edge (tail "
           << tail_mass << "); results may be biased";
        warn(warnings, "truncation_tail", os.str());
    }
}

}  // namespace

PhotonDistribution apply_loss(const ChannelMatrix& loss, const PhotonDistribution& d,
                              Warnings* warnings) {
    if (loss.role() != ChannelRole::loss_H)
        throw validation_error("apply_loss: matrix role must be loss_H");
    if (!(loss.eta() > 0.0) || loss.eta() > 1.0)
        throw validation_error("apply_loss: matrix eta must be in (0, 1]; use deconvolve_loss "
                               "for inverse maps");
    warn_truncation("apply_loss", d.values(), d.tail_mass(), warnings);
    std::vector<double> out = loss.apply(d.values());
    return PhotonDistribution(std::move(out), d.eta_tag() * loss.eta(), d.kind(), d.tail_mass());
}

ClickDistribution apply_conversion(const ChannelMatrix& conversion, const PhotonDistribution& d,
                                   Warnings* warnings) {
    if (conversion.role() != ChannelRole::conversion_C)
        throw validation_error("apply_conversion: matrix role must be conversion_C");
    warn_truncation("apply_conversion", d.values(), d.tail_mass(), warnings);
    std::vector<double> out = conversion.apply(d.values());
    return ClickDistribution(std::move(out), conversion.n_bins(), 0, d.tail_mass());
}

PhotonDistribution poisson_distribution(double nbar, int n_max, Warnings* warnings) {
    if (!(nbar >= 0.0)) throw validation_error("poisson_distribution: nbar must be >= 0");
    if (n_max < 0) throw validation_error("poisson_distribution: n_max must be >= 0");
    std::vector<double> values(n_max + 1);
    double term = std::exp(-nbar);
    double sum = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        values[n] = term;
        sum += term;
        term *= nbar / (n + 1);
    }
    const double tail = std::max(0.0, 1.0 - sum);
    if (tail > 1e-6) {
        std::ostringstream os;
        os << "poisson_distribution: truncation at n_max " << n_max << " leaves tail mass " << tail;
        warn(warnings, "truncation_tail", os.str());
    }
    return PhotonDistribution(std::move(values), 1.0, DistributionKind::proper, tail);
}

int default_n_max(double nbar, int n_bins) {
    const double suggested = 4.0 * nbar * n_bins;
    return std::max(30, static_cast<int>(std::ceil(suggested)));
}

int ShotRecord::click_count() const { return std::popcount(bits); }

namespace {

template <typename PatternFn>
std::vector<ShotRecord> sample_loop(std::uint64_t shots, std::uint64_t seed, PatternFn&& pattern,
                                    bool parallel) {
    std::vector<ShotRecord> records(shots);
    const std::uint64_t sampler_seed = derive_seed(seed, kSamplerPurpose);
    const std::int64_t n = static_cast<std::int64_t>(shots);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        CounterRng rng(sampler_seed, static_cast<std::uint64_t>(i));
        records[i] = ShotRecord{static_cast<std::uint64_t>(i), pattern(rng)};
    }
    return records;
}

std::vector<ShotRecord> sample_per_bin_impl(std::span<const double> probs, std::uint64_t shots,
                                            std::uint64_t seed, bool parallel) {
    if (probs.empty() || probs.size() > kMaxBins)
        throw validation_error("sampler: bin count must be in [1, 32]");
    for (double p : probs)
        if (!(p >= 0.0) || p > 1.0)
            throw validation_error("sampler: per-bin click probability must be in [0, 1]");
    if (shots < 1) throw validation_error("sampler: need at least one shot");
    const int n_bins = static_cast<int>(probs.size());
    auto pattern = [probs, n_bins](CounterRng& rng) {
        std::uint32_t bits = 0;
        for (int j = 0; j < n_bins; ++j)
            if (rng.next_double() < probs[j]) bits |= (1u << j);
        return bits;
    };
    return sample_loop(shots, seed, pattern, parallel);
}

}  // namespace

std::vector<ShotRecord> sample_shots(const ResponseParams& params, double nbar,
                                     std::uint64_t shots, std::uint64_t seed) {
    const double p = -std::expm1(-response_gamma(params, nbar));
    std::vector<double> probs(params.n_bins, p);
    return sample_per_bin_impl(probs, shots, seed, true);
}

std::vector<ShotRecord> sample_shots_serial(const ResponseParams& params, double nbar,
                                            std::uint64_t shots, std::uint64_t seed) {
    const double p = -std::expm1(-response_gamma(params, nbar));
    std::vector<double> probs(params.n_bins, p);
    return sample_per_bin_impl(probs, shots, seed, false);
}

std::vector<ShotRecord> sample_shots_per_bin(std::span<const double> bin_click_probs,
                                             std::uint64_t shots, std::uint64_t seed) {
    return sample_per_bin_impl(bin_click_probs, shots, seed, true);
}

std::vector<ShotRecord> sample_shots_per_bin_serial(std::span<const double> bin_click_probs,
                                                    std::uint64_t shots, std::uint64_t seed) {
    return sample_per_bin_impl(bin_click_probs, shots, seed, false);
}

std::vector<ShotRecord> sample_shots_general(const PhotonDistribution& photon,
                                             const ResponseParams& params, std::uint64_t shots,
                                             std::uint64_t seed) {
    params.validate();
    if (params.gamma != 0.0)
        throw validation_error("sample_shots_general: gamma must be 0 in general-state mode");
    if (params.n_bins > kMaxBins) throw validation_error("sampler: bin count must be in [1, 32]");
    if (shots < 1) throw validation_error("sampler: need at least one shot");
    if (photon.kind() != DistributionKind::proper)
        throw validation_error("sample_shots_general: need a proper photon distribution");

    std::vector<double> cdf(photon.size());
    double acc = 0.0;
    for (std::size_t n = 0; n < photon.size(); ++n) {
        acc += photon[n];
        cdf[n] = acc;
    }
    const int n_bins = params.n_bins;
    const double eta = params.eta;
    const double dark_p = -std::expm1(-params.nu);

    auto pattern = [&cdf, n_bins, eta, dark_p](CounterRng& rng) {
        const double u = rng.next_double();
        std::size_t n = 0;
        while (n + 1 < cdf.size() && u >= cdf[n]) ++n;
        std::uint32_t bits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const int bin = static_cast<int>(rng.next_below(n_bins));
            const bool detected = rng.next_double() < eta;
            if (detected) bits |= (1u << bin);
        }
        if (dark_p > 0.0)
            for (int j = 0; j < n_bins; ++j)
                if (rng.next_double() < dark_p) bits |= (1u << j);
        return bits;
    };
    return sample_loop(shots, seed, pattern, true);
}

double photon_flux(double laser_power_watts, double base_loss_db, double variable_loss_db,
                   double wavelength_m, double repetition_rate_hz) {
    if (!(laser_power_watts > 0.0) || !(base_loss_db > 0.0) || !(variable_loss_db > 0.0) ||
        !(wavelength_m > 0.0) || !(repetition_rate_hz > 0.0))
        throw validation_error("photon_flux: all inputs must be positive");
    const double attenuation = std::pow(10.0, -(base_loss_db + variable_loss_db) / 10.0);
    return attenuation * laser_power_watts * wavelength_m /
           (repetition_rate_hz * kPlanckConstant * kSpeedOfLight);
}

}  // namespace clickpnr
