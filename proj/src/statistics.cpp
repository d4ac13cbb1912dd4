#include "clickpnr/statistics.hpp"

#include "clickpnr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace clickpnr {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_values(std::span<const double> values, double tail_mass, double tolerance,
                  bool allow_negative, const char* what) {
    if (values.empty()) throw validation_error(std::string(what) + ": empty vector");
    if (!(tail_mass >= 0.0) || tail_mass >= 1.0)
        throw validation_error(std::string(what) + ": tail mass must be in [0, 1)");
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw validation_error(std::string(what) + ": non-finite entry");
        if (!allow_negative && v < 0.0)
            throw validation_error(std::string(what) + ": negative entry in proper distribution");
        sum += v;
    }
    if (std::abs(sum + tail_mass - 1.0) > tolerance) {
        std::ostringstream os;
        os << what << ": entries sum to " << sum << " (tail " << tail_mass
           << "), outside 1 +- " << tolerance;
        throw validation_error(os.str());
    }
}

}  // namespace

const char* to_string(DistributionKind kind) {
    switch (kind) {
        case DistributionKind::proper: return "proper";
        case DistributionKind::pseudo: return "pseudo";
        case DistributionKind::deconvolved: return "deconvolved";
    }
    return "proper";
}

DistributionKind distribution_kind_from_string(const std::string& s) {
    if (s == "proper") return DistributionKind::proper;
    if (s == "pseudo") return DistributionKind::pseudo;
    if (s == "deconvolved") return DistributionKind::deconvolved;
    throw validation_error("unknown distribution kind: " + s);
}

PhotonDistribution::PhotonDistribution(std::vector<double> values, double eta_tag,
                                       DistributionKind kind, double tail_mass)
    : values_(std::move(values)), eta_tag_(eta_tag), kind_(kind), tail_mass_(tail_mass) {
    if (!(eta_tag > 0.0) || eta_tag > 1.0)
        throw validation_error("photon distribution: eta tag must be in (0, 1]");
    const bool allow_negative = kind != DistributionKind::proper;
    check_values(values_, tail_mass_, kNormalizationTolerance, allow_negative,
                 "photon distribution");
}

ClickDistribution::ClickDistribution(std::vector<double> values, int n_bins,
                                     std::uint64_t shot_count, double tail_mass)
    : values_(std::move(values)), n_bins_(n_bins), shot_count_(shot_count), tail_mass_(tail_mass) {
    if (n_bins < 1) throw validation_error("click distribution: need at least one bin");
    if (values_.size() != static_cast<std::size_t>(n_bins) + 1)
        throw validation_error("click distribution: length must be n_bins + 1");
    check_values(values_, tail_mass_, kNormalizationTolerance, false, "click distribution");
}

Moments moments(std::span<const double> values) {
    double mean = 0.0, second = 0.0;
    for (std::size_t x = 0; x < values.size(); ++x) {
        mean += static_cast<double>(x) * values[x];
        second += static_cast<double>(x) * static_cast<double>(x) * values[x];
    }
    double variance = second - mean * mean;
    if (variance < 0.0 && variance >= -1e-12) variance = 0.0;
    return {mean, variance};
}

Moments moments(const PhotonDistribution& d) { return moments(d.values()); }
Moments moments(const ClickDistribution& d) { return moments(d.values()); }

double q_mandel(double mean, double variance) {
    if (!(mean > 0.0)) throw validation_error("q_mandel: mean must be positive");
    return variance / mean - 1.0;
}

double q_mandel(const PhotonDistribution& d) {
    auto m = moments(d);
    return q_mandel(m.mean, m.variance);
}

double q_mandel(const ClickDistribution& d) {
    auto m = moments(d);
    return q_mandel(m.mean, m.variance);
}

double q_binomial(double mean, double variance, int n_bins) {
    if (n_bins < 1) throw validation_error("q_binomial: need at least one bin");
    const double n = static_cast<double>(n_bins);
    if (!(mean > 0.0) || !(mean < n))
        throw validation_error("q_binomial: undefined at mean clicks 0 or N");
    return n * variance / (mean * (n - mean)) - 1.0;
}

double q_binomial(const ClickDistribution& d) {
    auto m = moments(d);
    return q_binomial(m.mean, m.variance, d.n_bins());
}

double q_binomial(const PhotonDistribution& d, int n_bins) {
    auto m = moments(d);
    return q_binomial(m.mean, m.variance, n_bins);
}

namespace {

double q_from_counts(std::span<const double> freq, QKind which, int n_bins) {
    auto m = moments(freq);
    return which == QKind::mandel ? q_mandel(m.mean, m.variance)
                                  : q_binomial(m.mean, m.variance, n_bins);
}

// Delta-method variance of the chosen Q from empirical moments.
double delta_sigma(std::span<const double> freq, QKind which, int n_bins, std::uint64_t shots) {
    const double s = static_cast<double>(shots);
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
    for (std::size_t x = 0; x < freq.size(); ++x) {
        const double xd = static_cast<double>(x);
        m1 += xd * freq[x];
        m2 += xd * xd * freq[x];
        m3 += xd * xd * xd * freq[x];
        m4 += xd * xd * xd * xd * freq[x];
    }
    const double var = m2 - m1 * m1;
    // Central moments.
    const double mu3 = m3 - 3 * m1 * m2 + 2 * m1 * m1 * m1;
    const double mu4 = m4 - 4 * m1 * m3 + 6 * m1 * m1 * m2 - 3 * m1 * m1 * m1 * m1;
    const double var_mean = var / s;
    const double cov_mean_var = mu3 / s;
    const double var_var = (mu4 - var * var) / s;
    double dq_dm = 0.0, dq_dv = 0.0;
    if (which == QKind::mandel) {
        dq_dv = 1.0 / m1;
        dq_dm = -var / (m1 * m1);
    } else {
        const double n = static_cast<double>(n_bins);
        const double denom = m1 * (n - m1);
        dq_dv = n / denom;
        dq_dm = -n * var * (n - 2 * m1) / (denom * denom);
    }
    const double v = dq_dv * dq_dv * var_var + dq_dm * dq_dm * var_mean +
                     2 * dq_dm * dq_dv * cov_mean_var;
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

}  // namespace

namespace detail {

std::vector<std::uint64_t> multinomial_draw(std::span<const double> probs, std::uint64_t total,
                                            CounterRng& rng) {
    std::vector<std::uint64_t> out(probs.size(), 0);
    std::size_t top = probs.size();
    while (top > 0 && probs[top - 1] <= 0.0) --top;
    if (top == 0) throw validation_error("multinomial_draw: no positive probability");
    std::uint64_t remaining = total;
    double mass_left = 1.0;
    for (std::size_t i = 0; i + 1 < top && remaining > 0; ++i) {
        const double p = probs[i];
        if (p <= 0.0) continue;
        const double cond = std::clamp(p / mass_left, 0.0, 1.0);
        std::binomial_distribution<std::int64_t> binom(static_cast<std::int64_t>(remaining), cond);
        const std::uint64_t draw = static_cast<std::uint64_t>(binom(rng));
        out[i] = draw;
        remaining -= draw;
        mass_left -= p;
        if (mass_left <= 0.0) break;
    }
    out[top - 1] += remaining;
    return out;
}

}  // namespace detail

QEstimate q_uncertainty(std::span<const std::uint64_t> counts, QKind which,
                        const QUncertaintyOptions& options) {
    if (counts.empty()) throw validation_error("q_uncertainty: empty counts");
    std::uint64_t shots = 0;
    std::size_t occupied = 0;
    for (auto c : counts) {
        shots += c;
        if (c > 0) ++occupied;
    }
    if (shots < 2) throw validation_error("q_uncertainty: need at least 2 shots");
    const int n_bins = static_cast<int>(counts.size()) - 1;

    std::vector<double> freq(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        freq[i] = static_cast<double>(counts[i]) / static_cast<double>(shots);

    QEstimate est;
    try {
        est.q = q_from_counts(freq, which, n_bins);
    } catch (const validation_error&) {
        est.q = kNan;  // all mass at 0 or at N: the parameter itself is undefined
    }

    if (occupied < 2) {
        est.degenerate = true;
        est.flag = "degenerate_single_outcome";
        est.sigma = kNan;
        return est;
    }

    const int resamples = options.resamples;
    if (resamples < 2) throw validation_error("q_uncertainty: need at least 2 resamples");
    std::vector<double> qs(resamples, kNan);
    const std::uint64_t seed = derive_seed(options.seed, 0xB007'57A9ULL);

    auto one_resample = [&](int b) {
        CounterRng rng(seed, static_cast<std::uint64_t>(b));
        const auto re = detail::multinomial_draw(freq, shots, rng);
        std::vector<double> f(re.size());
        for (std::size_t i = 0; i < re.size(); ++i)
            f[i] = static_cast<double>(re[i]) / static_cast<double>(shots);
        try {
            qs[b] = q_from_counts(f, which, n_bins);
        } catch (const validation_error&) {
            // Resample hit a degenerate mean (0 or N); leave NaN and skip it.
        }
    };

#ifdef _OPENMP
    if (options.parallel) {
#pragma omp parallel for schedule(static)
        for (int b = 0; b < resamples; ++b) one_resample(b);
    } else
#endif
    {
        for (int b = 0; b < resamples; ++b) one_resample(b);
    }

    // Reduce in index order so the result never depends on the thread count.
    double sum = 0.0;
    int used = 0;
    for (double q : qs)
        if (std::isfinite(q)) {
            sum += q;
            ++used;
        }
    if (used < 2) {
        est.degenerate = true;
        est.flag = "degenerate_resamples";
        est.sigma = kNan;
        return est;
    }
    const double mean = sum / used;
    double ss = 0.0;
    for (double q : qs)
        if (std::isfinite(q)) ss += (q - mean) * (q - mean);
    est.sigma = std::sqrt(ss / (used - 1));
    est.resamples_used = used;
    if (options.delta_method) est.sigma_delta = delta_sigma(freq, which, n_bins, shots);
    return est;
}

double total_variation(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::max(a.size(), b.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double av = i < a.size() ? a[i] : 0.0;
        const double bv = i < b.size() ? b[i] : 0.0;
        sum += std::abs(av - bv);
    }
    return 0.5 * sum;
}

double total_variation(const PhotonDistribution& a, const PhotonDistribution& b) {
    return total_variation(a.values(), b.values());
}

}  // namespace clickpnr
