#include "clickpnr/tomography.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace clickpnr {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Solve A x = b and invert A in place for a small symmetric positive-definite
// system (Gauss-Jordan with partial pivoting; n is 2 or 3 here).
void solve_and_invert(std::vector<std::vector<double>>& a, std::vector<double>& b,
                      std::vector<double>& x, std::vector<std::vector<double>>& inv) {
    const std::size_t n = a.size();
    inv.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (a[pivot][col] == 0.0)
            throw validation_error("fit_response: rank-deficient design (too few distinct nbar)");
        std::swap(a[col], a[pivot]);
        std::swap(inv[col], inv[pivot]);
        std::swap(b[col], b[pivot]);
        const double d = a[col][col];
        for (std::size_t c = 0; c < n; ++c) {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        b[col] /= d;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    x = b;
}

}  // namespace

double gamma_from_mean_clicks(double kbar, int n_bins) {
    if (n_bins < 1) throw validation_error("gamma_from_mean_clicks: need at least one bin");
    if (!(kbar >= 0.0)) throw validation_error("gamma_from_mean_clicks: kbar must be >= 0");
    if (kbar >= n_bins) {
        std::ostringstream os;
        os << "gamma_from_mean_clicks: mean clicks " << kbar << " saturates the " << n_bins
           << "-bin detector; response undefined";
        throw saturation_error(os.str());
    }
    return -std::log1p(-kbar / n_bins);
}

GammaPoint gamma_point(const CalibrationPoint& point) {
    if (point.click_counts.size() < 2)
        throw validation_error("gamma_point: click_counts must cover k = 0..N");
    const int n_bins = static_cast<int>(point.click_counts.size()) - 1;
    std::uint64_t shots = 0;
    double kbar = 0.0, second = 0.0;
    for (std::size_t k = 0; k < point.click_counts.size(); ++k) {
        shots += point.click_counts[k];
        kbar += static_cast<double>(k) * static_cast<double>(point.click_counts[k]);
        second += static_cast<double>(k * k) * static_cast<double>(point.click_counts[k]);
    }
    if (shots == 0) throw validation_error("gamma_point: no shots");
    if (point.shots != 0 && point.shots != shots)
        throw validation_error("gamma_point: shots field inconsistent with click_counts");
    const double s = static_cast<double>(shots);
    kbar /= s;
    second /= s;
    const double var = std::max(0.0, second - kbar * kbar);
    const double gamma = gamma_from_mean_clicks(kbar, n_bins);
    const double sigma_kbar = std::sqrt(var / s);
    return {point.nbar, gamma, sigma_kbar / (n_bins - kbar)};
}

const char* to_string(FitOrder order) {
    return order == FitOrder::linear ? "linear" : "quadratic";
}

FitOrder fit_order_from_string(const std::string& s) {
    if (s == "linear") return FitOrder::linear;
    if (s == "quadratic") return FitOrder::quadratic;
    throw validation_error("unknown fit order: " + s);
}

ResponseFit fit_response(std::span<const CalibrationPoint> points, int n_bins, FitOrder order,
                         bool weighted) {
    std::vector<GammaPoint> gp;
    gp.reserve(points.size());
    for (const auto& p : points) {
        if (static_cast<int>(p.click_counts.size()) != n_bins + 1)
            throw validation_error("fit_response: calibration point bin count mismatch");
        gp.push_back(gamma_point(p));
    }
    return fit_response_gamma(gp, n_bins, order, weighted);
}

ResponseFit fit_response_gamma(std::span<const GammaPoint> points, int n_bins, FitOrder order,
                               bool weighted) {
    if (n_bins < 1) throw validation_error("fit_response: need at least one bin");
    std::set<double> distinct;
    for (const auto& p : points) distinct.insert(p.nbar);
    if (distinct.size() < 4)
        throw validation_error("fit_response: need at least 4 points with distinct nbar");

    bool use_weights = weighted;
    ResponseFit fit;
    fit.order = order;
    fit.n_bins = n_bins;
    fit.n_points = static_cast<int>(points.size());
    fit.weighted = weighted;
    if (weighted) {
        bool any_zero = false, all_zero = true;
        for (const auto& p : points) {
            if (p.sigma <= 0.0)
                any_zero = true;
            else
                all_zero = false;
        }
        if (any_zero) {
            if (!all_zero)
                throw validation_error("fit_response: mixed zero and positive sigmas; cannot weight");
            use_weights = false;  // exact synthetic points: plain least squares
        }
    }

    const std::size_t n_params = order == FitOrder::linear ? 2 : 3;
    std::vector<std::vector<double>> a(n_params, std::vector<double>(n_params, 0.0));
    std::vector<double> b(n_params, 0.0);
    for (const auto& p : points) {
        const double x = p.nbar / n_bins;
        const double w = use_weights ? 1.0 / (p.sigma * p.sigma) : 1.0;
        double basis[3] = {1.0, x, x * x};
        for (std::size_t r = 0; r < n_params; ++r) {
            for (std::size_t c = 0; c < n_params; ++c) a[r][c] += w * basis[r] * basis[c];
            b[r] += w * basis[r] * p.gamma;
        }
    }

    std::vector<double> beta;
    std::vector<std::vector<double>> cov;
    solve_and_invert(a, b, beta, cov);

    // Residuals and weighted R^2 on the Gamma values.
    double sw = 0.0, swy = 0.0;
    for (const auto& p : points) {
        const double w = use_weights ? 1.0 / (p.sigma * p.sigma) : 1.0;
        sw += w;
        swy += w * p.gamma;
    }
    const double ybar = swy / sw;
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& p : points) {
        const double x = p.nbar / n_bins;
        double yhat = beta[0] + beta[1] * x;
        if (n_params == 3) yhat += beta[2] * x * x;
        const double w = use_weights ? 1.0 / (p.sigma * p.sigma) : 1.0;
        ss_res += w * (p.gamma - yhat) * (p.gamma - yhat);
        ss_tot += w * (p.gamma - ybar) * (p.gamma - ybar);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

    // Unweighted fits estimate the noise scale from the residuals; weighted fits
    // carry it in the known sigmas already.
    if (!use_weights) {
        const std::size_t dof = points.size() - n_params;
        const double s2 = dof > 0 ? ss_res / static_cast<double>(dof) : 0.0;
        for (auto& row : cov)
            for (auto& v : row) v *= s2;
    }

    fit.nu = beta[0];
    fit.eta = beta[1];
    fit.gamma = n_params == 3 ? beta[2] : 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        if (i < n_params) {
            const double sigma = std::sqrt(std::max(0.0, cov[i][i]));
            fit.std_errors[i] = sigma;
            const double value = i == 0 ? fit.nu : (i == 1 ? fit.eta : fit.gamma);
            fit.rel_errors[i] = value != 0.0 ? sigma / std::abs(value) : kNan;
            fit.significance[i] = sigma > 0.0 ? std::abs(value) / sigma : kNan;
            for (std::size_t j = 0; j < n_params; ++j) fit.covariance[i][j] = cov[i][j];
        } else {
            fit.std_errors[i] = kNan;
            fit.rel_errors[i] = kNan;
            fit.significance[i] = kNan;
        }
    }

    if (fit.eta < 0.0)
        warn(&fit.warnings, "negative_efficiency",
             "fit_response: fitted quantum efficiency is negative");
    // A parameter within 3 sigma of zero carries no statistical significance.
    const char* names[3] = {"nu", "eta", "gamma"};
    for (std::size_t i = 0; i < n_params; ++i) {
        if (std::isfinite(fit.significance[i]) && fit.significance[i] < 3.0)
            warn(&fit.warnings, "negligible_parameter",
                 std::string("fit_response: ") + names[i] + " is zero within 3 sigma");
    }
    return fit;
}

BinMeans bin_means(std::span<const std::uint64_t> marginals, std::uint64_t shots) {
    if (shots < 1) throw validation_error("bin_means: need at least one shot");
    if (marginals.empty()) throw validation_error("bin_means: no bins");
    BinMeans out;
    out.shots = shots;
    const double s = static_cast<double>(shots);
    for (auto m : marginals) {
        if (m > shots) throw validation_error("bin_means: marginal exceeds shot count");
        const double mean = static_cast<double>(m) / s;
        out.mean.push_back(mean);
        out.sigma.push_back(std::sqrt(mean * (1.0 - mean) / s));
    }
    return out;
}

BinCovariances bin_covariances(std::span<const std::uint64_t> marginals,
                               std::span<const std::uint64_t> pair_joint, std::uint64_t shots) {
    if (shots < 2) throw validation_error("bin_covariances: need at least two shots");
    const std::size_t n = marginals.size();
    if (pair_joint.size() != n * n)
        throw validation_error("bin_covariances: pair_joint must be N x N");
    BinCovariances out;
    out.n_bins = static_cast<int>(n);
    out.cov.assign(n * n, 0.0);
    out.sigma.assign(n * n, 0.0);
    const double s = static_cast<double>(shots);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t jp = 0; jp < n; ++jp) {
            const double pj = static_cast<double>(marginals[j]) / s;
            const double pq = static_cast<double>(marginals[jp]) / s;
            const double p11 = static_cast<double>(pair_joint[j * n + jp]) / s;
            const double cov = p11 - pj * pq;
            out.cov[j * n + jp] = cov;
            if (j == jp) {
                // Diagonal: Bernoulli variance p(1-p); delta method on p-hat.
                const double dvar = (1.0 - 2.0 * pj);
                out.sigma[j * n + jp] = std::abs(dvar) * std::sqrt(pj * (1.0 - pj) / s);
            } else {
                // Delta method on (p11, pj, pq) with multinomial covariances.
                const double v11 = p11 * (1.0 - p11) / s;
                const double vj = pj * (1.0 - pj) / s;
                const double vq = pq * (1.0 - pq) / s;
                const double c11j = p11 * (1.0 - pj) / s;
                const double c11q = p11 * (1.0 - pq) / s;
                const double cjq = (p11 - pj * pq) / s;
                const double var = v11 + pq * pq * vj + pj * pj * vq - 2.0 * pq * c11j -
                                   2.0 * pj * c11q + 2.0 * pj * pq * cjq;
                out.sigma[j * n + jp] = std::sqrt(std::max(0.0, var));
            }
        }
    }
    return out;
}

UniformityTest uniformity_test(const BinMeans& means) {
    const std::size_t n = means.mean.size();
    if (n < 2) throw validation_error("uniformity_test: need at least two bins");
    UniformityTest out;
    out.dof = static_cast<int>(n) - 1;
    for (double s : means.sigma)
        if (!(s > 0.0)) out.degenerate = true;
    if (out.degenerate) {
        out.chi2 = kNan;
        out.p_value = kNan;
        return out;
    }
    double sw = 0.0, swm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double w = 1.0 / (means.sigma[j] * means.sigma[j]);
        sw += w;
        swm += w * means.mean[j];
    }
    const double pooled = swm / sw;
    double chi2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double d = means.mean[j] - pooled;
        chi2 += d * d / (means.sigma[j] * means.sigma[j]);
    }
    out.chi2 = chi2;
    boost::math::chi_squared_distribution<double> dist(out.dof);
    out.p_value = boost::math::cdf(boost::math::complement(dist, chi2));
    return out;
}

}  // namespace clickpnr
