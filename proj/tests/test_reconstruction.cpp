#include "clickpnr/reconstruction.hpp"

#include "clickpnr/dataio.hpp"
#include "clickpnr/errors.hpp"
#include "clickpnr/forward_model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace clickpnr;

namespace {

// Random probability vector supported on n <= N.
PhotonDistribution random_support_distribution(int n_bins, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n_bins + 1);
    double sum = 0.0;
    for (auto& x : v) {
        x = u(gen);
        sum += x;
    }
    for (auto& x : v) x /= sum;
    // Renormalize exactly enough for the constructor's tolerance.
    double s2 = 0.0;
    for (double x : v) s2 += x;
    v[0] += 1.0 - s2;
    return PhotonDistribution(std::move(v), 1.0);
}

}  // namespace

TEST_CASE("pseudo-inverse matrix") {
    const auto& cp4 = pseudo_inverse_matrix(4);
    CHECK(cp4.rows() == 5);
    CHECK(cp4.cols() == 5);
    CHECK(cp4(0, 0) == 1.0);
    SUBCASE("hand-evaluated entry: m=1, k=2 at N=4") {
        CHECK(cp4(1, 2) == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    }
    SUBCASE("columns preserve normalization") {
        for (int n_bins : {4, 8}) {
            const auto& cp = pseudo_inverse_matrix(n_bins);
            for (std::size_t k = 0; k < cp.cols(); ++k) {
                double sum = 0.0;
                for (std::size_t m = 0; m < cp.rows(); ++m) sum += cp(m, k);
                CHECK(std::abs(sum - 1.0) < 1e-10);
            }
        }
    }
    SUBCASE("Cplus C is the identity on the n <= N subspace") {
        for (int n_bins : {4, 8}) {
            const auto& cp = pseudo_inverse_matrix(n_bins);
            const auto c = conversion_matrix(n_bins, n_bins);
            for (std::size_t m = 0; m < cp.rows(); ++m) {
                for (std::size_t n = 0; n < c.cols(); ++n) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < cp.cols(); ++k) acc += cp(m, k) * c(k, n);
                    CHECK(std::abs(acc - (m == n ? 1.0 : 0.0)) < 1e-10);
                }
            }
        }
    }
}

TEST_CASE("pseudo-inversion") {
    SUBCASE("no clicks means no pseudo-photons") {
        std::vector<double> v(9, 0.0);
        v[0] = 1.0;
        const auto report = pseudo_invert(ClickDistribution(v, 8));
        CHECK(report.output[0] == 1.0);
        for (std::size_t m = 1; m < report.output.size(); ++m)
            CHECK(std::abs(report.output[m]) < 1e-15);
        CHECK(report.output.kind() == DistributionKind::pseudo);
    }
    SUBCASE("exact on states supported below the bin count") {
        std::mt19937_64 gen(5150);
        for (int n_bins : {4, 8}) {
            const auto c = conversion_matrix(n_bins, n_bins);
            for (int trial = 0; trial < 100; ++trial) {
                const auto p = random_support_distribution(n_bins, gen);
                const auto clicks = apply_conversion(c, p);
                const auto report = pseudo_invert(clicks);
                for (std::size_t n = 0; n < p.size(); ++n)
                    CHECK(std::abs(report.output[n] - p[n]) < 1e-9);
            }
        }
    }
    SUBCASE("commutes past the loss map on the subspace") {
        std::mt19937_64 gen(6021);
        for (int n_bins : {4, 8}) {
            const auto c = conversion_matrix(n_bins, n_bins);
            for (double eta : {0.3, 0.6, 0.9}) {
                const auto h = loss_matrix(eta, n_bins);
                const auto p = random_support_distribution(n_bins, gen);
                const auto lossy = apply_loss(h, p);
                const auto clicks = apply_conversion(c, lossy);
                const auto report = pseudo_invert(clicks, eta);
                for (std::size_t n = 0; n < lossy.size(); ++n)
                    CHECK(std::abs(report.output[n] - lossy[n]) < 1e-9);
                CHECK(report.output.eta_tag() == doctest::Approx(eta));
            }
        }
    }
    SUBCASE("analytic coherent clicks invert to Poisson-like statistics") {
        const auto clicks = coherent_click_distribution({0.0, 0.6, 0.0, 8}, 0.85);
        const auto report = pseudo_invert(clicks, 0.6);
        CHECK(std::abs(report.q_mandel.q) < 1e-8);
        CHECK(std::isnan(report.q_mandel.sigma));  // analytic input: no bootstrap
        CHECK(report.q_mandel.flag == "analytic_input");
        // Matches the truncated Poisson of the attenuated mean.
        const auto ideal = poisson_distribution(0.6 * 0.85, 8);
        for (std::size_t n = 0; n < report.output.size(); ++n)
            CHECK(std::abs(report.output[n] - ideal[n]) < 1e-7);
    }
    SUBCASE("normalization survives inversion") {
        const auto clicks = coherent_click_distribution({0.0, 0.608, 0.0, 8}, 0.85);
        const auto report = pseudo_invert(clicks, 0.608);
        double sum = 0.0;
        for (std::size_t n = 0; n < report.output.size(); ++n) sum += report.output[n];
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("loss deconvolution") {
    const auto clicks = coherent_click_distribution({0.0, 0.6, 0.0, 8}, 0.85);
    const auto pseudo = pseudo_invert(clicks, 0.6).output;

    SUBCASE("deconvolving to the same efficiency changes nothing") {
        const auto same = deconvolve_loss(pseudo, 0.6);
        for (std::size_t n = 0; n < pseudo.size(); ++n)
            CHECK(same[n] == doctest::Approx(pseudo[n]).epsilon(1e-12));
        CHECK(same.eta_tag() == doctest::Approx(0.6));
        CHECK(same.kind() == DistributionKind::deconvolved);
    }
    SUBCASE("two-step staircase equals one step") {
        const auto two_step = deconvolve_loss(deconvolve_loss(pseudo, 0.8), 1.0);
        const auto one_step = deconvolve_loss(pseudo, 1.0);
        for (std::size_t n = 0; n < one_step.size(); ++n)
            CHECK(std::abs(two_step[n] - one_step[n]) < 1e-9);
    }
    SUBCASE("adding loss is refused") {
        CHECK_THROWS_AS(deconvolve_loss(pseudo, 0.4), validation_error);
        CHECK_THROWS_AS(deconvolve_loss(pseudo, 1.2), validation_error);
    }
    SUBCASE("ill-conditioned ratios warn") {
        Warnings warnings;
        const auto clicks2 = coherent_click_distribution({0.0, 0.2, 0.0, 8}, 0.85);
        const auto p2 = pseudo_invert(clicks2, 0.2).output;
        (void)deconvolve_loss(p2, 1.0, &warnings);
        REQUIRE(!warnings.empty());
        CHECK(warnings[0].code == "ill_conditioned_deconvolution");
        Warnings none;
        (void)deconvolve_loss(pseudo, 1.0, &none);
        CHECK(none.empty());
    }
    SUBCASE("mean scales with the removed loss") {
        std::mt19937_64 gen(31);
        const auto c = conversion_matrix(8, 8);
        const auto p = random_support_distribution(8, gen);
        const auto lossy = apply_loss(loss_matrix(0.6, 8), p);
        const auto recovered = deconvolve_loss(pseudo_invert(apply_conversion(c, lossy), 0.6).output, 1.0);
        CHECK(moments(recovered).mean ==
              doctest::Approx(moments(lossy).mean / 0.6).epsilon(1e-9));
        // And full recovery of the original state on the subspace.
        for (std::size_t n = 0; n < p.size(); ++n) CHECK(std::abs(recovered[n] - p[n]) < 1e-9);
    }
    SUBCASE("normalization survives the staircase") {
        const auto out = deconvolve_loss(pseudo, 1.0);
        double sum = 0.0;
        for (std::size_t n = 0; n < out.size(); ++n) sum += out[n];
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("negativity report") {
    SUBCASE("all-nonnegative input") {
        const auto report = negativity_report(poisson_distribution(0.5, 10));
        CHECK(report.neg_mass == 0.0);
        CHECK(!report.worst_index.has_value());
        CHECK(!report.significance.has_value());
    }
    SUBCASE("single negative entry") {
        const PhotonDistribution p({1.1, -0.1}, 1.0, DistributionKind::deconvolved);
        const auto report = negativity_report(p);
        CHECK(report.neg_mass == doctest::Approx(-0.1));
        REQUIRE(report.worst_index.has_value());
        CHECK(*report.worst_index == 1);
    }
    SUBCASE("significance from per-entry sigmas") {
        const PhotonDistribution p({1.1, -0.1}, 1.0, DistributionKind::deconvolved);
        const std::vector<double> sigma{0.01, 0.05};
        const auto report = negativity_report(p, sigma);
        REQUIRE(report.significance.has_value());
        CHECK(*report.significance == doctest::Approx(2.0));
    }
}

TEST_CASE("clamping for plots") {
    const PhotonDistribution p({0.7, 0.4, -0.1}, 1.0, DistributionKind::deconvolved);
    const auto clamped = clamp_nonnegative(p);
    CHECK(clamped[2] == 0.0);
    CHECK(clamped[0] == doctest::Approx(0.7 / 1.1));
    double sum = 0.0;
    for (std::size_t n = 0; n < clamped.size(); ++n) sum += clamped[n];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("deconvolution analysis on simulated data") {
    // Desk-scale version of the full chain: simulate, aggregate, invert,
    // deconvolve, with bootstrap errors at every stage.
    const ResponseParams params{0.0, 0.608, 0.0, 8};
    const double nbar = 0.85;
    const auto records = sample_shots(params, nbar, 200'000, 1234);
    const auto agg = aggregate(records, params.n_bins);
    const auto clicks = click_distribution_from(agg);
    const double stages[] = {0.8, 1.0};
    const auto analysis = deconvolution_analysis(clicks, 0.608, stages, {500, 99, true});

    REQUIRE(analysis.stages.size() == 2);
    CHECK(analysis.inversion.output_sigma.size() == 9);
    CHECK(std::isfinite(analysis.inversion.q_mandel.sigma));
    for (const auto& stage : analysis.stages) {
        CHECK(stage.sigma.size() == 9);
        CHECK(std::isfinite(stage.q_mandel.sigma));
        CHECK(std::isfinite(stage.negativity_sigma));
        CHECK(std::abs(stage.q_mandel.q) < 6 * stage.q_mandel.sigma);
        double sum = 0.0;
        for (std::size_t n = 0; n < stage.dist.size(); ++n) sum += stage.dist[n];
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
    // The lossless stage stays close to the ideal Poisson at this shot count.
    const auto ideal = poisson_distribution(nbar, 8);
    CHECK(total_variation(analysis.stages.back().dist, ideal) < 0.05);
    CHECK(analysis.stages.back().dist.eta_tag() == doctest::Approx(1.0));
    SUBCASE("stage ordering is validated") {
        const double bad[] = {0.5};
        CHECK_THROWS_AS(deconvolution_analysis(clicks, 0.608, bad, {100, 1}), validation_error);
    }
}
