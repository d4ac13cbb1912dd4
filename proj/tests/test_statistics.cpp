#include "clickpnr/statistics.hpp"

#include "clickpnr/errors.hpp"
#include "clickpnr/forward_model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace clickpnr;

namespace {

// Analytic Poisson pmf, independent of the library generator.
std::vector<double> poisson_pmf(double lambda, int n_max) {
    std::vector<double> v(n_max + 1);
    for (int n = 0; n <= n_max; ++n)
        v[n] = std::exp(-lambda + n * std::log(lambda) - std::lgamma(n + 1.0));
    return v;
}

std::vector<double> binomial_pmf(int n, double p) {
    std::vector<double> v(n + 1);
    for (int k = 0; k <= n; ++k)
        v[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) *
               std::pow(p, k) * std::pow(1.0 - p, n - k);
    return v;
}

}  // namespace

TEST_CASE("moments of simple distributions") {
    SUBCASE("point mass at 3") {
        std::vector<double> v{0, 0, 0, 1};
        auto m = moments(v);
        CHECK(m.mean == doctest::Approx(3.0).epsilon(1e-15));
        CHECK(m.variance == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("uniform over {0,1}") {
        std::vector<double> v{0.5, 0.5};
        auto m = moments(v);
        CHECK(m.mean == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(m.variance == doctest::Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("truncated Poisson has mean = variance = nbar") {
        auto m = moments(poisson_pmf(0.85, 30));
        CHECK(std::abs(m.mean - 0.85) < 1e-9);
        CHECK(std::abs(m.variance - 0.85) < 1e-9);
    }
}

TEST_CASE("Mandel parameter") {
    for (double nbar : {0.027, 0.1, 0.5, 0.85}) {
        auto m = moments(poisson_pmf(nbar, 40));
        CHECK(std::abs(q_mandel(m.mean, m.variance)) < 1e-8);
    }
    SUBCASE("point mass at 1 is maximally sub-Poissonian") {
        std::vector<double> v{0, 1};
        auto m = moments(v);
        CHECK(q_mandel(m.mean, m.variance) == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("zero mean is a domain error") {
        CHECK_THROWS_AS(q_mandel(0.0, 0.0), validation_error);
    }
    SUBCASE("coherent clicks: closed form exp(-nbar/N) - 1") {
        const ResponseParams ideal{0.0, 1.0, 0.0, 8};
        const auto clicks = coherent_click_distribution(ideal, 0.85);
        CHECK(std::abs(q_mandel(clicks) - std::expm1(-0.85 / 8)) < 1e-12);
    }
}

TEST_CASE("binomial parameter") {
    SUBCASE("exact binomial vector gives zero") {
        auto v = binomial_pmf(4, 0.3);
        auto m = moments(v);
        CHECK(std::abs(q_binomial(m.mean, m.variance, 4)) < 1e-12);
    }
    SUBCASE("Poisson probed as 4-bin clicks: nbar/(N-nbar)") {
        auto m = moments(poisson_pmf(0.85, 30));
        CHECK(q_binomial(m.mean, m.variance, 4) == doctest::Approx(0.85 / 3.15).epsilon(1e-3));
        CHECK(std::abs(q_binomial(m.mean, m.variance, 4) - 0.2698412698412698) < 1e-3);
    }
    SUBCASE("point mass at k=2 of N=4") {
        std::vector<double> v{0, 0, 1, 0, 0};
        auto m = moments(v);
        CHECK(q_binomial(m.mean, m.variance, 4) == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("mean 0 and mean N are domain errors") {
        CHECK_THROWS_AS(q_binomial(0.0, 0.0, 4), validation_error);
        CHECK_THROWS_AS(q_binomial(4.0, 0.0, 4), validation_error);
    }
}

TEST_CASE("Q curves over the calibration range") {
    // Photon-number statistics of coherent light stay Poissonian; click
    // statistics stay binomial. The opposite parameter moves monotonically.
    const int n_grid = 16;
    double prev_qb_photon = -1.0, prev_qm_click = 1.0;
    for (int i = 0; i < n_grid; ++i) {
        const double nbar = 0.027 * std::pow(0.85 / 0.027, i / double(n_grid - 1));
        const auto photon = poisson_pmf(nbar, 40);
        auto mp = moments(photon);
        CHECK(std::abs(q_mandel(mp.mean, mp.variance)) < 1e-8);
        const double qb_photon = q_binomial(mp.mean, mp.variance, 4);
        CHECK(qb_photon == doctest::Approx(nbar / (4 - nbar)).epsilon(1e-6));
        CHECK(qb_photon > prev_qb_photon);
        prev_qb_photon = qb_photon;

        const ResponseParams ideal{0.0, 1.0, 0.0, 4};
        const auto clicks = coherent_click_distribution(ideal, nbar);
        CHECK(std::abs(q_binomial(clicks)) < 1e-12);
        const double qm_click = q_mandel(clicks);
        CHECK(qm_click == doctest::Approx(std::expm1(-nbar / 4)).epsilon(1e-9));
        CHECK(qm_click < prev_qm_click);
        CHECK(qm_click < 0.0);
        prev_qm_click = qm_click;
    }
}

TEST_CASE("bootstrap q uncertainty") {
    SUBCASE("multinomial draws from a binomial distribution give q_binomial within 3 sigma") {
        std::mt19937_64 gen(321);
        std::binomial_distribution<int> draw(4, 0.2);
        std::vector<std::uint64_t> counts(5, 0);
        for (int i = 0; i < 1'000'000; ++i) ++counts[draw(gen)];
        const auto est = q_uncertainty(counts, QKind::binomial, {1000, 7, true, true});
        CHECK(!est.degenerate);
        CHECK(std::isfinite(est.sigma));
        CHECK(std::abs(est.q) < 3 * est.sigma);
        // Delta-method cross-check agrees with the bootstrap on healthy data.
        REQUIRE(est.sigma_delta.has_value());
        CHECK(*est.sigma_delta == doctest::Approx(est.sigma).epsilon(0.2));
    }
    SUBCASE("all counts in one outcome is degenerate") {
        std::vector<std::uint64_t> counts{0, 0, 5000, 0, 0};
        const auto est = q_uncertainty(counts, QKind::binomial, {100, 7});
        CHECK(est.degenerate);
        CHECK(est.flag == "degenerate_single_outcome");
        CHECK(std::isnan(est.sigma));
        CHECK(est.q == doctest::Approx(-1.0));  // zero variance at k=2
    }
    SUBCASE("doubling all counts keeps q and shrinks sigma by about sqrt(2)") {
        std::mt19937_64 gen(99);
        std::binomial_distribution<int> draw(4, 0.15);
        std::vector<std::uint64_t> counts(5, 0);
        for (int i = 0; i < 200'000; ++i) ++counts[draw(gen)];
        std::vector<std::uint64_t> doubled(counts);
        for (auto& c : doubled) c *= 2;
        const auto est1 = q_uncertainty(counts, QKind::binomial, {2000, 7});
        const auto est2 = q_uncertainty(doubled, QKind::binomial, {2000, 7});
        CHECK(est2.q == doctest::Approx(est1.q).epsilon(1e-12));
        CHECK(est2.sigma / est1.sigma == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.15));
    }
}

TEST_CASE("total variation distance") {
    std::vector<double> a{0.5, 0.5};
    CHECK(total_variation(a, a) == 0.0);
    std::vector<double> b{0, 0, 1};
    std::vector<double> c{1};
    CHECK(total_variation(b, c) == doctest::Approx(1.0));

    SUBCASE("truncation at 8 vs 30 differs by half the tail mass") {
        const auto t8 = poisson_pmf(0.85, 8);
        const auto t30 = poisson_pmf(0.85, 30);
        double tail = 0.0;
        for (int n = 9; n <= 30; ++n) tail += t30[n];
        const double tv = total_variation(t8, t30);
        CHECK(tv == doctest::Approx(0.5 * tail).epsilon(1e-9));
        CHECK(tv < 1e-6);
    }
}

TEST_CASE("distribution type invariants") {
    SUBCASE("proper photon distributions reject negative entries") {
        CHECK_THROWS_AS(PhotonDistribution({1.1, -0.1}, 1.0), validation_error);
        CHECK_NOTHROW(PhotonDistribution({1.1, -0.1}, 1.0, DistributionKind::deconvolved));
        CHECK_NOTHROW(PhotonDistribution({1.05, -0.05}, 0.6, DistributionKind::pseudo));
    }
    SUBCASE("normalization is enforced, not repaired") {
        CHECK_THROWS_AS(PhotonDistribution({0.5, 0.5 + 1e-7}, 1.0), validation_error);
        CHECK_THROWS_AS(ClickDistribution({0.5, 0.4}, 1), validation_error);
        CHECK_NOTHROW(PhotonDistribution({0.5, 0.5}, 1.0));
    }
    SUBCASE("eta tag range") {
        CHECK_THROWS_AS(PhotonDistribution({1.0}, 0.0), validation_error);
        CHECK_THROWS_AS(PhotonDistribution({1.0}, 1.5), validation_error);
    }
    SUBCASE("declared tail mass participates in normalization") {
        CHECK_NOTHROW(PhotonDistribution({0.9, 0.0999}, 1.0, DistributionKind::proper, 1e-4));
        CHECK_THROWS_AS(PhotonDistribution({0.9, 0.0999}, 1.0), validation_error);
    }
    SUBCASE("click distribution length must match bins") {
        CHECK_THROWS_AS(ClickDistribution({0.5, 0.5}, 2), validation_error);
    }
}
