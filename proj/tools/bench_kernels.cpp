// Benchmark of the parallel kernels against their serial reference
// implementations: shot sampling, aggregation, and the reconstruction
// bootstrap. Also cross-checks that both paths produce identical results.

#include "clickpnr/dataio.hpp"
#include "clickpnr/forward_model.hpp"
#include "clickpnr/reconstruction.hpp"
#include "clickpnr/statistics.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void report(const char* name, double serial_s, double parallel_s, bool equal) {
    std::printf("%-28s serial %8.3f s   parallel %8.3f s   speedup %5.2fx   %s\n", name, serial_s,
                parallel_s, serial_s / parallel_s, equal ? "results identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace clickpnr;
    const std::uint64_t shots = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 4'000'000ULL;
    const int resamples = argc > 2 ? std::atoi(argv[2]) : 4000;
#ifdef _OPENMP
    std::printf("threads: %d, shots: %llu, resamples: %d\n", omp_get_max_threads(),
                static_cast<unsigned long long>(shots), resamples);
#endif

    const ResponseParams params{0.0, 0.608, 0.0, 8};
    const double nbar = 0.85;
    const std::uint64_t seed = 42;
    bool all_equal = true;
    int failures = 0;

    auto t0 = clock_type::now();
    const auto serial = sample_shots_serial(params, nbar, shots, seed);
    const double t_sample_serial = seconds_since(t0);
    t0 = clock_type::now();
    const auto parallel = sample_shots(params, nbar, shots, seed);
    const double t_sample_parallel = seconds_since(t0);
    bool equal = serial.size() == parallel.size();
    for (std::size_t i = 0; equal && i < serial.size(); ++i)
        equal = serial[i].shot_id == parallel[i].shot_id && serial[i].bits == parallel[i].bits;
    report("sample_shots", t_sample_serial, t_sample_parallel, equal);
    all_equal &= equal;

    t0 = clock_type::now();
    const auto agg_serial = aggregate_serial(serial, params.n_bins);
    const double t_agg_serial = seconds_since(t0);
    t0 = clock_type::now();
    const auto agg_parallel = aggregate(serial, params.n_bins);
    const double t_agg_parallel = seconds_since(t0);
    equal = agg_serial.click_counts == agg_parallel.click_counts &&
            agg_serial.bin_marginals == agg_parallel.bin_marginals &&
            agg_serial.pair_joint == agg_parallel.pair_joint;
    report("aggregate", t_agg_serial, t_agg_parallel, equal);
    all_equal &= equal;

    QUncertaintyOptions q_serial{resamples, seed, false, false};
    QUncertaintyOptions q_parallel{resamples, seed, false, true};
    t0 = clock_type::now();
    const auto qs = q_uncertainty(agg_serial.click_counts, QKind::binomial, q_serial);
    const double t_q_serial = seconds_since(t0);
    t0 = clock_type::now();
    const auto qpar = q_uncertainty(agg_serial.click_counts, QKind::binomial, q_parallel);
    const double t_q_parallel = seconds_since(t0);
    equal = qs.q == qpar.q && qs.sigma == qpar.sigma;
    report("bootstrap q_uncertainty", t_q_serial, t_q_parallel, equal);
    all_equal &= equal;

    const ClickDistribution clicks = click_distribution_from(agg_serial);
    const double stages[] = {0.8, 1.0};
    BootstrapOptions b_serial{resamples, seed, false};
    BootstrapOptions b_parallel{resamples, seed, true};
    t0 = clock_type::now();
    const auto dec_serial = deconvolution_analysis(clicks, 0.608, stages, b_serial);
    const double t_dec_serial = seconds_since(t0);
    t0 = clock_type::now();
    const auto dec_parallel = deconvolution_analysis(clicks, 0.608, stages, b_parallel);
    const double t_dec_parallel = seconds_since(t0);
    equal = dec_serial.inversion.q_mandel.sigma == dec_parallel.inversion.q_mandel.sigma &&
            dec_serial.inversion.output_sigma == dec_parallel.inversion.output_sigma;
    for (std::size_t s = 0; equal && s < dec_serial.stages.size(); ++s)
        equal = dec_serial.stages[s].sigma == dec_parallel.stages[s].sigma &&
                dec_serial.stages[s].q_mandel.sigma == dec_parallel.stages[s].q_mandel.sigma;
    report("deconvolution bootstrap", t_dec_serial, t_dec_parallel, equal);
    all_equal &= equal;

    if (!all_equal) ++failures;
    return failures;
}
