// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
//
// Times the serial campaign loop against the work-shared one on the
// same seed range and cross-checks that they produce identical results.
#include <chrono>
#include <cstdio>

#include "CLI11.hpp"
#include "gal/campaign.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace gal;

namespace {

double secs(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

} // namespace

int main(int argc, char** argv) {
    uint64_t n = 400, seed0 = 1, fuel = 100000;
    int jobs = 0;
    std::string profile = "benign";

    CLI::App app{"serial vs work-shared campaign benchmark"};
    app.add_option("--n", n, "number of seeds");
    app.add_option("--seed", seed0, "first seed");
    app.add_option("--profile", profile, "benign|attack")
        ->check(CLI::IsMember({"benign", "attack"}));
    app.add_option("--jobs", jobs, "worker threads (0 = runtime default)");
    app.add_option("--fuel", fuel, "step budget per run");
    CLI11_PARSE(app, argc, argv);

    SeedFn fn = profile == "attack" ? attack_worker(fuel)
                                    : benign_worker(GenParams::diverse(), fuel);

    auto t0 = std::chrono::steady_clock::now();
    std::vector<SeedResult> serial = run_campaign_serial(seed0, n, fn);
    auto t1 = std::chrono::steady_clock::now();
    std::vector<SeedResult> parallel = run_campaign_parallel(seed0, n, fn, jobs);
    auto t2 = std::chrono::steady_clock::now();

    size_t mismatches = 0;
    for (size_t i = 0; i < serial.size(); ++i)
        if (serial[i].seed != parallel[i].seed || serial[i].ok != parallel[i].ok ||
            serial[i].detail != parallel[i].detail || serial[i].steps != parallel[i].steps)
            ++mismatches;

    CampaignSummary sum = summarize(serial);
    double ts = secs(t0, t1), tp = secs(t1, t2);
#ifdef _OPENMP
    int threads = jobs > 0 ? jobs : omp_get_max_threads();
#else
    int threads = 1;
#endif
    std::printf("seeds:      %llu (failed %llu)\n", (unsigned long long)n,
                (unsigned long long)sum.failed);
    std::printf("serial:     %.3f s (%.0f seeds/s)\n", ts, n / ts);
    std::printf("parallel:   %.3f s (%.0f seeds/s, %d threads)\n", tp, n / tp, threads);
    std::printf("speedup:    %.2fx\n", ts / tp);
    std::printf("mismatches: %zu\n", mismatches);
    return mismatches == 0 && sum.failed == 0 ? 0 : 1;
}
