// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gal/gen.hpp"

namespace gal {

// One seed's worth of campaign work.
struct SeedResult {
    uint64_t seed = 0;
    bool ok = true;
    std::string detail; // first failure, empty when ok
    uint32_t steps = 0; // shared-stack steps executed (reporting only)
};

using SeedFn = std::function<SeedResult(uint64_t seed)>;

// Reference implementation: one seed after another on the calling
// thread. Kept alongside the parallel runner so the two can be compared
// result-for-result and benchmarked against each other.
std::vector<SeedResult> run_campaign_serial(uint64_t seed0, uint64_t n, const SeedFn& fn);

// Work-shared runner. Each seed writes only its own slot, so results
// come back in seed order regardless of scheduling; with jobs <= 0 the
// thread count is the runtime default. Falls back to the serial loop
// when built without OpenMP.
std::vector<SeedResult> run_campaign_parallel(uint64_t seed0, uint64_t n, const SeedFn& fn,
                                              int jobs = 0);

struct CampaignSummary {
    uint64_t n = 0;
    uint64_t failed = 0;
    std::optional<SeedResult> first_failure;
};

CampaignSummary summarize(const std::vector<SeedResult>& rs);

// Canned workers shared by the command-line driver, the benchmark, and
// the tests.
//
// benign: generate both twins, verify the library, run monitored, and
// check bracketing plus register/return-address integrity on both
// disciplines' plain runs.
SeedFn benign_worker(GenParams p, uint64_t fuel);

// attack: generate the attack surface, apply every mutation kind, and
// require the expected verifier check, the expected monitor reason, and
// an intact heavyweight twin (integrity plus non-interference).
SeedFn attack_worker(uint64_t fuel);

} // namespace gal
