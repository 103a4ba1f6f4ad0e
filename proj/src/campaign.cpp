// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/campaign.hpp"

#include "gal/monitor.hpp"
#include "gal/properties.hpp"
#include "gal/verifier.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gal {

std::vector<SeedResult> run_campaign_serial(uint64_t seed0, uint64_t n, const SeedFn& fn) {
    std::vector<SeedResult> out(n);
    for (uint64_t i = 0; i < n; ++i)
        out[i] = fn(seed0 + i);
    return out;
}

std::vector<SeedResult> run_campaign_parallel(uint64_t seed0, uint64_t n, const SeedFn& fn,
                                              int jobs) {
#ifdef _OPENMP
    std::vector<SeedResult> out(n);
    if (jobs > 0)
        omp_set_num_threads(jobs);
    int64_t sn = static_cast<int64_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < sn; ++i)
        out[static_cast<size_t>(i)] = fn(seed0 + static_cast<uint64_t>(i));
    return out;
#else
    (void)jobs;
    return run_campaign_serial(seed0, n, fn);
#endif
}

CampaignSummary summarize(const std::vector<SeedResult>& rs) {
    CampaignSummary s;
    s.n = rs.size();
    for (const auto& r : rs) {
        if (r.ok)
            continue;
        ++s.failed;
        if (!s.first_failure)
            s.first_failure = r;
    }
    return s;
}

namespace {

SeedResult fail(uint64_t seed, std::string what) { return {seed, false, std::move(what), 0}; }

} // namespace

SeedFn benign_worker(GenParams p, uint64_t fuel) {
    return [p, fuel](uint64_t seed) -> SeedResult {
        GenOut g;
        try {
            g = gen_library(seed, p);
        } catch (const std::exception& e) {
            return fail(seed, std::string("rejected: ") + e.what());
        }
        VerdictReport vr = verify_library(g.prog);
        if (!vr.ok) {
            auto v = vr.all();
            return fail(seed, "verifier: [" + v[0].check + "] " + v[0].detail);
        }
        MonitoredTrace mt = run_monitored(g.prog, PolicyKind::NaClDefault, fuel);
        if (mt.outcome == MonitorOutcome::OverlayErrored)
            return fail(seed, "monitor: " + to_string(mt.error->reason) + " " + mt.error->detail);
        if (mt.outcome == MonitorOutcome::FuelExhausted)
            return fail(seed, "monitor: fuel exhausted");
        Trace tz = run(g.prog, Strategy::ZeroCost, fuel);
        Trace tn = run(g.nacl_prog, Strategy::NaClHeavy, fuel);
        for (auto* pr : {&tz, &tn})
            if (pr->outcome != Outcome::Halted)
                return fail(seed, pr == &tz ? "shared-stack run did not halt"
                                            : "heavyweight run did not halt");
        WbReport wz = well_bracketing(tz);
        if (!wz.ok)
            return fail(seed, "bracketing (shared-stack): " + wz.why);
        WbReport wn = well_bracketing(tn);
        if (!wn.ok)
            return fail(seed, "bracketing (heavyweight): " + wn.why);
        for (auto [prog, strat, tr, tag] :
             {std::tuple{&g.prog, Strategy::ZeroCost, &tz, "shared-stack"},
              std::tuple{&g.nacl_prog, Strategy::NaClHeavy, &tn, "heavyweight"}}) {
            PropReport c = check_csr_integrity(*prog, strat, *tr);
            if (!c.ok)
                return fail(seed, std::string("saved-register integrity (") + tag + "): " + c.why);
            PropReport r = check_ra_integrity(*prog, strat, *tr);
            if (!r.ok)
                return fail(seed, std::string("return-address integrity (") + tag + "): " + r.why);
        }
        return {seed, true, {}, static_cast<uint32_t>(tz.steps.size())};
    };
}

SeedFn attack_worker(uint64_t fuel) {
    return [fuel](uint64_t seed) -> SeedResult {
        GenOut g;
        try {
            g = gen_library(seed, GenParams::attack_ready());
        } catch (const std::exception& e) {
            return fail(seed, std::string("rejected: ") + e.what());
        }
        for (MutationKind k : kAllMutations) {
            auto mz = mutate(g.prog, k, seed);
            auto mn = mutate(g.nacl_prog, k, seed);
            if (!mz || !mn)
                return fail(seed, to_string(k) + ": no mutation site");
            AttackExpectation ex = expectation(k);
            VerdictReport vr = verify_library(*mz);
            if (!vr.contains(ex.check))
                return fail(seed, to_string(k) + ": verifier missed " + ex.check);
            MonitoredTrace mt = run_monitored(*mz, PolicyKind::NaClDefault, fuel);
            if (mt.outcome != MonitorOutcome::OverlayErrored)
                return fail(seed, to_string(k) + ": monitor saw nothing");
            if (mt.error->reason != ex.reason)
                return fail(seed, to_string(k) + ": monitor reason " +
                                      to_string(mt.error->reason) + ", expected " +
                                      to_string(ex.reason));
            Trace tn = run(*mn, Strategy::NaClHeavy, fuel);
            PropReport c = check_csr_integrity(*mn, Strategy::NaClHeavy, tn);
            if (!c.ok)
                return fail(seed, to_string(k) + ": heavyweight saved-register: " + c.why);
            PropReport r = check_ra_integrity(*mn, Strategy::NaClHeavy, tn);
            if (!r.ok)
                return fail(seed, to_string(k) + ": heavyweight return-address: " + r.why);
            NiReport ni = check_strong_ni(*mn, Strategy::NaClHeavy, tn, PolicyKind::NaClDefault,
                                          seed, fuel);
            if (!ni.ok)
                return fail(seed, to_string(k) + ": heavyweight non-interference: " + ni.why);
        }
        return {seed, true, {}, 0};
    };
}

} // namespace gal
