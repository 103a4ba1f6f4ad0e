// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/records.hpp"

#include <ostream>

#include "json.hpp"

namespace gal {
namespace {

using nlohmann::json;

json stamped(const char* kind) { return json{{"schema", kRecordSchema}, {"kind", kind}}; }

const char* outcome_name(Outcome o) {
    switch (o) {
    case Outcome::Halted: return "halted";
    case Outcome::Error: return "error";
    case Outcome::FuelExhausted: return "fuel-exhausted";
    }
    return "?";
}

const char* outcome_name(MonitorOutcome o) {
    switch (o) {
    case MonitorOutcome::Halted: return "halted";
    case MonitorOutcome::OverlayErrored: return "overlay-errored";
    case MonitorOutcome::FuelExhausted: return "fuel-exhausted";
    }
    return "?";
}

uint64_t micro_total(const std::vector<StepRecord>& steps) {
    uint64_t total = 0;
    for (const auto& s : steps)
        total += s.micro_ops;
    return total;
}

} // namespace

std::string record_run(const Trace& tr) {
    json j = stamped("run");
    j["outcome"] = outcome_name(tr.outcome);
    j["steps"] = tr.steps.size();
    j["micro_ops"] = micro_total(tr.steps);
    j["final_pc"] = tr.final_state.pc.str();
    j["final_sp"] = tr.final_state.sp.str();
    if (tr.outcome == Outcome::Error && !tr.error.empty())
        j["error"] = tr.error;
    return j.dump();
}

std::string record_monitor(const MonitoredTrace& mt) {
    json j = stamped("monitor");
    j["outcome"] = outcome_name(mt.outcome);
    j["steps"] = mt.steps.size();
    j["micro_ops"] = micro_total(mt.steps);
    if (mt.error) {
        j["reason"] = to_string(mt.error->reason);
        j["pc"] = mt.error->pc.str();
        j["detail"] = mt.error->detail;
    }
    return j.dump();
}

std::string record_verify(const VerdictReport& vr) {
    json j = stamped("verify");
    j["ok"] = vr.ok;
    json vs = json::array();
    for (const auto& fr : vr.funcs) {
        for (const auto& v : fr.violations)
            vs.push_back(json{{"func", fr.func},
                              {"check", v.check},
                              {"pc", v.pc.str()},
                              {"detail", v.detail}});
    }
    j["violations"] = std::move(vs);
    return j.dump();
}

std::string record_prop(const std::string& name, bool ok, const std::string& why) {
    json j = stamped("prop");
    j["prop"] = name;
    j["ok"] = ok;
    if (!ok)
        j["why"] = why;
    return j.dump();
}

std::string record_fuzz_case(const SeedResult& r) {
    json j = stamped("fuzz-case");
    j["seed"] = r.seed;
    j["ok"] = r.ok;
    if (!r.ok)
        j["detail"] = r.detail;
    return j.dump();
}

std::string record_fuzz_summary(const CampaignSummary& s) {
    json j = stamped("fuzz-summary");
    j["n"] = s.n;
    j["failed"] = s.failed;
    if (s.first_failure) {
        j["first_failure"] =
            json{{"seed", s.first_failure->seed}, {"detail", s.first_failure->detail}};
    }
    return j.dump();
}

void write_lines(std::ostream& os, const std::vector<std::string>& lines) {
    for (const auto& l : lines)
        os << l << '\n';
}

} // namespace gal
