// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gal/campaign.hpp"
#include "gal/machine.hpp"
#include "gal/monitor.hpp"
#include "gal/properties.hpp"
#include "gal/verifier.hpp"

namespace gal {

// Machine-readable output: one JSON object per line, each stamped with
// {"schema": "gal.v1", "kind": ...}. Every producer below returns the
// serialized line without a trailing newline.
inline constexpr const char* kRecordSchema = "gal.v1";

std::string record_run(const Trace& tr);
std::string record_monitor(const MonitoredTrace& mt);
std::string record_verify(const VerdictReport& vr);
std::string record_prop(const std::string& name, bool ok, const std::string& why);
std::string record_fuzz_case(const SeedResult& r);
std::string record_fuzz_summary(const CampaignSummary& s);

void write_lines(std::ostream& os, const std::vector<std::string>& lines);

} // namespace gal
