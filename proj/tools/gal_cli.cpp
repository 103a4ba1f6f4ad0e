// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
//
// Command-line driver: assemble, run, monitor, verify, check trace
// properties, and fuzz with generated libraries.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gal/asm.hpp"
#include "gal/campaign.hpp"
#include "gal/gen.hpp"
#include "gal/machine.hpp"
#include "gal/monitor.hpp"
#include "gal/properties.hpp"
#include "gal/records.hpp"
#include "gal/verifier.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Output {
    std::string path; // empty = stdout
    bool records = false;

    void text(const std::string& t) const {
        if (path.empty()) {
            std::cout << t;
            return;
        }
        std::ofstream out(path);
        out << t;
    }
    void lines(const std::vector<std::string>& ls) const {
        if (path.empty()) {
            gal::write_lines(std::cout, ls);
            return;
        }
        std::ofstream out(path);
        gal::write_lines(out, ls);
    }
};

gal::Program load_program(const std::string& path) { return gal::parse_asm(read_file(path)); }

gal::Discipline implied_discipline(const gal::Program& p) {
    return p.layout.shared_stack ? gal::Discipline::ZeroCost : gal::Discipline::NaCl;
}

int cmd_asm(const std::string& file, const Output& out) {
    gal::Program prog = load_program(file);
    gal::WfReport wf = gal::well_formed(prog, implied_discipline(prog));
    if (!wf.ok) {
        for (const auto& i : wf.issues)
            std::cerr << "ill-formed at " << i.addr.str() << ": " << i.what << "\n";
        return kCheckFailed;
    }
    out.text(gal::pretty_print(prog));
    return kOk;
}

int cmd_run(const std::string& file, gal::Strategy strat, uint64_t fuel, const Output& out) {
    gal::Program prog = load_program(file);
    gal::Trace tr = gal::run(prog, strat, fuel);
    if (out.records) {
        out.lines({gal::record_run(tr)});
    } else {
        uint64_t micro = 0;
        for (const auto& s : tr.steps)
            micro += s.micro_ops;
        std::ostringstream ss;
        ss << "outcome: "
           << (tr.outcome == gal::Outcome::Halted
                   ? "halted"
                   : tr.outcome == gal::Outcome::Error ? "error" : "fuel-exhausted")
           << "\nsteps: " << tr.steps.size() << "\nmicro-ops: " << micro
           << "\nfinal pc: " << tr.final_state.pc.str()
           << "\nfinal sp: " << tr.final_state.sp.str() << "\n";
        if (!tr.error.empty())
            ss << "error: " << tr.error << "\n";
        out.text(ss.str());
    }
    return tr.outcome == gal::Outcome::Halted ? kOk : kCheckFailed;
}

int cmd_monitor(const std::string& file, gal::PolicyKind pol, uint64_t fuel, const Output& out) {
    gal::Program prog = load_program(file);
    gal::MonitoredTrace mt = gal::run_monitored(prog, pol, fuel);
    if (out.records) {
        out.lines({gal::record_monitor(mt)});
    } else {
        std::ostringstream ss;
        ss << "outcome: "
           << (mt.outcome == gal::MonitorOutcome::Halted
                   ? "halted"
                   : mt.outcome == gal::MonitorOutcome::OverlayErrored ? "overlay-errored"
                                                                       : "fuel-exhausted")
           << "\nsteps: " << mt.steps.size() << "\n";
        if (mt.error)
            ss << "reason: " << gal::to_string(mt.error->reason) << "\npc: "
               << mt.error->pc.str() << "\ndetail: " << mt.error->detail << "\n";
        out.text(ss.str());
    }
    return mt.outcome == gal::MonitorOutcome::Halted ? kOk : kCheckFailed;
}

int cmd_verify(const std::string& file, const Output& out) {
    gal::Program prog = load_program(file);
    gal::VerdictReport vr = gal::verify_library(prog);
    if (out.records) {
        out.lines({gal::record_verify(vr)});
    } else {
        std::ostringstream ss;
        if (vr.ok) {
            ss << "ok: all library functions pass\n";
        } else {
            for (const auto& fr : vr.funcs)
                for (const auto& v : fr.violations)
                    ss << fr.func << ": [" << v.check << "] at " << v.pc.str() << ": "
                       << v.detail << "\n";
        }
        out.text(ss.str());
    }
    return vr.ok ? kOk : kCheckFailed;
}

int cmd_check(const std::string& file, const std::string& props, gal::Strategy strat,
              gal::PolicyKind pol, uint64_t seed, uint64_t fuel, const Output& out) {
    gal::Program prog = load_program(file);
    gal::Trace tr = gal::run(prog, strat, fuel);
    std::vector<std::pair<std::string, std::pair<bool, std::string>>> results;
    std::stringstream ss(props);
    std::string prop;
    while (std::getline(ss, prop, ',')) {
        if (prop == "wb") {
            gal::WbReport r = gal::well_bracketing(tr);
            results.push_back({prop, {r.ok, r.why}});
        } else if (prop == "csr") {
            gal::PropReport r = gal::check_csr_integrity(prog, strat, tr);
            results.push_back({prop, {r.ok, r.why}});
        } else if (prop == "ra") {
            gal::PropReport r = gal::check_ra_integrity(prog, strat, tr);
            results.push_back({prop, {r.ok, r.why}});
        } else if (prop == "ni") {
            gal::NiReport r = gal::check_strong_ni(prog, strat, tr, pol, seed, fuel);
            results.push_back({prop, {r.ok, r.why}});
        } else {
            std::cerr << "unknown property: " << prop << " (expected wb,csr,ra,ni)\n";
            return kUsage;
        }
    }
    bool all_ok = true;
    std::vector<std::string> rec;
    std::ostringstream text;
    for (const auto& [name, r] : results) {
        all_ok = all_ok && r.first;
        rec.push_back(gal::record_prop(name, r.first, r.second));
        text << name << ": " << (r.first ? "ok" : "FAIL " + r.second) << "\n";
    }
    if (out.records)
        out.lines(rec);
    else
        out.text(text.str());
    return all_ok ? kOk : kCheckFailed;
}

int cmd_fuzz(uint64_t n, uint64_t seed, const std::string& profile, int jobs, uint64_t fuel,
             const Output& out) {
    gal::SeedFn fn;
    if (profile == "benign")
        fn = gal::benign_worker(gal::GenParams::diverse(), fuel);
    else if (profile == "attack")
        fn = gal::attack_worker(fuel);
    else {
        std::cerr << "unknown profile: " << profile << " (expected benign|attack)\n";
        return kUsage;
    }
    std::vector<gal::SeedResult> rs = gal::run_campaign_parallel(seed, n, fn, jobs);
    gal::CampaignSummary sum = gal::summarize(rs);
    if (out.records) {
        std::vector<std::string> lines;
        for (const auto& r : rs)
            if (!r.ok)
                lines.push_back(gal::record_fuzz_case(r));
        lines.push_back(gal::record_fuzz_summary(sum));
        out.lines(lines);
    } else {
        std::ostringstream ss;
        ss << "seeds: " << sum.n << "\nfailed: " << sum.failed << "\n";
        if (sum.first_failure)
            ss << "first failure: seed " << sum.first_failure->seed << ": "
               << sum.first_failure->detail << "\n";
        out.text(ss.str());
    }
    return sum.failed == 0 ? kOk : kCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gated assembly laboratory"};
    app.require_subcommand(1);

    std::string file, props = "wb,csr,ra", profile = "benign", gates = "zero",
                policy = "nacl-default", out_path, format = "text";
    uint64_t fuel = 100000, seed = 1, n = 100;
    int jobs = 0;

    auto add_io = [&](CLI::App* c) {
        c->add_option("--format", format, "text|records")
            ->check(CLI::IsMember({"text", "records"}));
        c->add_option("--out", out_path, "write output to a file");
    };

    CLI::App* a_asm = app.add_subcommand("asm", "parse, check well-formedness, reprint");
    a_asm->add_option("file", file)->required();
    add_io(a_asm);

    CLI::App* a_run = app.add_subcommand("run", "execute a program");
    a_run->add_option("file", file)->required();
    a_run->add_option("--gates", gates, "zero|nacl")->check(CLI::IsMember({"zero", "nacl"}));
    a_run->add_option("--fuel", fuel, "step budget");
    add_io(a_run);

    CLI::App* a_mon = app.add_subcommand("monitor", "execute under the safety monitor");
    a_mon->add_option("file", file)->required();
    a_mon->add_option("--policy", policy, "nacl-default|all-public")
        ->check(CLI::IsMember({"nacl-default", "all-public"}));
    a_mon->add_option("--fuel", fuel, "step budget");
    add_io(a_mon);

    CLI::App* a_ver = app.add_subcommand("verify", "statically verify the library");
    a_ver->add_option("file", file)->required();
    add_io(a_ver);

    CLI::App* a_chk = app.add_subcommand("check", "check trace properties");
    a_chk->add_option("file", file)->required();
    a_chk->add_option("--props", props, "comma list of wb,csr,ra,ni");
    a_chk->add_option("--gates", gates, "zero|nacl")->check(CLI::IsMember({"zero", "nacl"}));
    a_chk->add_option("--policy", policy, "nacl-default|all-public")
        ->check(CLI::IsMember({"nacl-default", "all-public"}));
    a_chk->add_option("--seed", seed, "twin-state seed for ni");
    a_chk->add_option("--fuel", fuel, "step budget");
    add_io(a_chk);

    CLI::App* a_fuzz = app.add_subcommand("fuzz", "generated-library campaigns");
    a_fuzz->add_option("--n", n, "number of seeds");
    a_fuzz->add_option("--seed", seed, "first seed");
    a_fuzz->add_option("--profile", profile, "benign|attack")
        ->check(CLI::IsMember({"benign", "attack"}));
    a_fuzz->add_option("--jobs", jobs, "worker threads (0 = runtime default)");
    a_fuzz->add_option("--fuel", fuel, "step budget");
    add_io(a_fuzz);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    Output out{out_path, format == "records"};
    gal::Strategy strat = gates == "nacl" ? gal::Strategy::NaClHeavy : gal::Strategy::ZeroCost;
    gal::PolicyKind pol =
        policy == "all-public" ? gal::PolicyKind::AllPublic : gal::PolicyKind::NaClDefault;

    try {
        if (a_asm->parsed())
            return cmd_asm(file, out);
        if (a_run->parsed())
            return cmd_run(file, strat, fuel, out);
        if (a_mon->parsed())
            return cmd_monitor(file, pol, fuel, out);
        if (a_ver->parsed())
            return cmd_verify(file, out);
        if (a_chk->parsed())
            return cmd_check(file, props, strat, pol, seed, fuel, out);
        if (a_fuzz->parsed())
            return cmd_fuzz(n, seed, profile, jobs, fuel, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
