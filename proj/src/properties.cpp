// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/properties.hpp"

namespace gal {

WbReport well_bracketing(const Trace& tr) {
    WbReport rep;
    std::vector<size_t> open;
    for (size_t i = 0; i < tr.steps.size(); ++i) {
        const StepRecord& r = tr.steps[i];
        if (r.cmd.op == Op::GateCall) {
            open.push_back(rep.segments.size());
            rep.segments.push_back({i, std::nullopt, r.priv});
        } else if (r.cmd.op == Op::GateRet) {
            if (open.empty()) {
                rep.ok = false;
                rep.why = "gate return with no open gate call at step " + std::to_string(i);
                return rep;
            }
            GateSegment& seg = rep.segments[open.back()];
            open.pop_back();
            seg.ret_idx = i;
            if (r.priv == seg.opener) {
                rep.ok = false;
                rep.why = "gate closed at the opening privilege at step " + std::to_string(i);
                return rep;
            }
        }
    }
    if (tr.outcome == Outcome::Halted && !open.empty()) {
        rep.ok = false;
        rep.why = std::to_string(open.size()) + " gate(s) still open at halt";
    }
    return rep;
}

std::set<Word> return_address_locs(const Trace& tr, Privilege p, size_t n) {
    std::set<Word> locs;
    n = std::min(n, tr.steps.size());
    for (size_t i = 0; i < n; ++i) {
        const StepRecord& r = tr.steps[i];
        // Gate returns execute on the side opposite their opener, so
        // they consume slots regardless of which privilege planted them.
        if (r.cmd.op == Op::GateRet) {
            locs.erase(r.pre_sp);
            continue;
        }
        if (r.priv != p)
            continue;
        if (r.cmd.op == Op::Call || r.cmd.op == Op::GateCall)
            locs.insert(r.pre_sp + 1);
        else if (r.cmd.op == Op::Ret)
            locs.erase(r.pre_sp);
    }
    return locs;
}

namespace {

std::array<Word, 4> csrs_of(const MachineState& st) {
    const Convention& conv = default_convention();
    std::array<Word, 4> out;
    for (size_t j = 0; j < conv.csr.size(); ++j)
        out[j] = st.reg(conv.csr[j]);
    return out;
}

} // namespace

PropReport check_csr_integrity(const Program& prog, Strategy strat, const Trace& tr) {
    PropReport rep;
    MachineState st = tr.init;
    std::vector<std::pair<Privilege, std::array<Word, 4>>> open;
    const Convention& conv = default_convention();
    for (size_t i = 0; i < tr.steps.size(); ++i) {
        const StepRecord& r = tr.steps[i];
        if (r.cmd.op == Op::GateCall)
            open.emplace_back(r.priv, csrs_of(st));
        StepOut so = step(prog, st, strat);
        if (so.tag != StepTag::Next) {
            rep.ok = false;
            rep.why = "trace replay diverged at step " + std::to_string(i);
            return rep;
        }
        if (r.cmd.op == Op::GateRet) {
            if (open.empty()) {
                rep.ok = false;
                rep.why = "gate return with no open gate call at step " + std::to_string(i);
                return rep;
            }
            auto [p, snap] = open.back();
            open.pop_back();
            if (p == Privilege::Trusted) {
                std::array<Word, 4> now = csrs_of(st);
                for (size_t j = 0; j < now.size(); ++j)
                    if (now[j] != snap[j]) {
                        rep.ok = false;
                        rep.why = to_string(conv.csr[j]) + " changed across the gate closing at step " +
                                  std::to_string(i);
                        return rep;
                    }
            }
        }
    }
    return rep;
}

PropReport check_ra_integrity(const Program& prog, Strategy strat, const Trace& tr) {
    PropReport rep;
    MachineState st = tr.init;
    std::map<Word, Word> t_ra; // live trusted return-address slots and their values
    struct OpenSeg {
        Privilege p;
        Word pre_pc, pre_sp;
        std::map<Word, Word> expect;
    };
    std::vector<OpenSeg> open;
    for (size_t i = 0; i < tr.steps.size(); ++i) {
        const StepRecord& r = tr.steps[i];
        const Word pre_pc = st.pc, pre_sp = st.sp;
        const bool trusted = r.priv == Privilege::Trusted;
        if (r.cmd.op == Op::GateCall) {
            OpenSeg seg{r.priv, pre_pc, pre_sp, {}};
            if (trusted) {
                seg.expect = t_ra;
                seg.expect[pre_sp + 1] = pre_pc + 1;
            }
            open.push_back(std::move(seg));
        }
        StepOut so = step(prog, st, strat);
        if (so.tag != StepTag::Next) {
            rep.ok = false;
            rep.why = "trace replay diverged at step " + std::to_string(i);
            return rep;
        }
        if (trusted && (r.cmd.op == Op::Call || r.cmd.op == Op::GateCall))
            t_ra[pre_sp + 1] = pre_pc + 1;
        if (trusted && r.cmd.op == Op::Ret)
            t_ra.erase(pre_sp);
        if (r.cmd.op == Op::GateRet) {
            if (trusted)
                t_ra.erase(pre_sp);
            if (open.empty()) {
                rep.ok = false;
                rep.why = "gate return with no open gate call at step " + std::to_string(i);
                return rep;
            }
            OpenSeg seg = std::move(open.back());
            open.pop_back();
            if (seg.p == Privilege::Trusted) {
                if (st.pc != seg.pre_pc + 1) {
                    rep.ok = false;
                    rep.why = "gate closing at step " + std::to_string(i) +
                              " returned to pc " + st.pc.str() + ", expected " +
                              Word(seg.pre_pc + 1).str();
                    return rep;
                }
                if (st.sp != seg.pre_sp) {
                    rep.ok = false;
                    rep.why = "gate closing at step " + std::to_string(i) +
                              " left sp at " + st.sp.str() + ", expected " + seg.pre_sp.str();
                    return rep;
                }
                for (const auto& [loc, val] : seg.expect)
                    if (st.mget(loc) != val) {
                        rep.ok = false;
                        rep.why = "return-address slot " + loc.str() +
                                  " tampered across the gate closing at step " +
                                  std::to_string(i);
                        return rep;
                    }
                t_ra.erase(seg.pre_sp + 1);
            }
        }
    }
    return rep;
}

MachineState low_equiv_mutate(const Program& prog, const MachineState& st, PolicyKind pol,
                              std::mt19937_64& rng) {
    MachineState out = st;
    if (pol == PolicyKind::AllPublic)
        return out;
    for (auto& r : out.regs)
        r = Word(rng());
    const Layout& L = prog.layout;
    Word chain_top = L.has_ctx ? out.mget(L.ctx_star) : Word(0);
    for (auto& [a, v] : out.mem) {
        if (!L.heap_t.contains(a))
            continue;
        if (L.has_ctx && (a == L.ctx_star || (a >= L.ctx0 && a <= chain_top)))
            continue; // gate bookkeeping, not program secrets
        v = Word(rng());
    }
    return out;
}

namespace {

struct ReentryOut {
    bool reentered = false;
    uint64_t u_steps = 0;
    bool via_call = false; // re-entered through a callback gate call
    uint32_t call_args = 0;
    MachineState st;
    Outcome terminal = Outcome::Halted; // meaningful when !reentered
};

// Runs from a state whose pc sits on a trusted gate call until control
// is back in trusted code, counting untrusted-privilege steps.
ReentryOut run_to_reentry(const Program& prog, Strategy strat, MachineState st, uint64_t fuel) {
    ReentryOut out;
    for (uint64_t n = 0; n < fuel; ++n) {
        auto pv = prog.priv_at(st.pc);
        if (!pv) {
            out.terminal = Outcome::Halted;
            break;
        }
        if (n > 0 && *pv == Privilege::Trusted) {
            out.reentered = true;
            break;
        }
        const Command& c = *prog.cmd_at(st.pc);
        const bool untrusted = *pv == Privilege::Untrusted;
        const bool is_gc = c.op == Op::GateCall;
        const uint32_t na = c.n_args;
        StepOut so = step(prog, st, strat);
        if (so.tag == StepTag::Halted) {
            out.terminal = Outcome::Halted;
            break;
        }
        if (so.tag == StepTag::Error) {
            out.terminal = Outcome::Error;
            break;
        }
        if (untrusted) {
            out.u_steps++;
            out.via_call = is_gc;
            out.call_args = na;
        }
        if (n + 1 == fuel)
            out.terminal = Outcome::FuelExhausted;
    }
    out.st = std::move(st);
    return out;
}

bool heap_u_equal(const Layout& L, const MachineState& a, const MachineState& b,
                  std::string* cell) {
    std::set<Word> keys;
    for (const auto& [k, v] : a.mem)
        if (L.heap_u.contains(k))
            keys.insert(k);
    for (const auto& [k, v] : b.mem)
        if (L.heap_u.contains(k))
            keys.insert(k);
    for (const Word& k : keys)
        if (a.mget(k) != b.mget(k)) {
            if (cell)
                *cell = k.str();
            return false;
        }
    return true;
}

} // namespace

NiReport check_strong_ni(const Program& prog, Strategy strat, const Trace& tr, PolicyKind pol,
                         uint64_t seed, uint64_t fuel) {
    NiReport rep;
    if (pol == PolicyKind::AllPublic)
        return rep; // nothing is secret, the twin run is identical
    auto fail = [&](size_t seg, std::string why) {
        rep.ok = false;
        rep.why = "segment " + std::to_string(seg) + ": " + std::move(why);
        return rep;
    };
    for (size_t i = 0; i < tr.steps.size(); ++i) {
        const StepRecord& r = tr.steps[i];
        if (r.cmd.op != Op::GateCall || r.priv != Privilege::Trusted)
            continue;
        size_t seg = rep.segments++;
        MachineState a0 = state_at(prog, strat, tr, i);
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
        MachineState b0 = low_equiv_mutate(prog, a0, pol, rng);
        ReentryOut ra = run_to_reentry(prog, strat, std::move(a0), fuel);
        ReentryOut rb = run_to_reentry(prog, strat, std::move(b0), fuel);
        if (ra.reentered != rb.reentered)
            return fail(seg, "one run re-entered trusted code, the twin did not");
        if (!ra.reentered)
            continue; // both stayed in the library: nothing to compare
        if (ra.u_steps != rb.u_steps)
            return fail(seg, "untrusted step counts differ: " + std::to_string(ra.u_steps) +
                                 " vs " + std::to_string(rb.u_steps));
        if (ra.st.pc != rb.st.pc)
            return fail(seg, "re-entry pc differs: " + ra.st.pc.str() + " vs " + rb.st.pc.str());
        if (ra.via_call != rb.via_call)
            return fail(seg, "re-entry kinds differ (callback vs return)");
        std::string cell;
        if (!heap_u_equal(prog.layout, ra.st, rb.st, &cell))
            return fail(seg, "library heap cell " + cell + " differs at re-entry");
        if (ra.via_call) {
            if (ra.st.sp != rb.st.sp)
                return fail(seg, "callback sp differs at re-entry");
            for (uint32_t k = 1; k <= ra.call_args; ++k) {
                Word loc = monus(ra.st.sp, k);
                if (ra.st.mget(loc) != rb.st.mget(loc))
                    return fail(seg, "callback argument slot " + loc.str() + " differs");
            }
        } else {
            const Convention& conv = default_convention();
            if (ra.st.reg(conv.ret_reg) != rb.st.reg(conv.ret_reg))
                return fail(seg, "return value differs at re-entry");
        }
    }
    return rep;
}

} // namespace gal
