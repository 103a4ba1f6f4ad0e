// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/monitor.hpp"

#include "gal/gates.hpp"

namespace gal {

std::string to_string(OReason r) {
    switch (r) {
    case OReason::WriteOutsideFrame: return "WriteOutsideFrame";
    case OReason::RetAddrMismatch: return "RetAddrMismatch";
    case OReason::CsrNotRestored: return "CsrNotRestored";
    case OReason::CrossFunctionJump: return "CrossFunctionJump";
    case OReason::TypecheckFailed: return "TypecheckFailed";
    case OReason::SecretFlow: return "SecretFlow";
    case OReason::SecretToLibHeap: return "SecretToLibHeap";
    case OReason::ArgsNotPublic: return "ArgsNotPublic";
    case OReason::GuardUndefined: return "GuardUndefined";
    case OReason::RegionViolation: return "RegionViolation";
    case OReason::PcIncCrossing: return "PcIncCrossing";
    }
    return "?";
}

Privilege OverlayState::mem_label(const Program& prog, const Word& a) const {
    if (auto it = mem_lab.find(a); it != mem_lab.end())
        return it->second;
    if (baseline == PolicyKind::AllPublic)
        return Privilege::Untrusted;
    // nacl-default baseline, relative to the recorded classification point.
    RegionSet r = prog.layout.region_of(a);
    if (r.mem(Privilege::Untrusted))
        return Privilege::Untrusted;
    if (classify_args > 0 && a <= classify_sp && a + classify_args > classify_sp)
        return Privilege::Untrusted; // argument window (sp-n, sp]
    if (r.mem(Privilege::Trusted))
        return Privilege::Trusted;
    return Privilege::Untrusted; // outside every region
}

void classify(const Program& prog, OverlayState& ost, PolicyKind pol, uint32_t n_args) {
    (void)prog;
    ost.mem_lab.clear();
    ost.baseline = pol;
    ost.classified = true;
    ost.classify_sp = ost.m.sp;
    ost.classify_args = n_args;
    Privilege reg_label = pol == PolicyKind::AllPublic ? Privilege::Untrusted : Privilege::Trusted;
    for (auto& l : ost.reg_lab)
        l = reg_label;
}

OverlayState initial_overlay(const Program& prog) {
    OverlayState ost;
    ost.m = MachineState::initial(prog);
    ost.reg_lab.fill(Privilege::Untrusted);
    ost.baseline = PolicyKind::AllPublic; // everything public before classification
    // Bottom-most logical frame: covers the application's own stack; its
    // return-address location is a sentinel outside every region.
    OFrame mega;
    mega.base = prog.layout.sp0 + 1;
    mega.ral = prog.layout.mem_end();
    const Convention& conv = default_convention();
    for (size_t j = 0; j < conv.csr.size(); ++j)
        mega.csr_vals[j] = ost.m.reg(conv.csr[j]);
    ost.frames.push_back(mega);
    return ost;
}

namespace {

struct LV {
    Word v;
    Privilege lab;
};

// Expression evaluation with label joining; sp/pc read as public.
LV oimmval(const Program& prog, const OverlayState& ost, const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::Lit:
        return {e.lit, Privilege::Untrusted};
    case Expr::Kind::Reg:
        if (e.reg == RegName::sp)
            return {ost.m.sp, Privilege::Untrusted};
        if (e.reg == RegName::pc)
            return {ost.m.pc, Privilege::Untrusted};
        return {ost.m.reg(e.reg), ost.reg_lab[gpr_index(e.reg)]};
    case Expr::Kind::Bin: {
        LV a = oimmval(prog, ost, *e.lhs);
        LV b = oimmval(prog, ost, *e.rhs);
        Privilege lab = join(a.lab, b.lab);
        switch (e.op) {
        case BinOp::Add: return {a.v + b.v, lab};
        case BinOp::Monus: return {monus(a.v, b.v), lab};
        case BinOp::Mul: return {a.v * b.v, lab};
        }
    }
    }
    return {0, Privilege::Untrusted};
}

// Stack writes stay inside the current logical frame and off the return
// address; heap writes are not frame-constrained.
bool writeable(const Program& prog, const OverlayState& ost, const Word& a) {
    if (!prog.layout.region_of(a).any_stack())
        return true;
    const OFrame& top = ost.frames.back();
    return a >= top.base && a != top.ral;
}

// Both addresses inside one declared function, with the source exempt
// when it lies outside every declared function.
bool in_same_func(const Program& prog, const Word& src, const Word& dst) {
    const FuncMeta* f = prog.func_at(src);
    if (!f)
        return true;
    return dst >= f->lo && dst < f->hi;
}

std::array<Word, 4> csr_snapshot(const MachineState& m) {
    const Convention& conv = default_convention();
    std::array<Word, 4> s;
    for (size_t j = 0; j < conv.csr.size(); ++j)
        s[j] = m.reg(conv.csr[j]);
    return s;
}

bool csr_restored(const OverlayState& ost) {
    const Convention& conv = default_convention();
    const OFrame& top = ost.frames.back();
    for (size_t j = 0; j < conv.csr.size(); ++j)
        if (ost.m.reg(conv.csr[j]) != top.csr_vals[j])
            return false;
    return true;
}

OStepOut oerr(OReason r, const Word& pc, std::string detail) {
    return {StepTag::Error, 0, OverlayError{r, pc, std::move(detail)}};
}

OReason map_machine(ErrKind k) {
    switch (k) {
    case ErrKind::Guard: return OReason::GuardUndefined;
    case ErrKind::PcCross: return OReason::PcIncCrossing;
    default: return OReason::RegionViolation;
    }
}

// Runs the concrete step and maps machine failures to overlay reasons.
OStepOut machine_then(const Program& prog, OverlayState& ost) {
    StepOut so = step(prog, ost.m, Strategy::ZeroCost);
    if (so.tag == StepTag::Halted)
        return {StepTag::Halted, so.micro_ops, std::nullopt};
    if (so.tag == StepTag::Error)
        return oerr(map_machine(so.ekind), ost.m.pc, so.error);
    return {StepTag::Next, so.micro_ops, std::nullopt};
}

} // namespace

OStepOut ostep(const Program& prog, OverlayState& ost, PolicyKind pol) {
    if (!prog.in_code(ost.m.pc))
        return {StepTag::Halted, 1, std::nullopt};
    const auto& [priv, cmd] = prog.code[static_cast<size_t>(ost.m.pc)];
    const bool untrusted = priv == Privilege::Untrusted;
    const Word pc = ost.m.pc;
    const Word sp = ost.m.sp;

    // Fallthrough commands must stay within the current function.
    auto pcinc_ok = [&]() -> std::optional<OStepOut> {
        if (!in_same_func(prog, pc, pc + 1))
            return oerr(OReason::PcIncCrossing, pc, "fallthrough leaves function");
        return std::nullopt;
    };

    switch (cmd.op) {
    case Op::Pop: {
        if (auto e = pcinc_ok())
            return *e;
        Privilege vlab = ost.mem_label(prog, sp);
        OStepOut r = machine_then(prog, ost);
        if (r.tag != StepTag::Next)
            return r;
        ost.reg_lab[gpr_index(cmd.reg)] = vlab;
        return r;
    }
    case Op::Push: {
        if (auto e = pcinc_ok())
            return *e;
        if (untrusted && !writeable(prog, ost, sp + 1))
            return oerr(OReason::WriteOutsideFrame, pc,
                        "push outside frame at " + Word(sp + 1).str());
        LV v = oimmval(prog, ost, cmd.e1);
        OStepOut r = machine_then(prog, ost);
        if (r.tag != StepTag::Next)
            return r;
        ost.mem_lab[sp + 1] = v.lab;
        return r;
    }
    case Op::Load: {
        if (auto e = pcinc_ok())
            return *e;
        LV a = oimmval(prog, ost, cmd.e1);
        if (untrusted && a.lab == Privilege::Trusted)
            return oerr(OReason::SecretFlow, pc, "secret-derived load address");
        std::optional<Privilege> vlab;
        if (auto addr = apply_check(cmd.check, prog, a.v))
            vlab = ost.mem_label(prog, *addr);
        OStepOut r = machine_then(prog, ost);
        if (r.tag != StepTag::Next)
            return r;
        ost.reg_lab[gpr_index(cmd.reg)] = *vlab;
        return r;
    }
    case Op::Store: {
        if (auto e = pcinc_ok())
            return *e;
        LV a = oimmval(prog, ost, cmd.e1);
        LV v = oimmval(prog, ost, cmd.e2);
        if (untrusted && a.lab == Privilege::Trusted)
            return oerr(OReason::SecretFlow, pc, "secret-derived store address");
        auto addr = apply_check(cmd.check, prog, a.v);
        if (addr && untrusted) {
            if (!writeable(prog, ost, *addr))
                return oerr(OReason::WriteOutsideFrame, pc,
                            "store outside frame at " + addr->str());
            if (v.lab == Privilege::Trusted &&
                prog.layout.region_of(*addr).heap(Privilege::Untrusted))
                return oerr(OReason::SecretToLibHeap, pc,
                            "secret stored to library heap at " + addr->str());
        }
        OStepOut r = machine_then(prog, ost);
        if (r.tag != StepTag::Next)
            return r;
        ost.mem_lab[*addr] = v.lab;
        return r;
    }
    case Op::Mov: {
        if (auto e = pcinc_ok())
            return *e;
        LV v = oimmval(prog, ost, cmd.e1);
        if (untrusted && cmd.reg == RegName::sp && v.lab == Privilege::Trusted)
            return oerr(OReason::SecretFlow, pc, "secret-derived stack pointer");
        OStepOut r = machine_then(prog, ost);
        if (r.tag != StepTag::Next)
            return r;
        if (cmd.reg != RegName::sp)
            ost.reg_lab[gpr_index(cmd.reg)] = v.lab;
        return r;
    }
    case Op::MovLabel: {
        if (auto e = pcinc_ok())
            return *e;
        Privilege old = ost.reg_lab[gpr_index(cmd.reg)];
        if (!leq(old, cmd.priv) && !leq(old, priv))
            return oerr(OReason::SecretFlow, pc, "untrusted declassification of register");
        OStepOut r = machine_then(prog, ost);
        if (r.tag != StepTag::Next)
            return r;
        ost.reg_lab[gpr_index(cmd.reg)] = cmd.priv;
        return r;
    }
    case Op::StoreLabel: {
        if (auto e = pcinc_ok())
            return *e;
        LV a = oimmval(prog, ost, cmd.e1);
        if (untrusted && a.lab == Privilege::Trusted)
            return oerr(OReason::SecretFlow, pc, "secret-derived relabel address");
        Privilege old = ost.mem_label(prog, a.v);
        if (!leq(old, cmd.priv) && !leq(old, priv))
            return oerr(OReason::SecretFlow, pc, "untrusted declassification of memory");
        OStepOut r = machine_then(prog, ost);
        if (r.tag != StepTag::Next)
            return r;
        ost.mem_lab[a.v] = cmd.priv;
        return r;
    }
    case Op::Jmp: {
        LV a = oimmval(prog, ost, cmd.e1);
        if (untrusted && a.lab == Privilege::Trusted)
            return oerr(OReason::SecretFlow, pc, "secret-derived jump target");
        if (auto tgt = apply_check(cmd.check, prog, a.v)) {
            if (!in_same_func(prog, pc, *tgt))
                return oerr(OReason::CrossFunctionJump, pc,
                            "jump leaves function to " + tgt->str());
        }
        return machine_then(prog, ost);
    }
    case Op::Call: {
        LV a = oimmval(prog, ost, cmd.e1);
        if (untrusted && a.lab == Privilege::Trusted)
            return oerr(OReason::SecretFlow, pc, "secret-derived call target");
        auto tgt = apply_check(cmd.check, prog, a.v);
        const FuncMeta* f = nullptr;
        if (tgt && untrusted) {
            f = prog.func_by_entry(*tgt);
            if (!f)
                return oerr(OReason::TypecheckFailed, pc,
                            "call target is not a declared function entry: " + tgt->str());
            Word new_ral = sp + 1;
            if (prog.layout.region_of(new_ral).any_stack() &&
                new_ral < ost.frames.back().ral + f->arity + 1)
                return oerr(OReason::TypecheckFailed, pc, "call frame overlaps caller frame");
        }
        std::array<Word, 4> snap = csr_snapshot(ost.m);
        OStepOut r = machine_then(prog, ost);
        if (r.tag != StepTag::Next)
            return r;
        ost.mem_lab[sp + 1] = Privilege::Untrusted; // return address is public
        if (untrusted)
            ost.frames.push_back({sp + 1 - f->arity, sp + 1, snap});
        return r;
    }
    case Op::Ret: {
        if (untrusted && prog.layout.region_of(sp).any_stack()) {
            if (sp != ost.frames.back().ral)
                return oerr(OReason::RetAddrMismatch, pc,
                            "ret with sp off the return-address slot");
            if (!csr_restored(ost))
                return oerr(OReason::CsrNotRestored, pc, "callee-saved register not restored");
        }
        OStepOut r = machine_then(prog, ost);
        if (r.tag != StepTag::Next)
            return r;
        if (untrusted)
            ost.frames.pop_back();
        return r;
    }
    case Op::GateCall: {
        if (!untrusted) {
            // Entering the library: the policy labels the world first.
            classify(prog, ost, pol, cmd.n_args);
            Word target = eval_expr(ost.m, cmd.e1);
            const FuncMeta* f = prog.func_by_entry(target);
            if (!f)
                return oerr(OReason::TypecheckFailed, pc,
                            "gate call target is not a declared function entry: " +
                                target.str());
            std::array<Word, 4> snap = csr_snapshot(ost.m);
            OStepOut r = machine_then(prog, ost);
            if (r.tag != StepTag::Next)
                return r;
            ost.mem_lab[sp + 1] = Privilege::Untrusted;
            ost.frames.push_back({sp + 1 - f->arity, sp + 1, snap});
            return r;
        }
        // Callback out of the library.
        Word target = eval_expr(ost.m, cmd.e1);
        uint32_t n = cmd.n_args;
        if (prog.imports.count(target)) {
            Word new_ral = sp + 1;
            if (prog.layout.region_of(new_ral).any_stack() &&
                new_ral < ost.frames.back().ral + n + 1)
                return oerr(OReason::TypecheckFailed, pc, "callback frame overlaps caller frame");
            for (uint32_t i = 1; i <= n; ++i)
                if (ost.mem_label(prog, monus(new_ral, i)) == Privilege::Trusted)
                    return oerr(OReason::ArgsNotPublic, pc,
                                "callback argument " + std::to_string(i) + " is secret");
        }
        std::array<Word, 4> snap = csr_snapshot(ost.m);
        OStepOut r = machine_then(prog, ost); // errors if not an import / bad landing
        if (r.tag != StepTag::Next)
            return r;
        ost.mem_lab[sp + 1] = Privilege::Untrusted;
        ost.frames.push_back({sp + 1 - n, sp + 1, snap});
        return r;
    }
    case Op::GateRet: {
        // Checked at both privileges: the frame stack must stay balanced.
        if (prog.layout.region_of(sp).any_stack()) {
            if (sp != ost.frames.back().ral)
                return oerr(OReason::RetAddrMismatch, pc,
                            "gate return with sp off the return-address slot");
            if (!csr_restored(ost))
                return oerr(OReason::CsrNotRestored, pc, "callee-saved register not restored");
            const Convention& conv = default_convention();
            if (!leq(ost.reg_lab[gpr_index(conv.ret_reg)], priv))
                return oerr(OReason::SecretFlow, pc, "secret return value");
        }
        OStepOut r = machine_then(prog, ost);
        if (r.tag != StepTag::Next)
            return r;
        ost.frames.pop_back();
        return r;
    }
    }
    return oerr(OReason::RegionViolation, pc, "unknown command");
}

MonitoredTrace run_monitored(const Program& prog, PolicyKind pol, uint64_t fuel) {
    MonitoredTrace mt;
    OverlayState ost = initial_overlay(prog);
    mt.init = ost;
    mt.outcome = MonitorOutcome::FuelExhausted;
    for (uint64_t i = 0; i < fuel; ++i) {
        if (!prog.in_code(ost.m.pc)) {
            mt.outcome = MonitorOutcome::Halted;
            break;
        }
        const auto& [priv, cmd] = prog.code[static_cast<size_t>(ost.m.pc)];
        StepRecord rec{ost.m.pc, ost.m.sp, priv, cmd, 1};
        OStepOut so = ostep(prog, ost, pol);
        if (so.tag == StepTag::Halted) {
            mt.outcome = MonitorOutcome::Halted;
            break;
        }
        if (so.tag == StepTag::Error) {
            mt.outcome = MonitorOutcome::OverlayErrored;
            mt.error = so.err;
            break;
        }
        rec.micro_ops = so.micro_ops;
        mt.steps.push_back(std::move(rec));
    }
    mt.final_state = std::move(ost);
    return mt;
}

bool refines(const Program& prog, const MonitoredTrace& mt, const Trace& ct, std::string* why) {
    (void)prog;
    auto fail = [&](std::string s) {
        if (why)
            *why = std::move(s);
        return false;
    };
    if (mt.steps.size() > ct.steps.size())
        return fail("monitored run is longer than the concrete run");
    for (size_t i = 0; i < mt.steps.size(); ++i) {
        const StepRecord& a = mt.steps[i];
        const StepRecord& b = ct.steps[i];
        if (a.pre_pc != b.pre_pc || a.pre_sp != b.pre_sp || a.priv != b.priv ||
            a.cmd != b.cmd || a.micro_ops != b.micro_ops)
            return fail("step " + std::to_string(i) + " differs");
    }
    if (mt.outcome != MonitorOutcome::OverlayErrored) {
        if (mt.steps.size() != ct.steps.size())
            return fail("clean monitored run shorter than concrete run");
        bool same_outcome =
            (mt.outcome == MonitorOutcome::Halted && ct.outcome == Outcome::Halted) ||
            (mt.outcome == MonitorOutcome::FuelExhausted && ct.outcome == Outcome::FuelExhausted);
        // A concrete machine error surfaces as a monitored overlay error, so
        // a clean monitored run must match a clean concrete outcome.
        if (!same_outcome)
            return fail("terminal outcomes differ");
        if (!(mt.final_state.m == ct.final_state))
            return fail("final states differ");
    }
    return true;
}

} // namespace gal
