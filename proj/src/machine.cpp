// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/machine.hpp"

#include "gal/gates.hpp"

namespace gal {

MachineState MachineState::initial(const Program& prog) {
    MachineState st;
    st.pc = prog.entry_pc;
    st.sp = prog.layout.sp0;
    if (prog.layout.has_ctx) {
        // Context chain: the context pointer holds the first context, which
        // holds the library's parked stack pointer (one below its stack).
        st.mset(prog.layout.ctx_star, prog.layout.ctx0);
        st.mset(prog.layout.ctx0, prog.layout.stack_u.lo - 1);
    }
    for (const auto& [a, v] : prog.init_mem)
        st.mset(a, v);
    return st;
}

bool MachineState::operator==(const MachineState& o) const {
    if (pc != o.pc || sp != o.sp || regs != o.regs)
        return false;
    // Total memory: absent cells are zero, so compare modulo zero entries.
    auto it = mem.begin();
    auto jt = o.mem.begin();
    while (it != mem.end() || jt != o.mem.end()) {
        if (it != mem.end() && it->second == 0) {
            ++it;
            continue;
        }
        if (jt != o.mem.end() && jt->second == 0) {
            ++jt;
            continue;
        }
        if (it == mem.end() || jt == o.mem.end())
            return false;
        if (it->first != jt->first || it->second != jt->second)
            return false;
        ++it;
        ++jt;
    }
    return true;
}

Word eval_expr(const MachineState& st, const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::Lit:
        return e.lit;
    case Expr::Kind::Reg:
        if (e.reg == RegName::sp)
            return st.sp;
        if (e.reg == RegName::pc)
            return st.pc;
        return st.reg(e.reg);
    case Expr::Kind::Bin: {
        Word a = eval_expr(st, *e.lhs);
        Word b = eval_expr(st, *e.rhs);
        switch (e.op) {
        case BinOp::Add: return a + b;
        case BinOp::Monus: return monus(a, b);
        case BinOp::Mul: return a * b;
        }
    }
    }
    return 0;
}

namespace {

StepOut error(ErrKind k, std::string what) {
    return {StepTag::Error, 1, std::move(what), k};
}
StepOut halted() { return {StepTag::Halted, 0, {}, ErrKind::None}; }

// Incrementing pc across a privilege boundary is an error; completing a
// step to an address outside code is fine (the next step halts).
StepOut pcinc(const Program& prog, MachineState& st) {
    auto p = prog.priv_at(st.pc);
    auto q = prog.priv_at(st.pc + 1);
    if (p && q && *p != *q)
        return error(ErrKind::PcCross, "privilege boundary fallthrough at pc " + st.pc.str());
    st.pc += 1;
    return {};
}

// Does some stack region of privilege at-most `p` contain the address?
bool stack_fits(const Layout& l, const Word& a, Privilege p) {
    RegionSet r = l.region_of(a);
    return r.stack_u || (r.stack_t && p == Privilege::Trusted);
}

} // namespace

StepOut step(const Program& prog, MachineState& st, Strategy strat) {
    if (!prog.in_code(st.pc))
        return halted();
    const auto& [priv, cmd] = prog.code[static_cast<size_t>(st.pc)];
    const Layout& lay = prog.layout;

    switch (cmd.op) {
    case Op::Pop: {
        if (!lay.region_of(st.sp).any_stack())
            return halted(); // no applicable rule
        if (!stack_fits(lay, st.sp, cmd.priv))
            return error(ErrKind::Region, "pop from higher-privileged stack at pc " + st.pc.str());
        st.reg(cmd.reg) = st.mget(st.sp);
        st.sp -= 1;
        return pcinc(prog, st);
    }
    case Op::Push: {
        Word tgt = st.sp + 1;
        if (!lay.region_of(tgt).any_stack())
            return halted();
        if (!stack_fits(lay, tgt, cmd.priv))
            return error(ErrKind::Region, "push onto higher-privileged stack at pc " + st.pc.str());
        st.mset(tgt, eval_expr(st, cmd.e1));
        st.sp = tgt;
        return pcinc(prog, st);
    }
    case Op::Jmp: {
        Word n = eval_expr(st, cmd.e1);
        auto n2 = apply_check(cmd.check, prog, n);
        if (!n2)
            return error(ErrKind::Guard, "jmp check " + to_string(cmd.check) + " undefined at " + n.str());
        st.pc = *n2;
        return {};
    }
    case Op::Load: {
        Word n = eval_expr(st, cmd.e1);
        auto n2 = apply_check(cmd.check, prog, n);
        if (!n2)
            return error(ErrKind::Guard, "load check " + to_string(cmd.check) + " undefined at " + n.str());
        st.reg(cmd.reg) = st.mget(*n2);
        return pcinc(prog, st);
    }
    case Op::Store: {
        Word n = eval_expr(st, cmd.e1);
        auto n2 = apply_check(cmd.check, prog, n);
        if (!n2)
            return error(ErrKind::Guard, "store check " + to_string(cmd.check) + " undefined at " + n.str());
        st.mset(*n2, eval_expr(st, cmd.e2));
        return pcinc(prog, st);
    }
    case Op::Mov: {
        Word v = eval_expr(st, cmd.e1);
        if (cmd.reg == RegName::sp)
            st.sp = std::move(v);
        else
            st.reg(cmd.reg) = std::move(v);
        return pcinc(prog, st);
    }
    case Op::Call: {
        Word n = eval_expr(st, cmd.e1);
        auto n2 = apply_check(cmd.check, prog, n);
        if (!n2)
            return error(ErrKind::Guard, "call check " + to_string(cmd.check) + " undefined at " + n.str());
        Word tgt = st.sp + 1;
        if (!lay.region_of(tgt).any_stack())
            return error(ErrKind::Region, "call return-address push outside stack at pc " + st.pc.str());
        st.mset(tgt, st.pc + 1);
        st.sp = tgt;
        st.pc = *n2;
        return {};
    }
    case Op::Ret: {
        if (!lay.region_of(st.sp).any_stack())
            return error(ErrKind::Region, "ret with sp outside stack at pc " + st.pc.str());
        Word n = st.mget(st.sp);
        auto n2 = apply_check(cmd.check, prog, n);
        if (!n2)
            return error(ErrKind::Guard, "ret check " + to_string(cmd.check) + " undefined at " + n.str());
        st.pc = *n2;
        st.sp -= 1;
        return {};
    }
    case Op::GateCall:
        return gate_call(prog, st, strat, cmd.n_args, cmd.e1);
    case Op::GateRet:
        return gate_ret(prog, st, strat);
    case Op::MovLabel:
    case Op::StoreLabel:
        // Label ghosts: no concrete effect.
        return pcinc(prog, st);
    }
    return error(ErrKind::Region, "unknown command");
}

StepOut step_copy(const Program& prog, const MachineState& st, Strategy strat,
                  MachineState& out) {
    out = st;
    return step(prog, out, strat);
}

Trace run(const Program& prog, Strategy strat, uint64_t fuel) {
    Trace tr;
    MachineState st = MachineState::initial(prog);
    tr.init = st;
    tr.outcome = Outcome::FuelExhausted;
    for (uint64_t i = 0; i < fuel; ++i) {
        if (!prog.in_code(st.pc)) {
            tr.outcome = Outcome::Halted;
            break;
        }
        const auto& [priv, cmd] = prog.code[static_cast<size_t>(st.pc)];
        StepRecord rec{st.pc, st.sp, priv, cmd, 0};
        StepOut so = step(prog, st, strat);
        if (so.tag == StepTag::Halted) {
            tr.outcome = Outcome::Halted;
            break;
        }
        if (so.tag == StepTag::Error) {
            tr.outcome = Outcome::Error;
            tr.error = so.error;
            break;
        }
        rec.micro_ops = so.micro_ops;
        tr.steps.push_back(std::move(rec));
    }
    tr.final_state = std::move(st);
    return tr;
}

MachineState state_at(const Program& prog, Strategy strat, const Trace& tr, size_t i) {
    MachineState st = tr.init;
    for (size_t k = 0; k < i && k < tr.steps.size(); ++k)
        step(prog, st, strat);
    return st;
}

} // namespace gal
