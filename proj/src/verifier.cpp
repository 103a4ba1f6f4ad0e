// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/verifier.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace gal {

namespace {

constexpr const char* kCfg = "cfg";
constexpr const char* kCsrRestore = "csr-restore";
constexpr const char* kSpDiscipline = "sp-discipline";
constexpr const char* kFrameBounds = "frame-bounds";
constexpr const char* kCallTyping = "call-typing";
constexpr const char* kInitBeforeUse = "init-before-use";
constexpr const char* kGuardDiscipline = "guard-discipline";
constexpr const char* kRetValueInit = "ret-value-init";
constexpr const char* kRetDiscipline = "ret-discipline";

// Slot offsets outside this band are dropped rather than tracked.
constexpr long long kFrameDepthCap = 64;

} // namespace

AbsVal meet(const AbsVal& a, const AbsVal& b) {
    if (a == b)
        return a;
    return AbsVal::uninit();
}

AbsVal AbsFrame::slot(long long o) const {
    auto it = slots.find(o);
    return it == slots.end() ? AbsVal::uninit() : it->second;
}

void AbsFrame::set_slot(long long o, const AbsVal& v) {
    if (v.k == AbsVal::K::Uninit || o < -kFrameDepthCap || o > kFrameDepthCap)
        slots.erase(o);
    else
        slots[o] = v;
}

bool AbsFrame::operator==(const AbsFrame& o) const {
    return regs == o.regs && slots == o.slots && sp_off == o.sp_off;
}

AbsFrame meet(const AbsFrame& a, const AbsFrame& b) {
    AbsFrame r;
    for (size_t i = 0; i < NUM_REGS; ++i)
        r.regs[i] = meet(a.regs[i], b.regs[i]);
    for (const auto& [o, v] : a.slots) {
        AbsVal m = meet(v, b.slot(o));
        if (m.k != AbsVal::K::Uninit)
            r.slots[o] = m;
    }
    if (a.sp_off && b.sp_off && *a.sp_off == *b.sp_off)
        r.sp_off = a.sp_off;
    else
        r.sp_off = std::nullopt;
    return r;
}

AbsFrame entry_frame(const FuncMeta& f) {
    AbsFrame F;
    for (auto& v : F.regs)
        v = AbsVal::uninit();
    const Convention& conv = default_convention();
    for (RegName r : conv.csr)
        F.regs[gpr_index(r)] = AbsVal::callee_saved(r);
    for (uint32_t i = 1; i <= f.arity; ++i)
        F.set_slot(-static_cast<long long>(i), AbsVal::init());
    F.sp_off = 0;
    return F;
}

bool VerdictReport::contains(const std::string& check) const {
    for (const auto& fr : funcs)
        for (const auto& v : fr.violations)
            if (v.check == check)
                return true;
    return false;
}

std::vector<Violation> VerdictReport::all() const {
    std::vector<Violation> out;
    for (const auto& fr : funcs)
        out.insert(out.end(), fr.violations.begin(), fr.violations.end());
    return out;
}

const CfgBlock* Cfg::at(const Word& leader) const {
    for (const auto& b : blocks)
        if (b.lo == leader)
            return &b;
    return nullptr;
}

std::optional<std::string> build_cfg(const Program& prog, const FuncMeta& f, Cfg& out) {
    out.blocks.clear();
    std::set<Word> leaders{f.lo};
    for (Word a = f.lo; a < f.hi; ++a) {
        const Command& c = *prog.cmd_at(a);
        if (c.op == Op::Jmp) {
            if (c.check.kind != CheckKind::Kind::Code)
                return "jump through a non-code check at " + a.str();
            if (c.e1.kind != Expr::Kind::Lit)
                return "computed jump target at " + a.str();
            const Word& t = c.e1.lit;
            if (t < f.lo || t >= f.hi)
                return "jump leaves the function at " + a.str();
            leaders.insert(t);
            if (a + 1 < f.hi)
                leaders.insert(a + 1);
        } else if (c.op == Op::Ret || c.op == Op::GateRet) {
            if (a + 1 < f.hi)
                leaders.insert(a + 1);
        }
    }
    std::vector<Word> ls(leaders.begin(), leaders.end());
    for (size_t i = 0; i < ls.size(); ++i) {
        CfgBlock b;
        b.lo = ls[i];
        b.hi = i + 1 < ls.size() ? ls[i + 1] : f.hi;
        const Command& last = *prog.cmd_at(b.hi - 1);
        if (last.op == Op::Jmp) {
            b.succs.push_back(last.e1.lit);
        } else if (last.op != Op::Ret && last.op != Op::GateRet) {
            if (b.hi == f.hi)
                return "control can fall off the function end at " + Word(b.hi - 1).str();
            b.succs.push_back(b.hi);
        }
        out.blocks.push_back(std::move(b));
    }
    return std::nullopt;
}

namespace {

// Abstract value of an expression; sp and pc always read as initialized.
AbsVal aval(const AbsFrame& F, const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::Lit:
        return AbsVal::init();
    case Expr::Kind::Reg:
        if (!is_gpr(e.reg))
            return AbsVal::init();
        return F.regs[gpr_index(e.reg)];
    case Expr::Kind::Bin:
        return meet(aval(F, *e.lhs), aval(F, *e.rhs));
    }
    return AbsVal::uninit();
}

void gpr_reads(const Expr& e, std::vector<RegName>& out) {
    switch (e.kind) {
    case Expr::Kind::Lit:
        return;
    case Expr::Kind::Reg:
        if (is_gpr(e.reg))
            out.push_back(e.reg);
        return;
    case Expr::Kind::Bin:
        gpr_reads(*e.lhs, out);
        gpr_reads(*e.rhs, out);
        return;
    }
}

struct CalleeRes {
    std::optional<uint32_t> arity;
    std::vector<std::string> errs;
};

CalleeRes resolve_call(const Program& prog, const Command& cmd) {
    CalleeRes r;
    if (cmd.check.kind == CheckKind::Kind::Code) {
        if (cmd.e1.kind != Expr::Kind::Lit) {
            r.errs.push_back("computed call target");
            return r;
        }
        const FuncMeta* g = prog.func_by_entry(cmd.e1.lit);
        if (!g) {
            r.errs.push_back("call target is not a declared function entry");
            return r;
        }
        if (g->exported)
            r.errs.push_back("call targets an exported function");
        r.arity = g->arity;
        return r;
    }
    if (cmd.check.kind == CheckKind::Kind::Table) {
        auto it = prog.tables.find(cmd.check.table);
        if (it == prog.tables.end() || it->second.empty()) {
            r.errs.push_back("unknown or empty call table");
            return r;
        }
        std::optional<uint32_t> m;
        for (const Word& t : it->second) {
            const FuncMeta* g = prog.func_by_entry(t);
            if (!g) {
                r.errs.push_back("table entry is not a declared function entry");
                return r;
            }
            if (g->exported)
                r.errs.push_back("table entry is an exported function");
            if (m && *m != g->arity) {
                r.errs.push_back("table entries disagree on arity");
                return r;
            }
            m = g->arity;
        }
        r.arity = m;
        return r;
    }
    r.errs.push_back("call through an unsupported check");
    return r;
}

// Effect of one instruction on the abstract frame. Total: never fails,
// degrades to Uninit/unknown instead.
void transfer(const Program& prog, const Command& c, AbsFrame& F) {
    long long disp = 0;
    switch (c.op) {
    case Op::Pop:
        if (F.sp_off) {
            AbsVal v = F.slot(*F.sp_off);
            F.set_slot(*F.sp_off, AbsVal::uninit());
            if (is_gpr(c.reg))
                F.regs[gpr_index(c.reg)] = v;
            *F.sp_off -= 1;
        } else if (is_gpr(c.reg)) {
            F.regs[gpr_index(c.reg)] = AbsVal::uninit();
        }
        break;
    case Op::Push:
        if (F.sp_off) {
            *F.sp_off += 1;
            F.set_slot(*F.sp_off, aval(F, c.e1));
        }
        break;
    case Op::Load: {
        AbsVal v = AbsVal::uninit();
        if (c.check.kind == CheckKind::Kind::Heap && c.check.p == Privilege::Untrusted)
            v = AbsVal::init();
        else if (c.check.is_id() && is_sp_displacement(c.e1, disp) && F.sp_off)
            v = F.slot(*F.sp_off + disp);
        if (is_gpr(c.reg))
            F.regs[gpr_index(c.reg)] = v;
        break;
    }
    case Op::Store:
        if (c.check.is_id() && is_sp_displacement(c.e1, disp) && F.sp_off)
            F.set_slot(*F.sp_off + disp, aval(F, c.e2));
        break;
    case Op::Mov:
        if (c.reg == RegName::sp) {
            if (is_sp_displacement(c.e1, disp) && F.sp_off)
                *F.sp_off += disp;
            else
                F.sp_off = std::nullopt;
        } else if (is_gpr(c.reg)) {
            F.regs[gpr_index(c.reg)] = aval(F, c.e1);
        }
        break;
    case Op::Call:
    case Op::GateCall: {
        std::optional<uint32_t> m;
        if (c.op == Op::Call)
            m = resolve_call(prog, c).arity;
        else
            m = c.n_args;
        if (F.sp_off && m) {
            // The callee owns the argument window and everything above it.
            for (auto it = F.slots.begin(); it != F.slots.end();)
                if (it->first > *F.sp_off - static_cast<long long>(*m))
                    it = F.slots.erase(it);
                else
                    ++it;
        } else {
            F.slots.clear();
        }
        const Convention& conv = default_convention();
        for (RegName r : conv.clear_set)
            if (!conv.is_csr(r))
                F.regs[gpr_index(r)] = AbsVal::uninit();
        F.regs[gpr_index(conv.ret_reg)] = AbsVal::init();
        break;
    }
    case Op::MovLabel:
    case Op::StoreLabel:
    case Op::Jmp:
    case Op::Ret:
    case Op::GateRet:
        break;
    }
}

struct Checker {
    const Program& prog;
    const FuncMeta& f;
    std::vector<Violation>& out;

    void flag(const char* check, const Word& pc, std::string detail) {
        out.push_back({check, pc, std::move(detail)});
    }

    // Every general-purpose register read in e must be Init.
    void require_init_operands(const AbsFrame& F, const Expr& e, const Word& pc,
                               const char* what) {
        std::vector<RegName> rs;
        gpr_reads(e, rs);
        for (RegName r : rs) {
            const AbsVal& v = F.regs[gpr_index(r)];
            if (v.k == AbsVal::K::Uninit)
                flag(kInitBeforeUse, pc,
                     std::string(what) + " reads uninitialized " + to_string(r));
            else if (v.k == AbsVal::K::CalleeSaved)
                flag(kInitBeforeUse, pc,
                     std::string(what) + " reads callee-saved " + to_string(r));
        }
    }

    // True when e is exactly one register holding a saved callee-saved value.
    bool is_saved_csr_reg(const AbsFrame& F, const Expr& e) const {
        return e.kind == Expr::Kind::Reg && is_gpr(e.reg) &&
               F.regs[gpr_index(e.reg)].k == AbsVal::K::CalleeSaved;
    }

    void check_stack_write(const AbsFrame& F, long long disp, const Word& pc,
                           const char* what) {
        if (!F.sp_off) {
            flag(kSpDiscipline, pc, std::string(what) + " with unknown stack offset");
            return;
        }
        long long o = *F.sp_off + disp;
        if (o == 0)
            flag(kFrameBounds, pc,
                 std::string(what) + " hits the return-address slot");
        else if (o < -static_cast<long long>(f.arity))
            flag(kFrameBounds, pc,
                 std::string(what) + " below the frame (offset " + std::to_string(o) + ")");
    }

    void check_returnish(const AbsFrame& F, const Word& pc) {
        if (!F.sp_off)
            flag(kSpDiscipline, pc, "return with unknown stack offset");
        else if (*F.sp_off != 0)
            flag(kSpDiscipline, pc,
                 "return with stack offset " + std::to_string(*F.sp_off));
        const Convention& conv = default_convention();
        for (RegName r : conv.csr)
            if (!(F.regs[gpr_index(r)] == AbsVal::callee_saved(r)))
                flag(kCsrRestore, pc, to_string(r) + " not restored at return");
    }

    void check_args_window(const AbsFrame& F, uint32_t m, const Word& pc) {
        if (!F.sp_off) {
            flag(kSpDiscipline, pc, "call with unknown stack offset");
            return;
        }
        for (uint32_t i = 0; i < m; ++i) {
            long long o = *F.sp_off - static_cast<long long>(i);
            if (!(F.slot(o) == AbsVal::init())) {
                flag(kCallTyping, pc,
                     "argument slot at offset " + std::to_string(o) + " not initialized");
                return;
            }
        }
    }

    void check(const AbsFrame& F, const Word& pc) {
        const Command& c = *prog.cmd_at(pc);
        long long disp = 0;
        switch (c.op) {
        case Op::Pop: {
            if (!F.sp_off) {
                flag(kSpDiscipline, pc, "pop with unknown stack offset");
                break;
            }
            AbsVal v = F.slot(*F.sp_off);
            if (v.k == AbsVal::K::CalleeSaved && v.csr == c.reg)
                break; // restoring a saved register into itself
            if (v.k == AbsVal::K::Uninit)
                flag(kInitBeforeUse, pc, "pop of an uninitialized stack slot");
            else if (v.k == AbsVal::K::CalleeSaved)
                flag(kInitBeforeUse, pc,
                     "pop moves saved " + to_string(v.csr) + " into " + to_string(c.reg));
            break;
        }
        case Op::Push:
            if (!is_saved_csr_reg(F, c.e1))
                require_init_operands(F, c.e1, pc, "push");
            if (!F.sp_off)
                flag(kSpDiscipline, pc, "push with unknown stack offset");
            else
                check_stack_write(F, 1, pc, "push");
            break;
        case Op::Load: {
            bool heap_u =
                c.check.kind == CheckKind::Kind::Heap && c.check.p == Privilege::Untrusted;
            bool stack_rel = c.check.is_id() && is_sp_displacement(c.e1, disp);
            if (heap_u) {
                require_init_operands(F, c.e1, pc, "load address");
            } else if (stack_rel) {
                if (!F.sp_off) {
                    flag(kSpDiscipline, pc, "stack load with unknown stack offset");
                    break;
                }
                AbsVal v = F.slot(*F.sp_off + disp);
                if (v.k == AbsVal::K::CalleeSaved && v.csr == c.reg)
                    break; // restoring a saved register into itself
                if (v.k == AbsVal::K::Uninit)
                    flag(kInitBeforeUse, pc, "load of an uninitialized stack slot");
                else if (v.k == AbsVal::K::CalleeSaved)
                    flag(kInitBeforeUse, pc,
                         "load moves saved " + to_string(v.csr) + " into " + to_string(c.reg));
            } else {
                flag(kGuardDiscipline, pc,
                     "load must go through heap.U or a stack-relative id check");
            }
            break;
        }
        case Op::Store: {
            bool heap_u =
                c.check.kind == CheckKind::Kind::Heap && c.check.p == Privilege::Untrusted;
            bool stack_rel = c.check.is_id() && is_sp_displacement(c.e1, disp);
            if (heap_u) {
                require_init_operands(F, c.e1, pc, "store address");
                if (is_saved_csr_reg(F, c.e2))
                    flag(kInitBeforeUse, pc, "callee-saved value stored to the library heap");
                else
                    require_init_operands(F, c.e2, pc, "store value");
            } else if (stack_rel) {
                if (!is_saved_csr_reg(F, c.e2)) // saving a register to the stack is fine
                    require_init_operands(F, c.e2, pc, "store value");
                check_stack_write(F, disp, pc, "stack write");
            } else {
                flag(kGuardDiscipline, pc,
                     "store must go through heap.U or a stack-relative id check");
            }
            break;
        }
        case Op::Mov:
            if (c.reg == RegName::sp) {
                if (!is_sp_displacement(c.e1, disp))
                    require_init_operands(F, c.e1, pc, "stack-pointer move");
            } else if (is_saved_csr_reg(F, c.e1) &&
                       F.regs[gpr_index(c.e1.reg)].csr == c.reg) {
                // restoring a saved register into itself
            } else {
                require_init_operands(F, c.e1, pc, "mov");
            }
            break;
        case Op::Jmp:
            break; // targets validated by the CFG builder
        case Op::Call: {
            CalleeRes res = resolve_call(prog, c);
            for (const auto& e : res.errs)
                flag(kCallTyping, pc, e);
            if (c.check.kind == CheckKind::Kind::Table)
                require_init_operands(F, c.e1, pc, "table index");
            if (res.arity)
                check_args_window(F, *res.arity, pc);
            break;
        }
        case Op::GateCall:
            if (c.e1.kind != Expr::Kind::Lit || !prog.imports.count(c.e1.lit))
                flag(kCallTyping, pc, "gate call target is not a literal import");
            check_args_window(F, c.n_args, pc);
            break;
        case Op::Ret:
            if (f.exported)
                flag(kRetDiscipline, pc, "exported function must return through the gate");
            check_returnish(F, pc);
            break;
        case Op::GateRet: {
            if (!f.exported)
                flag(kRetDiscipline, pc, "internal function must not return through the gate");
            check_returnish(F, pc);
            const Convention& conv = default_convention();
            if (!(F.regs[gpr_index(conv.ret_reg)] == AbsVal::init()))
                flag(kRetValueInit, pc, "return value register not initialized");
            break;
        }
        case Op::MovLabel:
        case Op::StoreLabel:
            break; // label bookkeeping, no data effect
        }
    }
};

} // namespace

FuncReport verify_function(const Program& prog, const FuncMeta& f) {
    FuncReport rep;
    rep.func = f.name;
    Cfg cfg;
    if (auto err = build_cfg(prog, f, cfg)) {
        rep.cfg_ok = false;
        rep.cfg_error = *err;
        rep.violations.push_back({kCfg, f.entry, *err});
        return rep;
    }

    // Fixpoint over block entry frames.
    std::map<Word, AbsFrame> in;
    std::map<Word, int> visits;
    std::deque<Word> work{f.lo};
    in[f.lo] = entry_frame(f);
    while (!work.empty()) {
        Word leader = work.front();
        work.pop_front();
        if (++visits[leader] > 256)
            continue; // defensive bound; meets are monotone so this is unreachable
        const CfgBlock* b = cfg.at(leader);
        AbsFrame F = in.at(leader);
        for (Word a = b->lo; a < b->hi; ++a)
            transfer(prog, *prog.cmd_at(a), F);
        for (const Word& s : b->succs) {
            auto it = in.find(s);
            if (it == in.end()) {
                in[s] = F;
                work.push_back(s);
            } else {
                AbsFrame m = meet(it->second, F);
                if (!(m == it->second)) {
                    it->second = std::move(m);
                    work.push_back(s);
                }
            }
        }
    }

    // Check pass over reachable blocks with the fixed entry frames.
    Checker ck{prog, f, rep.violations};
    for (const auto& b : cfg.blocks) {
        auto it = in.find(b.lo);
        if (it == in.end())
            continue; // unreachable
        AbsFrame F = it->second;
        for (Word a = b.lo; a < b.hi; ++a) {
            ck.check(F, a);
            transfer(prog, *prog.cmd_at(a), F);
        }
    }
    std::sort(rep.violations.begin(), rep.violations.end(),
              [](const Violation& a, const Violation& b) { return a.pc < b.pc; });
    return rep;
}

VerdictReport verify_library(const Program& prog) {
    VerdictReport rep;
    for (const auto& f : prog.funcs) {
        if (prog.priv_at(f.entry) != Privilege::Untrusted)
            continue;
        FuncReport fr = verify_function(prog, f);
        rep.ok = rep.ok && fr.ok();
        rep.funcs.push_back(std::move(fr));
    }
    return rep;
}

} // namespace gal
