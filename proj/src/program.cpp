// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/program.hpp"

namespace gal {

const FuncMeta* Program::func_at(const Word& a) const {
    for (const auto& f : funcs)
        if (a >= f.lo && a < f.hi)
            return &f;
    return nullptr;
}

const FuncMeta* Program::func_by_entry(const Word& a) const {
    for (const auto& f : funcs)
        if (f.entry == a)
            return &f;
    return nullptr;
}

const FuncMeta* Program::func_by_name(const std::string& n) const {
    for (const auto& f : funcs)
        if (f.name == n)
            return &f;
    return nullptr;
}

bool Program::same_program(const Program& o) const {
    if (code.size() != o.code.size())
        return false;
    for (size_t i = 0; i < code.size(); ++i)
        if (code[i].first != o.code[i].first || code[i].second != o.code[i].second)
            return false;
    if (entry_pc != o.entry_pc || !(layout == o.layout) || imports != o.imports ||
        tables != o.tables || init_mem != o.init_mem)
        return false;
    if (funcs.size() != o.funcs.size())
        return false;
    for (size_t i = 0; i < funcs.size(); ++i) {
        const auto& a = funcs[i];
        const auto& b = o.funcs[i];
        if (a.name != b.name || a.entry != b.entry || a.arity != b.arity || a.lo != b.lo ||
            a.hi != b.hi || a.exported != b.exported)
            return false;
    }
    return true;
}

namespace {

void issue(WfReport& r, const Word& addr, std::string what) {
    r.ok = false;
    r.issues.push_back({addr, std::move(what)});
}

// Guard covers only untrusted memory.
bool guard_within_umem(const CheckKind& k) {
    using K = CheckKind::Kind;
    if (k.kind == K::Mem || k.kind == K::Heap || k.kind == K::Stack)
        return k.p == Privilege::Untrusted;
    return false;
}

bool guard_within_ucode(const CheckKind& k, const Program& prog) {
    using K = CheckKind::Kind;
    if (k.kind == K::Code)
        return k.p == Privilege::Untrusted;
    if (k.kind == K::Table) {
        auto it = prog.tables.find(k.table);
        if (it == prog.tables.end())
            return false;
        for (const Word& e : it->second)
            if (auto p = prog.priv_at(e); !p || *p != Privilege::Untrusted)
                return false;
        return true;
    }
    return false;
}

bool guard_within_code(const CheckKind& k, Privilege p, const Program& prog) {
    using K = CheckKind::Kind;
    if (k.kind == K::Code)
        return k.p == p;
    if (k.kind == K::Table) {
        auto it = prog.tables.find(k.table);
        if (it == prog.tables.end())
            return false;
        for (const Word& e : it->second)
            if (auto q = prog.priv_at(e); !q || *q != p)
                return false;
        return true;
    }
    if (k.kind == K::Imports)
        return p == Privilege::Trusted; // imports are trusted entries
    return false;
}

void check_nacl(const Program& prog, WfReport& rep) {
    // Entry is trusted.
    if (auto p = prog.priv_at(prog.entry_pc); !p || *p != Privilege::Trusted)
        issue(rep, prog.entry_pc, "entry not in trusted code");

    // Context chain: ctx* and ctx in the trusted heap, initial library sp
    // one below the untrusted stack.
    const Layout& l = prog.layout;
    if (!l.has_ctx) {
        issue(rep, 0, "layout has no context area");
    } else {
        if (!l.heap_t.contains(l.ctx_star))
            issue(rep, l.ctx_star, "context pointer outside trusted heap");
        if (!l.heap_t.contains(l.ctx0))
            issue(rep, l.ctx0, "initial context outside trusted heap");
    }

    for (size_t i = 0; i < prog.code.size(); ++i) {
        Word addr = i;
        Privilege p = prog.code[i].first;
        const Command& c = prog.code[i].second;
        bool u = p == Privilege::Untrusted;
        switch (c.op) {
        case Op::Load:
        case Op::Store:
            if (u && !guard_within_umem(c.check))
                issue(rep, addr, "untrusted memory operand not guarded within untrusted memory");
            break;
        case Op::Pop:
        case Op::Push:
            if (u && c.priv != Privilege::Untrusted)
                issue(rep, addr, "untrusted stack operation not annotated untrusted");
            break;
        case Op::Jmp:
        case Op::Call:
        case Op::Ret:
            if (!guard_within_code(c.check, p, prog))
                issue(rep, addr, "control-flow check not confined to own code");
            break;
        case Op::GateCall:
            if (u && !(c.e1.is_lit() && prog.imports.count(c.e1.lit)))
                issue(rep, addr, "library gate call does not target an import");
            break;
        default:
            break;
        }
    }
}

void check_zerocost(const Program& prog, WfReport& rep) {
    if (auto p = prog.priv_at(prog.entry_pc); !p || *p != Privilege::Trusted)
        issue(rep, prog.entry_pc, "entry not in trusted code");

    // Function metadata partitions the untrusted code.
    for (size_t i = 0; i < prog.code.size(); ++i) {
        if (prog.code[i].first == Privilege::Untrusted && !prog.func_at(Word(i)))
            issue(rep, Word(i), "untrusted instruction not covered by a declared function");
    }
    for (size_t i = 0; i < prog.funcs.size(); ++i) {
        const auto& f = prog.funcs[i];
        if (f.entry < f.lo || f.entry >= f.hi)
            issue(rep, f.entry, "function entry outside its range");
        for (size_t j = i + 1; j < prog.funcs.size(); ++j) {
            const auto& g = prog.funcs[j];
            if (f.lo < g.hi && g.lo < f.hi)
                issue(rep, f.lo, "overlapping function ranges");
        }
    }

    for (size_t i = 0; i < prog.code.size(); ++i) {
        Word addr = i;
        if (prog.code[i].first != Privilege::Untrusted)
            continue;
        const Command& c = prog.code[i].second;
        long long disp;
        switch (c.op) {
        case Op::Load:
            if (!(c.check == CheckKind::heap(Privilege::Untrusted)) &&
                !(c.check.is_id() && is_sp_displacement(c.e1, disp)))
                issue(rep, addr, "library load neither heap-guarded nor sp-relative");
            break;
        case Op::Store:
            if (!(c.check == CheckKind::heap(Privilege::Untrusted)) &&
                !(c.check.is_id() && is_sp_displacement(c.e1, disp)))
                issue(rep, addr, "library store neither heap-guarded nor sp-relative");
            break;
        case Op::Jmp:
            if (!guard_within_ucode(c.check, prog))
                issue(rep, addr, "library jump not guarded into library code");
            break;
        case Op::Call:
            if (!guard_within_ucode(c.check, prog))
                issue(rep, addr, "library call not guarded into library code");
            break;
        case Op::GateCall:
            if (!(c.e1.is_lit() && prog.imports.count(c.e1.lit)))
                issue(rep, addr, "library gate call does not target an import");
            break;
        default:
            break;
        }
    }
}

} // namespace

WfReport well_formed(const Program& prog, Discipline d) {
    WfReport rep;
    if (d == Discipline::NaCl)
        check_nacl(prog, rep);
    else
        check_zerocost(prog, rep);
    return rep;
}

} // namespace gal
