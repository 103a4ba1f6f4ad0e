// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/command.hpp"

#include "gal/program.hpp"

namespace gal {

std::string to_string(const CheckKind& k) {
    switch (k.kind) {
    case CheckKind::Kind::Id: return "id";
    case CheckKind::Kind::Mem: return "mem." + to_string(k.p);
    case CheckKind::Kind::Heap: return "heap." + to_string(k.p);
    case CheckKind::Kind::Stack: return "stack." + to_string(k.p);
    case CheckKind::Kind::Code: return "code." + to_string(k.p);
    case CheckKind::Kind::Imports: return "imports";
    case CheckKind::Kind::Table: return "table." + k.table;
    }
    return "?";
}

std::optional<Word> apply_check(const CheckKind& k, const Program& prog, const Word& a) {
    const Layout& l = prog.layout;
    switch (k.kind) {
    case CheckKind::Kind::Id:
        return a;
    case CheckKind::Kind::Mem:
        if (l.region_of(a).mem(k.p))
            return a;
        return std::nullopt;
    case CheckKind::Kind::Heap:
        if (l.region_of(a).heap(k.p))
            return a;
        return std::nullopt;
    case CheckKind::Kind::Stack:
        if (l.region_of(a).stack(k.p))
            return a;
        return std::nullopt;
    case CheckKind::Kind::Code: {
        auto p = prog.priv_at(a);
        if (p && *p == k.p)
            return a;
        return std::nullopt;
    }
    case CheckKind::Kind::Imports:
        if (prog.imports.count(a))
            return a;
        return std::nullopt;
    case CheckKind::Kind::Table: {
        auto it = prog.tables.find(k.table);
        if (it == prog.tables.end())
            return std::nullopt;
        if (a >= Word(it->second.size()))
            return std::nullopt;
        return it->second[static_cast<size_t>(a)];
    }
    }
    return std::nullopt;
}

bool operator==(const Command& a, const Command& b) {
    if (a.op != b.op)
        return false;
    switch (a.op) {
    case Op::Pop: return a.reg == b.reg && a.priv == b.priv;
    case Op::Push: return a.priv == b.priv && a.e1 == b.e1;
    case Op::Jmp: return a.check == b.check && a.e1 == b.e1;
    case Op::Load: return a.reg == b.reg && a.check == b.check && a.e1 == b.e1;
    case Op::Store: return a.check == b.check && a.e1 == b.e1 && a.e2 == b.e2;
    case Op::GateCall: return a.n_args == b.n_args && a.e1 == b.e1;
    case Op::GateRet: return true;
    case Op::Mov: return a.reg == b.reg && a.e1 == b.e1;
    case Op::Call: return a.check == b.check && a.e1 == b.e1;
    case Op::Ret: return a.check == b.check;
    case Op::MovLabel: return a.reg == b.reg && a.priv == b.priv;
    case Op::StoreLabel: return a.priv == b.priv && a.e1 == b.e1;
    }
    return false;
}

std::string to_string(const Command& c) {
    switch (c.op) {
    case Op::Pop: return "pop " + to_string(c.reg) + ", " + to_string(c.priv);
    case Op::Push: return "push " + to_string(c.priv) + ", " + to_string(c.e1);
    case Op::Jmp: return "jmp " + to_string(c.check) + "(" + to_string(c.e1) + ")";
    case Op::Load:
        return "load " + to_string(c.reg) + ", " + to_string(c.check) + "(" + to_string(c.e1) +
               ")";
    case Op::Store:
        return "store " + to_string(c.check) + "(" + to_string(c.e1) + "), " + to_string(c.e2);
    case Op::GateCall: return "gatecall " + std::to_string(c.n_args) + ", " + to_string(c.e1);
    case Op::GateRet: return "gateret";
    case Op::Mov: return "mov " + to_string(c.reg) + ", " + to_string(c.e1);
    case Op::Call: return "call " + to_string(c.check) + "(" + to_string(c.e1) + ")";
    case Op::Ret: return "ret " + to_string(c.check);
    case Op::MovLabel: return "movlabel " + to_string(c.reg) + ", " + to_string(c.priv);
    case Op::StoreLabel: return "storelabel " + to_string(c.priv) + ", " + to_string(c.e1);
    }
    return "?";
}

} // namespace gal
