// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <optional>
#include <string>

#include "gal/expr.hpp"
#include "gal/layout.hpp"

namespace gal {

struct Program; // fwd

// Address-check kinds: partial identity maps restricting memory or code
// operands to a region, plus the import set and call tables (which map
// table indices to function entries).
struct CheckKind {
    enum class Kind { Id, Mem, Heap, Stack, Code, Imports, Table };

    Kind kind = Kind::Id;
    Privilege p = Privilege::Trusted; // for Mem/Heap/Stack/Code
    std::string table;                // for Table

    static CheckKind id() { return {}; }
    static CheckKind mem(Privilege p) { return {Kind::Mem, p, {}}; }
    static CheckKind heap(Privilege p) { return {Kind::Heap, p, {}}; }
    static CheckKind stack(Privilege p) { return {Kind::Stack, p, {}}; }
    static CheckKind code(Privilege p) { return {Kind::Code, p, {}}; }
    static CheckKind imports() { return {Kind::Imports, Privilege::Trusted, {}}; }
    static CheckKind table_ref(std::string name) {
        return {Kind::Table, Privilege::Trusted, std::move(name)};
    }

    bool is_id() const { return kind == Kind::Id; }
    bool operator==(const CheckKind& o) const {
        if (kind != o.kind)
            return false;
        switch (kind) {
        case Kind::Id:
        case Kind::Imports:
            return true;
        case Kind::Table:
            return table == o.table;
        default:
            return p == o.p;
        }
    }
    bool operator!=(const CheckKind& o) const { return !(*this == o); }
};

std::string to_string(const CheckKind& k);

// Applies the check map to an address; nullopt when undefined.
std::optional<Word> apply_check(const CheckKind& k, const Program& prog, const Word& a);

enum class Op {
    Pop,        // pop r, P
    Push,       // push P, E
    Jmp,        // jmp K(E)
    Load,       // load r, K(E)
    Store,      // store K(E_addr), E_val
    GateCall,   // gatecall N, E
    GateRet,    // gateret
    Mov,        // mov r, E   (r may be sp)
    Call,       // call K(E)
    Ret,        // ret K
    MovLabel,   // movlabel r, P
    StoreLabel, // storelabel P, E
};

struct Command {
    Op op = Op::GateRet;
    RegName reg = RegName::r0;        // Pop, Load, Mov, MovLabel
    Privilege priv = Privilege::Trusted; // Pop, Push, MovLabel, StoreLabel
    CheckKind check;                  // Jmp, Load, Store, Call, Ret
    uint32_t n_args = 0;              // GateCall
    Expr e1, e2;                      // e1 = value/target/address, e2 = Store value

    static Command pop(RegName r, Privilege p) {
        Command c;
        c.op = Op::Pop;
        c.reg = r;
        c.priv = p;
        return c;
    }
    static Command push(Privilege p, Expr e) {
        Command c;
        c.op = Op::Push;
        c.priv = p;
        c.e1 = std::move(e);
        return c;
    }
    static Command jmp(CheckKind k, Expr e) {
        Command c;
        c.op = Op::Jmp;
        c.check = std::move(k);
        c.e1 = std::move(e);
        return c;
    }
    static Command load(RegName r, CheckKind k, Expr e) {
        Command c;
        c.op = Op::Load;
        c.reg = r;
        c.check = std::move(k);
        c.e1 = std::move(e);
        return c;
    }
    static Command store(CheckKind k, Expr addr, Expr val) {
        Command c;
        c.op = Op::Store;
        c.check = std::move(k);
        c.e1 = std::move(addr);
        c.e2 = std::move(val);
        return c;
    }
    static Command gatecall(uint32_t n, Expr e) {
        Command c;
        c.op = Op::GateCall;
        c.n_args = n;
        c.e1 = std::move(e);
        return c;
    }
    static Command gateret() {
        Command c;
        c.op = Op::GateRet;
        return c;
    }
    static Command mov(RegName r, Expr e) {
        Command c;
        c.op = Op::Mov;
        c.reg = r;
        c.e1 = std::move(e);
        return c;
    }
    static Command call(CheckKind k, Expr e) {
        Command c;
        c.op = Op::Call;
        c.check = std::move(k);
        c.e1 = std::move(e);
        return c;
    }
    static Command ret(CheckKind k) {
        Command c;
        c.op = Op::Ret;
        c.check = std::move(k);
        return c;
    }
    static Command movlabel(RegName r, Privilege p) {
        Command c;
        c.op = Op::MovLabel;
        c.reg = r;
        c.priv = p;
        return c;
    }
    static Command storelabel(Privilege p, Expr e) {
        Command c;
        c.op = Op::StoreLabel;
        c.priv = p;
        c.e1 = std::move(e);
        return c;
    }
};

bool operator==(const Command& a, const Command& b);
inline bool operator!=(const Command& a, const Command& b) { return !(a == b); }

std::string to_string(const Command& c);

} // namespace gal
