// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <memory>
#include <string>

#include "gal/base.hpp"

namespace gal {

enum class BinOp { Add, Monus, Mul };

// Expressions over literals and registers. Immutable; subtrees are shared.
struct Expr {
    enum class Kind { Lit, Reg, Bin };

    Kind kind = Kind::Lit;
    Word lit{};
    RegName reg = RegName::r0;
    BinOp op = BinOp::Add;
    std::shared_ptr<const Expr> lhs, rhs;

    static Expr literal(Word v) {
        Expr e;
        e.kind = Kind::Lit;
        e.lit = std::move(v);
        return e;
    }
    static Expr regref(RegName r) {
        Expr e;
        e.kind = Kind::Reg;
        e.reg = r;
        return e;
    }
    static Expr bin(BinOp op, Expr a, Expr b) {
        Expr e;
        e.kind = Kind::Bin;
        e.op = op;
        e.lhs = std::make_shared<const Expr>(std::move(a));
        e.rhs = std::make_shared<const Expr>(std::move(b));
        return e;
    }
    static Expr add(Expr a, Expr b) { return bin(BinOp::Add, std::move(a), std::move(b)); }
    static Expr sub(Expr a, Expr b) { return bin(BinOp::Monus, std::move(a), std::move(b)); }
    static Expr mul(Expr a, Expr b) { return bin(BinOp::Mul, std::move(a), std::move(b)); }

    bool is_lit() const { return kind == Kind::Lit; }
    bool is_reg() const { return kind == Kind::Reg; }
    bool is_bin() const { return kind == Kind::Bin; }
};

bool operator==(const Expr& a, const Expr& b);
inline bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

std::string to_string(const Expr& e);

// Recognizes sp, sp + K, sp - K; returns the signed displacement.
// The tracked stack-addressing form used by the static checks.
bool is_sp_displacement(const Expr& e, long long& out_disp);

} // namespace gal
