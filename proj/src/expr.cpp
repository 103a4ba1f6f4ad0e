// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/expr.hpp"

namespace gal {

bool operator==(const Expr& a, const Expr& b) {
    if (a.kind != b.kind)
        return false;
    switch (a.kind) {
    case Expr::Kind::Lit: return a.lit == b.lit;
    case Expr::Kind::Reg: return a.reg == b.reg;
    case Expr::Kind::Bin:
        return a.op == b.op && *a.lhs == *b.lhs && *a.rhs == *b.rhs;
    }
    return false;
}

namespace {
const char* op_sym(BinOp op) {
    switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Monus: return "-";
    case BinOp::Mul: return "*";
    }
    return "?";
}

// Children that are themselves binary get parenthesized, which keeps the
// printer/parser pair an exact round trip without precedence bookkeeping.
void print(const Expr& e, std::string& out) {
    switch (e.kind) {
    case Expr::Kind::Lit:
        out += e.lit.str();
        return;
    case Expr::Kind::Reg:
        out += to_string(e.reg);
        return;
    case Expr::Kind::Bin:
        if (e.lhs->is_bin()) {
            out += '(';
            print(*e.lhs, out);
            out += ')';
        } else {
            print(*e.lhs, out);
        }
        out += ' ';
        out += op_sym(e.op);
        out += ' ';
        if (e.rhs->is_bin()) {
            out += '(';
            print(*e.rhs, out);
            out += ')';
        } else {
            print(*e.rhs, out);
        }
        return;
    }
}
} // namespace

std::string to_string(const Expr& e) {
    std::string s;
    print(e, s);
    return s;
}

bool is_sp_displacement(const Expr& e, long long& out_disp) {
    if (e.is_reg() && e.reg == RegName::sp) {
        out_disp = 0;
        return true;
    }
    if (e.is_bin() && (e.op == BinOp::Add || e.op == BinOp::Monus) && e.lhs->is_reg() &&
        e.lhs->reg == RegName::sp && e.rhs->is_lit() && e.rhs->lit <= Word(1'000'000)) {
        long long k = static_cast<long long>(e.rhs->lit);
        out_disp = e.op == BinOp::Add ? k : -k;
        return true;
    }
    return false;
}

} // namespace gal
