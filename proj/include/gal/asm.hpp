// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

#include "gal/program.hpp"

namespace gal {

struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

// Two-pass assembler for the textual form:
//   ; comment
//   .layout nacl-default | zerocost-default |
//           custom h_t=LO..HI s_t=LO..HI h_u=LO..HI s_u=LO..HI [shared]
//                  [ctxstar=N ctx=N sp0=N]
//   .imports name[, name...]
//   .app / .lib                  (privilege of following code)
//   .func NAME arity=N [exported] ... .endfunc
//   .table NAME = [f, g, ...]
//   .mem ADDR = VALUE
//   label:
//   pop r, P | push P, E | jmp K(E) | load r, K(E) | store K(E), E |
//   gatecall N, E | gateret | mov r, E | call K(E) | ret K |
//   movlabel r, P | storelabel P, E
// with K in {id, mem.T, mem.U, heap.T, heap.U, stack.T, stack.U, code.T,
// code.U, imports, table.NAME}, P in {T, U}, and expressions over
// literals, registers, labels, + - * and parentheses.
// Entry point is the label `main` when present, else address 0.
Program parse_asm(const std::string& src);

// Canonical textual form; parse_asm(pretty_print(p)) reproduces p.
std::string pretty_print(const Program& prog);

} // namespace gal
