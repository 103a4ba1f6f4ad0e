// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
//
// Gate strategies: the frozen transition cost table, springboard and
// trampoline state effects, and the twin worked example that computes
// the same answer under both regimes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>

#include "gal/asm.hpp"
#include "gal/gates.hpp"
#include "testutil.hpp"

using namespace gal;

static uint64_t micro_total(const Trace& tr) {
    uint64_t s = 0;
    for (const auto& r : tr.steps)
        s += r.micro_ops;
    return s;
}

TEST_CASE("transition costs: zero-cost gates are one micro-op, heavy gates are counted") {
    for (uint32_t n : {0u, 1u, 2u, 4u}) {
        CHECK(gate_cost(Strategy::ZeroCost, GateKind::CallIn, n) == 1);
        CHECK(gate_cost(Strategy::ZeroCost, GateKind::RetOut, n) == 1);
        CHECK(gate_cost(Strategy::ZeroCost, GateKind::CallbackOut, n) == 1);
        CHECK(gate_cost(Strategy::ZeroCost, GateKind::CallbackRet, n) == 1);
        CHECK(gate_cost(Strategy::ZeroCost, GateDir::AppToLib, n) == 1);
    }

    // Hand tally of the heavyweight templates: entry springboard pushes
    // a return address, spills four callee-saved registers, copies n
    // arguments, reseats two stack pointers, and clears eight registers;
    // the exit trampoline restores and unparks.
    CHECK(gate_cost(Strategy::NaClHeavy, GateKind::CallIn, 0) == 26);
    CHECK(gate_cost(Strategy::NaClHeavy, GateKind::CallIn, 1) == 29);
    CHECK(gate_cost(Strategy::NaClHeavy, GateKind::CallIn, 2) == 32);
    CHECK(gate_cost(Strategy::NaClHeavy, GateKind::CallIn, 4) == 38);
    CHECK(gate_cost(Strategy::NaClHeavy, GateKind::RetOut, 0) == 16);
    CHECK(gate_cost(Strategy::NaClHeavy, GateKind::RetOut, 3) == 16); // n-independent
    CHECK(gate_cost(Strategy::NaClHeavy, GateKind::CallbackOut, 0) == 10);
    CHECK(gate_cost(Strategy::NaClHeavy, GateKind::CallbackOut, 1) == 13);
    CHECK(gate_cost(Strategy::NaClHeavy, GateKind::CallbackOut, 2) == 16);
    CHECK(gate_cost(Strategy::NaClHeavy, GateKind::CallbackRet, 0) == 14);

    // Direction aliases map onto the primary pair.
    CHECK(gate_cost(Strategy::NaClHeavy, GateDir::AppToLib, 2) ==
          gate_cost(Strategy::NaClHeavy, GateKind::CallIn, 2));
    CHECK(gate_cost(Strategy::NaClHeavy, GateDir::LibToApp, 0) ==
          gate_cost(Strategy::NaClHeavy, GateKind::RetOut, 0));

    // Heavy costs grow with the argument count and always exceed the
    // zero-cost gate.
    uint32_t prev = 0;
    for (uint32_t n : {0u, 1u, 2u, 4u}) {
        uint32_t c = gate_cost(Strategy::NaClHeavy, GateKind::CallIn, n);
        CHECK(c > prev);
        CHECK(c > gate_cost(Strategy::ZeroCost, GateKind::CallIn, n));
        prev = c;
    }
}

TEST_CASE("the twin programs compute the same answer under their disciplines") {
    Program zc = parse_asm(galtest::read_program("add-pair.gal"));
    Program heavy = parse_asm(galtest::read_program("add-pair-heavy.gal"));
    REQUIRE(well_formed(zc, Discipline::ZeroCost).ok);
    REQUIRE(well_formed(heavy, Discipline::NaCl).ok);

    Trace tz = run(zc, Strategy::ZeroCost, 1000);
    Trace th = run(heavy, Strategy::NaClHeavy, 1000);
    CHECK(tz.outcome == Outcome::Halted);
    CHECK(th.outcome == Outcome::Halted);

    // double(4 + 9) + 3 with the callee-saved register round-tripped.
    CHECK(tz.final_state.mget(100) == 29);
    CHECK(th.final_state.mget(100) == 29);
    CHECK(tz.final_state.reg(RegName::r4) == 7);
    CHECK(th.final_state.reg(RegName::r4) == 7);
    CHECK(tz.final_state.sp == 511);
    CHECK(th.final_state.sp == 127);

    // Gates are atomic steps, so the step counts agree exactly; only
    // the micro-op accounting differs: one 2-argument entry (32 for 1)
    // and one exit (16 for 1) on the heavy side.
    CHECK(tz.steps.size() == 20);
    CHECK(th.steps.size() == tz.steps.size());
    CHECK(micro_total(tz) == 20);
    CHECK(micro_total(th) == micro_total(tz) + 31 + 15);
}

TEST_CASE("the entry springboard moves arguments, spills, parks, and clears") {
    Program heavy = parse_asm(galtest::read_program("add-pair-heavy.gal"));
    Trace th = run(heavy, Strategy::NaClHeavy, 1000);
    REQUIRE(th.outcome == Outcome::Halted);

    size_t gi = 0, ri = 0;
    for (size_t i = 0; i < th.steps.size(); ++i) {
        if (th.steps[i].cmd.op == Op::GateCall)
            gi = i;
        if (th.steps[i].cmd.op == Op::GateRet)
            ri = i;
    }
    REQUIRE(gi < ri);
    CHECK(th.steps[gi].micro_ops == 32); // CallIn, n = 2
    CHECK(th.steps[ri].micro_ops == 16); // RetOut

    MachineState pre = state_at(heavy, Strategy::NaClHeavy, th, gi);
    CHECK(pre.sp == 129);
    CHECK(pre.mget(128) == 4);
    CHECK(pre.mget(129) == 9);
    CHECK(pre.mget(0) == 8);   // context pointer at the first context
    CHECK(pre.mget(8) == 383); // which parks the library stack pointer
    CHECK(pre.reg(RegName::r4) == 7);

    MachineState post = state_at(heavy, Strategy::NaClHeavy, th, gi + 1);
    CHECK(post.pc == heavy.func_by_name("add_scaled")->entry);
    CHECK(post.sp == 385);      // library stack pointer plus two arguments
    CHECK(post.mget(385) == 9); // argument order preserved
    CHECK(post.mget(384) == 4);
    for (const auto& r : post.regs)
        CHECK(r == 0); // every register cleared on entry
    CHECK(post.mget(8) == 0);   // callee-saved spill: r7, r6, r5, r4
    CHECK(post.mget(9) == 0);
    CHECK(post.mget(10) == 0);
    CHECK(post.mget(11) == 7);
    CHECK(post.mget(12) == 130); // fresh context parks the caller's sp
    CHECK(post.mget(0) == 12);
    CHECK(post.mget(130) == th.steps[gi].pre_pc + 1); // return address

    // Exit trampoline: callee-saved registers come back from the
    // context, the return value stays, control returns to the caller.
    MachineState ret = state_at(heavy, Strategy::NaClHeavy, th, ri + 1);
    CHECK(ret.pc == th.steps[gi].pre_pc + 1);
    CHECK(ret.sp == 129);
    CHECK(ret.reg(RegName::r0) == 29);
    CHECK(ret.reg(RegName::r4) == 7);
    CHECK(ret.mget(0) == 8); // context chain popped back
}

TEST_CASE("zero-cost gates enforce opposite landing and the import set") {
    // A library gate call must target an import.
    Program p = parse_asm(R"(.layout zerocost-default
.lib
.func f arity=0 exported
  gatecall 0, secret
  gateret
.endfunc
.app
main:
  gatecall 0, f
  mov r0, 0
secret:
  mov r0, 1
)");
    Trace tr = run(p, Strategy::ZeroCost, 100);
    CHECK(tr.outcome == Outcome::Error);
    CHECK(tr.steps.size() == 1); // the entry gatecall; the callback faults

    MachineState st = MachineState::initial(p);
    st.pc = 0;
    st.sp = 512;
    StepOut o = step(p, st, Strategy::ZeroCost);
    CHECK(o.tag == StepTag::Error);
    CHECK(o.ekind == ErrKind::Guard);

    // A trusted gate call into trusted code never lands.
    Program q = parse_asm(R"(.layout zerocost-default
.app
main:
  gatecall 0, main
)");
    MachineState qs = MachineState::initial(q);
    StepOut qo = step(q, qs, Strategy::ZeroCost);
    CHECK(qo.tag == StepTag::Error);
    CHECK(qo.ekind == ErrKind::Region);

    // A gate return must land in the opposite domain too.
    Program g = parse_asm(R"(.layout zerocost-default
.app
main:
  gateret
  mov r0, 1
)");
    MachineState gs = MachineState::initial(g);
    gs.sp = 513;
    gs.mset(513, 1); // trusted address under a trusted gateret
    StepOut go = step(g, gs, Strategy::ZeroCost);
    CHECK(go.tag == StepTag::Error);
    CHECK(go.ekind == ErrKind::Region);
}

TEST_CASE("the callback example closes both gates and scales the argument") {
    Program p = parse_asm(galtest::read_program("callback-roundtrip.gal"));
    REQUIRE(well_formed(p, Discipline::ZeroCost).ok);
    Trace tr = run(p, Strategy::ZeroCost, 1000);
    CHECK(tr.outcome == Outcome::Halted);
    CHECK(tr.final_state.mget(100) == 43); // 14 * 3 + 1
    CHECK(tr.final_state.sp == 511);
}
