// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
//
// Dynamic overlay monitor: labels, logical frames, the policy split,
// and refinement of the plain machine.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gal/asm.hpp"
#include "gal/monitor.hpp"
#include "testutil.hpp"

using namespace gal;

TEST_CASE("a clean library runs monitored to completion and refines the machine") {
    for (const char* name : {"add-pair.gal", "callback-roundtrip.gal"}) {
        CAPTURE(name);
        Program p = parse_asm(galtest::read_program(name));
        MonitoredTrace mt = run_monitored(p, PolicyKind::NaClDefault, 10000);
        CHECK(mt.outcome == MonitorOutcome::Halted);
        CHECK(!mt.error.has_value());

        Trace ct = run(p, Strategy::ZeroCost, 10000);
        std::string why;
        CHECK(refines(p, mt, ct, &why));
        CHECK(why.empty());
        CHECK(mt.steps.size() == ct.steps.size());
        CHECK(mt.final_state.m == ct.final_state);
    }
    Program p = parse_asm(galtest::read_program("add-pair.gal"));
    MonitoredTrace mt = run_monitored(p, PolicyKind::NaClDefault, 10000);
    CHECK(mt.final_state.m.mget(100) == 29); // the monitor is transparent
}

TEST_CASE("an unrestored callee-saved register stops the gate return") {
    Program p = parse_asm(galtest::read_program("csr-clobber.gal"));
    MonitoredTrace mt = run_monitored(p, PolicyKind::NaClDefault, 10000);
    REQUIRE(mt.outcome == MonitorOutcome::OverlayErrored);
    REQUIRE(mt.error.has_value());
    CHECK(mt.error->reason == OReason::CsrNotRestored);
    CHECK(mt.error->pc == 3); // the library's gateret
    CHECK(mt.error->detail == "callee-saved register not restored");

    // The concrete machine happily runs the same program to completion;
    // the monitored prefix still refines it.
    Trace ct = run(p, Strategy::ZeroCost, 10000);
    CHECK(ct.outcome == Outcome::Halted);
    CHECK(ct.final_state.reg(RegName::r4) == 1337);
    CHECK(refines(p, mt, ct));
}

TEST_CASE("a write to the return-address slot stops at the store itself") {
    Program p = parse_asm(galtest::read_program("ret-slot-write.gal"));
    MonitoredTrace mt = run_monitored(p, PolicyKind::NaClDefault, 10000);
    REQUIRE(mt.outcome == MonitorOutcome::OverlayErrored);
    CHECK(mt.error->reason == OReason::WriteOutsideFrame);
    CHECK(mt.error->pc == 1); // the helper's store, before memory changes

    // Unmonitored, the corrupted return address walks into the guard.
    Trace ct = run(p, Strategy::ZeroCost, 10000);
    CHECK(ct.outcome == Outcome::Error);
    CHECK(ct.steps.size() == 7);
    CHECK(refines(p, mt, ct));
}

TEST_CASE("tainted return values trip the default policy but not all-public") {
    Program p = parse_asm(galtest::read_program("uninit-operand.gal"));

    MonitoredTrace mt = run_monitored(p, PolicyKind::NaClDefault, 10000);
    REQUIRE(mt.outcome == MonitorOutcome::OverlayErrored);
    CHECK(mt.error->reason == OReason::SecretFlow);
    CHECK(mt.error->pc == 7); // leaky's gateret
    CHECK(mt.error->detail == "secret return value");
    // The clean sibling's gate closed before the error.
    CHECK(mt.final_state.m.mget(100) == 7);

    // Under all-public nothing is secret, so the same program halts.
    MonitoredTrace ap = run_monitored(p, PolicyKind::AllPublic, 10000);
    CHECK(ap.outcome == MonitorOutcome::Halted);
    CHECK(ap.final_state.m.mget(101) == 9); // uninitialized registers read 0
}

TEST_CASE("classification follows the policy, regions, and the argument window") {
    Program heavy = parse_asm(galtest::read_program("add-pair-heavy.gal"));
    OverlayState ost = initial_overlay(heavy);

    // Before any classification the baseline is all-public.
    CHECK(ost.mem_label(heavy, 64) == Privilege::Untrusted);
    CHECK(ost.reg_lab[gpr_index(RegName::r4)] == Privilege::Untrusted);

    ost.m.sp = 129; // as at a 2-argument gate call
    classify(heavy, ost, PolicyKind::NaClDefault, 2);
    for (const auto& l : ost.reg_lab)
        CHECK(l == Privilege::Trusted); // registers are secret

    CHECK(ost.mem_label(heavy, 128) == Privilege::Untrusted); // argument window
    CHECK(ost.mem_label(heavy, 129) == Privilege::Untrusted);
    CHECK(ost.mem_label(heavy, 127) == Privilege::Trusted); // below the window
    CHECK(ost.mem_label(heavy, 130) == Privilege::Trusted); // above the window
    CHECK(ost.mem_label(heavy, 64) == Privilege::Trusted);  // trusted heap
    CHECK(ost.mem_label(heavy, 8) == Privilege::Trusted);   // context area
    CHECK(ost.mem_label(heavy, 300) == Privilege::Untrusted); // library heap
    CHECK(ost.mem_label(heavy, 400) == Privilege::Untrusted); // library stack
    CHECK(ost.mem_label(heavy, 2000) == Privilege::Untrusted); // outside regions

    // Explicit writes override the baseline in both directions.
    ost.mem_lab[64] = Privilege::Untrusted;
    CHECK(ost.mem_label(heavy, 64) == Privilege::Untrusted);
    ost.mem_lab[300] = Privilege::Trusted;
    CHECK(ost.mem_label(heavy, 300) == Privilege::Trusted);

    classify(heavy, ost, PolicyKind::AllPublic, 2);
    CHECK(ost.mem_label(heavy, 64) == Privilege::Untrusted);
    CHECK(ost.reg_lab[gpr_index(RegName::r4)] == Privilege::Untrusted);

    // With a shared stack every stack cell is library-visible.
    Program zc = parse_asm(galtest::read_program("add-pair.gal"));
    OverlayState zost = initial_overlay(zc);
    zost.m.sp = 513;
    classify(zc, zost, PolicyKind::NaClDefault, 2);
    CHECK(zost.mem_label(zc, 600) == Privilege::Untrusted);
    CHECK(zost.mem_label(zc, 513) == Privilege::Untrusted);
    CHECK(zost.mem_label(zc, 64) == Privilege::Trusted);
}

TEST_CASE("callbacks may only receive public arguments") {
    const char* tmpl = R"(.layout zerocost-default
.imports cb
.lib
.func f arity=0 exported
  push U, %ARG%
  gatecall 1, cb
  mov sp, sp - 1
  mov r0, 0
  gateret
.endfunc
.app
cb:
  mov r0, 0
  gateret
main:
  gatecall 0, f
  mov r1, r0
)";
    auto instantiate = [&](const std::string& arg) {
        std::string src = tmpl;
        src.replace(src.find("%ARG%"), 5, arg);
        return parse_asm(src);
    };

    // r3 was never written by the library, so it still carries the
    // secret classification from gate entry.
    Program leak = instantiate("r3");
    MonitoredTrace mt = run_monitored(leak, PolicyKind::NaClDefault, 10000);
    REQUIRE(mt.outcome == MonitorOutcome::OverlayErrored);
    CHECK(mt.error->reason == OReason::ArgsNotPublic);
    CHECK(mt.error->pc == 1);
    CHECK(mt.error->detail == "callback argument 1 is secret");

    // A literal argument is public and the whole round trip halts.
    Program ok = instantiate("5");
    MonitoredTrace ok_mt = run_monitored(ok, PolicyKind::NaClDefault, 10000);
    CHECK(ok_mt.outcome == MonitorOutcome::Halted);
    CHECK(refines(ok, ok_mt, run(ok, Strategy::ZeroCost, 10000)));
}

TEST_CASE("a displaced stack pointer is caught at the gate return") {
    Program p = parse_asm(R"(.layout zerocost-default
.lib
.func f arity=0 exported
  mov sp, sp + 1
  mov r0, 0
  gateret
.endfunc
.app
main:
  gatecall 0, f
  mov r1, r0
)");
    MonitoredTrace mt = run_monitored(p, PolicyKind::NaClDefault, 10000);
    REQUIRE(mt.outcome == MonitorOutcome::OverlayErrored);
    CHECK(mt.error->reason == OReason::RetAddrMismatch);
    CHECK(mt.error->pc == 2);
}

TEST_CASE("jumps and fallthrough may not leave the enclosing function") {
    Program p = parse_asm(R"(.layout zerocost-default
.lib
.func f arity=0 exported
  mov r0, 0
  jmp code.U(g)
.endfunc
.func g arity=0 exported
  mov r0, 1
  gateret
.endfunc
.app
main:
  gatecall 0, f
  mov r1, r0
)");
    MonitoredTrace mt = run_monitored(p, PolicyKind::NaClDefault, 10000);
    REQUIRE(mt.outcome == MonitorOutcome::OverlayErrored);
    CHECK(mt.error->reason == OReason::CrossFunctionJump);
    CHECK(mt.error->pc == 1);

    // The plain machine takes the same jump without complaint.
    CHECK(run(p, Strategy::ZeroCost, 10000).outcome == Outcome::Halted);
}

TEST_CASE("refinement rejects a trace from a different run") {
    Program p = parse_asm(galtest::read_program("add-pair.gal"));
    Program q = parse_asm(galtest::read_program("csr-clobber.gal"));
    MonitoredTrace mt = run_monitored(p, PolicyKind::NaClDefault, 10000);
    Trace other = run(q, Strategy::ZeroCost, 10000);
    std::string why;
    CHECK(!refines(p, mt, other, &why));
    CHECK(!why.empty());
}
