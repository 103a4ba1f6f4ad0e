// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
//
// Executable trace properties: well-bracketing, register and
// return-address integrity, and strong non-interference, plus the
// generator/mutator pipeline they run against.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gal/asm.hpp"
#include "gal/gen.hpp"
#include "gal/monitor.hpp"
#include "gal/properties.hpp"
#include "gal/verifier.hpp"
#include "testutil.hpp"

using namespace gal;

TEST_CASE("well-bracketing accepts balanced gates, nested callbacks included") {
    Program p = parse_asm(galtest::read_program("add-pair.gal"));
    Trace tr = run(p, Strategy::ZeroCost, 1000);
    WbReport wb = well_bracketing(tr);
    CHECK(wb.ok);
    REQUIRE(wb.segments.size() == 1);
    CHECK(wb.segments[0].opener == Privilege::Trusted);
    CHECK(wb.segments[0].ret_idx.has_value());

    Program cb = parse_asm(galtest::read_program("callback-roundtrip.gal"));
    WbReport cwb = well_bracketing(run(cb, Strategy::ZeroCost, 1000));
    CHECK(cwb.ok);
    REQUIRE(cwb.segments.size() == 2);
    bool saw_untrusted_opener = false;
    for (const auto& s : cwb.segments) {
        CHECK(s.ret_idx.has_value());
        if (s.opener == Privilege::Untrusted)
            saw_untrusted_opener = true;
    }
    CHECK(saw_untrusted_opener);
}

TEST_CASE("well-bracketing rejects dangling and unopened gates") {
    // The library function simply runs off the end of code, halting the
    // machine with the entry gate still open.
    Program dangle = parse_asm(R"(.layout zerocost-default
.app
main:
  gatecall 0, f
.lib
.func f arity=0 exported
  mov r0, 0
.endfunc
)");
    Trace tr = run(dangle, Strategy::ZeroCost, 100);
    REQUIRE(tr.outcome == Outcome::Halted);
    WbReport wb = well_bracketing(tr);
    CHECK(!wb.ok);
    CHECK(wb.why == "1 gate(s) still open at halt");

    // A gate return the application never asked for: trusted code bumps
    // sp over a forged slot and jumps straight into the library, which
    // immediately gate-returns through it.
    Program forged = parse_asm(R"(.layout zerocost-default
.mem 512 = 4
.lib
.func f arity=0 exported
  gateret
.endfunc
.app
main:
  mov sp, sp + 1
  jmp code.U(f)
  mov r0, 0
back:
  mov r1, 1
)");
    Trace ft = run(forged, Strategy::ZeroCost, 100);
    REQUIRE(ft.outcome == Outcome::Halted);
    WbReport fwb = well_bracketing(ft);
    CHECK(!fwb.ok);
    CHECK(fwb.why == "gate return with no open gate call at step 2");
}

TEST_CASE("the return-address ledger tracks live slots per privilege") {
    Program p = parse_asm(galtest::read_program("add-pair.gal"));
    Trace tr = run(p, Strategy::ZeroCost, 1000);

    size_t gate_i = 0, call_i = 0;
    for (size_t i = 0; i < tr.steps.size(); ++i) {
        if (tr.steps[i].cmd.op == Op::GateCall)
            gate_i = i;
        if (tr.steps[i].cmd.op == Op::Call)
            call_i = i;
    }
    REQUIRE(gate_i < call_i);

    // While the helper runs, the trusted ledger holds the gate slot and
    // the untrusted ledger the internal call slot.
    auto t_locs = return_address_locs(tr, Privilege::Trusted, call_i + 1);
    auto u_locs = return_address_locs(tr, Privilege::Untrusted, call_i + 1);
    CHECK(t_locs == std::set<Word>{tr.steps[gate_i].pre_sp + 1});
    CHECK(u_locs == std::set<Word>{tr.steps[call_i].pre_sp + 1});

    // Before the call executes its slot is not live yet.
    CHECK(return_address_locs(tr, Privilege::Untrusted, call_i).empty());

    // At the end everything has been consumed.
    CHECK(return_address_locs(tr, Privilege::Trusted, tr.steps.size()).empty());
    CHECK(return_address_locs(tr, Privilege::Untrusted, tr.steps.size()).empty());
}

TEST_CASE("register integrity catches the clobber the machine lets through") {
    Program p = parse_asm(galtest::read_program("csr-clobber.gal"));
    Trace tr = run(p, Strategy::ZeroCost, 1000);
    REQUIRE(tr.outcome == Outcome::Halted); // no machine rule is violated
    CHECK(tr.final_state.mget(100) == 22);

    PropReport csr = check_csr_integrity(p, Strategy::ZeroCost, tr);
    CHECK(!csr.ok);
    CHECK(csr.why.find("r4 changed across the gate closing") != std::string::npos);
    CHECK(check_ra_integrity(p, Strategy::ZeroCost, tr).ok);

    Program clean = parse_asm(galtest::read_program("add-pair.gal"));
    Trace ct = run(clean, Strategy::ZeroCost, 1000);
    CHECK(check_csr_integrity(clean, Strategy::ZeroCost, ct).ok);
    CHECK(check_ra_integrity(clean, Strategy::ZeroCost, ct).ok);
}

TEST_CASE("return-address integrity catches a forged gate return") {
    // The library overwrites its own return slot with the address of a
    // later application instruction: every guard passes, the gate even
    // closes, but control skipped part of the application.
    Program p = parse_asm(R"(.layout zerocost-default
.lib
.func hijack arity=1 exported
  load r0, id(sp - 1)
  store id(sp), done
  gateret
.endfunc
.app
main:
  push T, 1
  gatecall 1, hijack
  mov sp, sp - 1
  store id(100), 111
done:
  store id(101), 222
)");
    Trace tr = run(p, Strategy::ZeroCost, 1000);
    REQUIRE(tr.outcome == Outcome::Halted);
    CHECK(tr.final_state.mget(100) == 0); // the skipped store
    CHECK(tr.final_state.mget(101) == 222);
    CHECK(well_bracketing(tr).ok); // the bracket itself closed

    PropReport ra = check_ra_integrity(p, Strategy::ZeroCost, tr);
    CHECK(!ra.ok);
    CHECK(ra.why.find("returned to pc 7, expected 5") != std::string::npos);
    CHECK(check_csr_integrity(p, Strategy::ZeroCost, tr).ok);
}

TEST_CASE("strong non-interference holds for the clean pair and fails for leaks") {
    Program clean = parse_asm(galtest::read_program("add-pair.gal"));
    Trace ct = run(clean, Strategy::ZeroCost, 1000);
    NiReport ok = check_strong_ni(clean, Strategy::ZeroCost, ct, PolicyKind::NaClDefault, 7, 10000);
    CHECK(ok.ok);
    CHECK(ok.segments == 1);

    // The tainted return value: randomizing the secret registers makes
    // the twin return something else.
    Program leaky = parse_asm(galtest::read_program("uninit-operand.gal"));
    Trace lt = run(leaky, Strategy::ZeroCost, 1000);
    NiReport bad = check_strong_ni(leaky, Strategy::ZeroCost, lt, PolicyKind::NaClDefault, 7, 10000);
    CHECK(!bad.ok);
    CHECK(bad.why.find("return value differs") != std::string::npos);

    // Under all-public nothing is secret, so nothing can differ.
    NiReport pub = check_strong_ni(leaky, Strategy::ZeroCost, lt, PolicyKind::AllPublic, 7, 10000);
    CHECK(pub.ok);

    // A write of never-initialized register contents into the library
    // heap shows up in the heap comparison.
    Program heap_leak = parse_asm(R"(.layout zerocost-default
.lib
.func f arity=0 exported
  store heap.U(300), r3
  mov r0, 0
  gateret
.endfunc
.app
main:
  gatecall 0, f
  mov r1, r0
)");
    Trace ht = run(heap_leak, Strategy::ZeroCost, 1000);
    REQUIRE(ht.outcome == Outcome::Halted);
    NiReport hb = check_strong_ni(heap_leak, Strategy::ZeroCost, ht, PolicyKind::NaClDefault, 7, 10000);
    CHECK(!hb.ok);
    CHECK(hb.why.find("library heap cell 300 differs") != std::string::npos);
}

TEST_CASE("heavy gates shield the same attacks the shared stack exposes") {
    size_t zc_failures = 0;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        CAPTURE(seed);
        GenOut g = gen_library(seed, GenParams::attack_ready());
        auto mz = mutate(g.prog, MutationKind::ReadUninitScratch, seed);
        auto mn = mutate(g.nacl_prog, MutationKind::ReadUninitScratch, seed);
        REQUIRE(mz.has_value());
        REQUIRE(mn.has_value());

        // The heavyweight entry springboard cleared every register, so
        // the mutant reads zeros, not secrets.
        Trace tn = run(*mn, Strategy::NaClHeavy, 10000);
        NiReport rn = check_strong_ni(*mn, Strategy::NaClHeavy, tn, PolicyKind::NaClDefault,
                                      seed, 10000);
        CHECK(rn.ok);

        Trace tz = run(*mz, Strategy::ZeroCost, 10000);
        NiReport rz = check_strong_ni(*mz, Strategy::ZeroCost, tz, PolicyKind::NaClDefault,
                                      seed, 10000);
        if (!rz.ok)
            ++zc_failures;
    }
    // Under zero-cost gates the registers really do carry application
    // state into the library, so the leak is observable for most seeds.
    CHECK(zc_failures >= 5);
}

TEST_CASE("the secret mutation respects gate bookkeeping and public regions") {
    Program heavy = parse_asm(galtest::read_program("add-pair-heavy.gal"));
    MachineState st = MachineState::initial(heavy);
    st.mset(64, 555);  // written trusted-heap cell: secret
    st.mset(9, 42);    // written trusted-heap cell above the live context
    st.mset(300, 77);  // library heap: public
    st.mset(400, 9);   // library stack: public
    for (size_t i = 0; i < NUM_REGS; ++i)
        st.regs[i] = Word(i + 1);

    std::mt19937_64 rng(123);
    MachineState mu = low_equiv_mutate(heavy, st, PolicyKind::NaClDefault, rng);

    CHECK(mu.pc == st.pc);
    CHECK(mu.sp == st.sp);
    CHECK(mu.mget(0) == 8);    // context pointer untouched
    CHECK(mu.mget(8) == 383);  // live context cell untouched
    CHECK(mu.mget(300) == 77); // public memory untouched
    CHECK(mu.mget(400) == 9);
    CHECK(mu.mget(65) == 0);   // unwritten cells stay unwritten
    CHECK(mu != st);           // some secret changed
    CHECK(mu.mget(64) != 555);
    CHECK(mu.mget(9) != 42);

    std::mt19937_64 rng2(123);
    MachineState pub = low_equiv_mutate(heavy, st, PolicyKind::AllPublic, rng2);
    CHECK(pub == st); // all-public has no secrets to vary
}

TEST_CASE("generated twins parse, verify, and differ only in discipline spelling") {
    GenOut g = gen_library(42, GenParams::diverse());
    CHECK(g.prog.layout.shared_stack);
    CHECK(!g.nacl_prog.layout.shared_stack);
    CHECK(well_formed(g.prog, Discipline::ZeroCost).ok);
    CHECK(well_formed(g.nacl_prog, Discipline::NaCl).ok);
    // Only the shared-stack twin needs the static verifier; the other
    // discipline leans on the machine's region checks instead, and its
    // spellings (stack.U rather than id) are rejected on purpose.
    CHECK(verify_library(g.prog).ok);
    CHECK(!verify_library(g.nacl_prog).ok);

    // Same function names, entries, and arities across the disciplines.
    REQUIRE(g.prog.funcs.size() == g.nacl_prog.funcs.size());
    for (size_t i = 0; i < g.prog.funcs.size(); ++i) {
        CHECK(g.prog.funcs[i].name == g.nacl_prog.funcs[i].name);
        CHECK(g.prog.funcs[i].arity == g.nacl_prog.funcs[i].arity);
        CHECK(g.prog.funcs[i].exported == g.nacl_prog.funcs[i].exported);
    }

    // Both run to completion under their own gates.
    CHECK(run(g.prog, Strategy::ZeroCost, 10000).outcome == Outcome::Halted);
    CHECK(run(g.nacl_prog, Strategy::NaClHeavy, 10000).outcome == Outcome::Halted);
}

TEST_CASE("every mutation kind plants its expected static and dynamic signature") {
    // One seed here; the acceptance suite sweeps many.
    const uint64_t seed = 5;
    GenOut g = gen_library(seed, GenParams::attack_ready());
    for (MutationKind k : kAllMutations) {
        CAPTURE(to_string(k));
        AttackExpectation ex = expectation(k);

        auto mz = mutate(g.prog, k, seed);
        REQUIRE(mz.has_value());
        CHECK(mz->code.size() == g.prog.code.size()); // replacement only

        VerdictReport vr = verify_library(*mz);
        CHECK(!vr.ok);
        CHECK(vr.contains(ex.check));

        MonitoredTrace mt = run_monitored(*mz, PolicyKind::NaClDefault, 10000);
        REQUIRE(mt.outcome == MonitorOutcome::OverlayErrored);
        CHECK(mt.error->reason == ex.reason);

        // The same mutation exists at the same site in the twin.
        CHECK(mutate(g.nacl_prog, k, seed).has_value());
    }
}

TEST_CASE("mutation names round-trip") {
    for (MutationKind k : kAllMutations) {
        auto back = mutation_from_string(to_string(k));
        REQUIRE(back.has_value());
        CHECK(*back == k);
    }
    CHECK(!mutation_from_string("no-such-mutation").has_value());
}
