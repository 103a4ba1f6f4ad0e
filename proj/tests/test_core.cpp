// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
//
// Language core: layouts, expressions, the assembler, and static
// well-formedness for both gate disciplines.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gal/asm.hpp"
#include "gal/machine.hpp"
#include "testutil.hpp"

using namespace gal;

TEST_CASE("default layouts carve the documented regions") {
    Layout n = nacl_default_layout();
    CHECK(n.heap_t == Interval{0, 128});
    CHECK(n.stack_t == Interval{128, 256});
    CHECK(n.heap_u == Interval{256, 384});
    CHECK(n.stack_u == Interval{384, 512});
    CHECK(!n.shared_stack);
    CHECK(n.has_ctx);
    CHECK(n.ctx_star == 0);
    CHECK(n.ctx0 == 8);
    CHECK(n.sp0 == 127);
    CHECK(n.mem_end() == 512);

    // Region membership is exclusive without a shared stack.
    RegionSet rs = n.region_of(130);
    CHECK(rs.stack_t);
    CHECK(!rs.stack_u);
    CHECK(!rs.heap_t);
    CHECK(n.region_of(300).heap_u);
    CHECK(!n.region_of(512).any());

    Layout z = zerocost_default_layout();
    CHECK(z.heap_t == Interval{0, 256});
    CHECK(z.heap_u == Interval{256, 512});
    CHECK(z.stack_t == Interval{512, 1024});
    CHECK(z.shared_stack);
    CHECK(!z.has_ctx);
    CHECK(z.sp0 == 511);
    CHECK(z.mem_end() == 1024);

    // A shared stack belongs to both privileges at once.
    RegionSet zs = z.region_of(600);
    CHECK(zs.stack_t);
    CHECK(zs.stack_u);
    CHECK(zs.mem(Privilege::Trusted));
    CHECK(zs.mem(Privilege::Untrusted));
    CHECK(z.region_of(100).heap_t);
    CHECK(!z.region_of(100).stack_t);
}

TEST_CASE("expressions: precedence, parentheses, and monus") {
    Program p = parse_asm(R"(.layout zerocost-default
.app
main:
  mov r0, 2 + 3 * 4
  mov r1, (2 + 3) * 4
  mov r2, 3 - 5
  mov r3, r0 + 10
  mov r4, sp + 1
  mov r5, 1000000000000000000000000 + 1
)");
    MachineState st = MachineState::initial(p);
    st.reg(RegName::r0) = 5;

    // * binds tighter than + ; parentheses override.
    CHECK(eval_expr(st, p.cmd_at(0)->e1) == 14);
    CHECK(eval_expr(st, p.cmd_at(1)->e1) == 20);
    // Subtraction is monus: it floors at zero instead of going negative.
    CHECK(eval_expr(st, p.cmd_at(2)->e1) == 0);
    CHECK(eval_expr(st, p.cmd_at(3)->e1) == 15);
    CHECK(eval_expr(st, p.cmd_at(4)->e1) == Word(511 + 1));
    // Words are arbitrary precision.
    CHECK(eval_expr(st, p.cmd_at(5)->e1) == Word("1000000000000000000000001"));
}

// One program exercising every directive; all addresses are forced by
// the source order, so the structural facts below are fixed by hand.
static const char* kStructureSrc = R"(.layout zerocost-default
.imports ping

.lib
.func go arity=0 exported
  gatecall 0, ping
  mov r0, r0 + 2
  gateret
.endfunc
.func helper arity=1
  load r0, id(sp - 1)
  ret code.U
.endfunc
.table tbl = [go, helper]

.app
ping:
  mov r0, 7
  gateret
main:
  gatecall 0, go
  store id(100), r0
.mem 300 = 42
)";

TEST_CASE("the assembler resolves sections, functions, tables, and imports") {
    Program p = parse_asm(kStructureSrc);

    REQUIRE(p.code.size() == 9);
    CHECK(p.entry_pc == 7); // label main
    for (int a = 0; a <= 4; ++a)
        CHECK(p.priv_at(a) == Privilege::Untrusted);
    for (int a = 5; a <= 8; ++a)
        CHECK(p.priv_at(a) == Privilege::Trusted);
    CHECK(!p.priv_at(9).has_value());
    CHECK(!p.in_code(9));

    REQUIRE(p.funcs.size() == 2);
    const FuncMeta& go = p.funcs[0];
    CHECK(go.name == "go");
    CHECK(go.entry == 0);
    CHECK(go.arity == 0);
    CHECK(go.lo == 0);
    CHECK(go.hi == 3);
    CHECK(go.exported);
    const FuncMeta& helper = p.funcs[1];
    CHECK(helper.name == "helper");
    CHECK(helper.entry == 3);
    CHECK(helper.arity == 1);
    CHECK(helper.lo == 3);
    CHECK(helper.hi == 5);
    CHECK(!helper.exported);

    CHECK(p.func_at(1)->name == "go");
    CHECK(p.func_at(4)->name == "helper");
    CHECK(p.func_at(5) == nullptr); // trusted code is not in any function
    CHECK(p.func_by_entry(3)->name == "helper");
    CHECK(p.func_by_entry(4) == nullptr); // mid-function address
    CHECK(p.func_by_name("go") == p.func_by_entry(0));
    CHECK(p.func_by_name("nope") == nullptr);

    CHECK(p.imports == std::set<Word>{5}); // ping:
    REQUIRE(p.tables.count("tbl"));
    CHECK(p.tables.at("tbl") == std::vector<Word>{0, 3});
    REQUIRE(p.init_mem.size() == 1);
    CHECK(p.init_mem[0].first == 300);
    CHECK(p.init_mem[0].second == 42);
    CHECK(p.labels.at("ping") == 5);
    CHECK(p.labels.at("main") == 7);

    // Spot-check decoded commands.
    CHECK(p.cmd_at(7)->op == Op::GateCall);
    CHECK(p.cmd_at(7)->n_args == 0);
    CHECK(p.cmd_at(8)->op == Op::Store);
    CHECK(p.cmd_at(8)->check.is_id());
    CHECK(p.cmd_at(3)->op == Op::Load);
    CHECK(p.cmd_at(4)->op == Op::Ret);
    CHECK(p.cmd_at(4)->check == CheckKind::code(Privilege::Untrusted));
}

TEST_CASE("the structure program runs the nested callback to completion") {
    Program p = parse_asm(kStructureSrc);
    CHECK(well_formed(p, Discipline::ZeroCost).ok);
    Trace tr = run(p, Strategy::ZeroCost, 100);
    CHECK(tr.outcome == Outcome::Halted);
    // main -> go -> callback ping (returns 7) -> +2 -> stored.
    CHECK(tr.final_state.mget(100) == 9);
    CHECK(tr.steps.size() == 7);
}

TEST_CASE("printing and reparsing reproduces every example program") {
    for (const auto& name : galtest::program_names()) {
        CAPTURE(name);
        Program p = parse_asm(galtest::read_program(name));
        std::string once = pretty_print(p);
        Program q = parse_asm(once);
        CHECK(q.same_program(p));
        CHECK(pretty_print(q) == once); // canonical form is a fixed point
    }
    Program p = parse_asm(kStructureSrc);
    Program q = parse_asm(pretty_print(p));
    CHECK(q.same_program(p));
    CHECK(q.tables == p.tables);
    CHECK(q.imports == p.imports);
}

TEST_CASE("well-formedness accepts the paired examples") {
    Program zc = parse_asm(galtest::read_program("add-pair.gal"));
    WfReport a = well_formed(zc, Discipline::ZeroCost);
    CHECK(a.ok);
    CHECK(a.issues.empty());

    Program heavy = parse_asm(galtest::read_program("add-pair-heavy.gal"));
    CHECK(well_formed(heavy, Discipline::NaCl).ok);
}

TEST_CASE("zero-cost well-formedness rejects unguarded and unpartitioned code") {
    // Absolute store in library code: neither heap-guarded nor
    // sp-relative.
    Program p1 = parse_asm(R"(.layout zerocost-default
.lib
.func f arity=0 exported
  store id(300), r0
  gateret
.endfunc
.app
main:
  gatecall 0, f
)");
    WfReport r1 = well_formed(p1, Discipline::ZeroCost);
    CHECK(!r1.ok);
    REQUIRE(!r1.issues.empty());
    CHECK(r1.issues[0].addr == 0);

    // Library code outside any declared function.
    Program p2 = parse_asm(R"(.layout zerocost-default
.lib
stray:
  mov r0, 1
  ret code.U
.app
main:
  mov r0, 0
)");
    CHECK(!well_formed(p2, Discipline::ZeroCost).ok);

    // Library gate call whose target is not an import.
    Program p3 = parse_asm(R"(.layout zerocost-default
.lib
.func f arity=0 exported
  gatecall 0, secret
  gateret
.endfunc
.app
main:
  gatecall 0, f
secret:
  mov r0, 1
)");
    CHECK(!well_formed(p3, Discipline::ZeroCost).ok);

    // Untrusted entry point.
    Program p4 = parse_asm(R"(.layout zerocost-default
.lib
.func main arity=0 exported
  mov r0, 0
  gateret
.endfunc
)");
    CHECK(!well_formed(p4, Discipline::ZeroCost).ok);
}

TEST_CASE("heavyweight well-formedness wants guards and matching stack annotations") {
    // Base preamble: the context chain cells the discipline requires.
    std::string pre = ".layout nacl-default\n.mem 0 = 8\n.mem 8 = 383\n";

    // Unguarded (id) load in library code.
    Program p1 = parse_asm(pre + R"(.lib
.func f arity=1 exported
  load r0, id(sp - 1)
  gateret
.endfunc
.app
main:
  push T, 1
  gatecall 1, f
)");
    CHECK(!well_formed(p1, Discipline::NaCl).ok);
    // The same access through the untrusted-memory guard is fine.
    Program p2 = parse_asm(pre + R"(.lib
.func f arity=1 exported
  load r0, mem.U(sp - 1)
  gateret
.endfunc
.app
main:
  push T, 1
  gatecall 1, f
)");
    CHECK(well_formed(p2, Discipline::NaCl).ok);

    // Untrusted pop annotated as trusted.
    Program p3 = parse_asm(pre + R"(.lib
.func f arity=0 exported
  pop r0, T
  gateret
.endfunc
.app
main:
  gatecall 0, f
)");
    CHECK(!well_formed(p3, Discipline::NaCl).ok);
}

TEST_CASE("malformed source is rejected with a line number") {
    CHECK_THROWS_AS(parse_asm(".layout zerocost-default\n.app\nmain:\n  frobnicate r0\n"),
                    ParseError);
    CHECK_THROWS_AS(parse_asm(".layout zerocost-default\n.app\nmain:\n  pop sp, T\n"),
                    ParseError);
    CHECK_THROWS_AS(parse_asm(".layout zerocost-default\n.app\nmain:\n  mov pc, 1\n"),
                    ParseError);
    // Duplicate label.
    CHECK_THROWS_AS(parse_asm(".layout zerocost-default\n.app\nmain:\n  mov r0, 1\nmain:\n  mov r0, 2\n"),
                    ParseError);
    // Undefined label in an operand.
    CHECK_THROWS_AS(parse_asm(".layout zerocost-default\n.app\nmain:\n  jmp code.T(nowhere)\n"),
                    ParseError);
    // Unterminated function.
    CHECK_THROWS_AS(parse_asm(".layout zerocost-default\n.lib\n.func f arity=0\n  gateret\n"),
                    ParseError);
    // Unbalanced parenthesis.
    CHECK_THROWS_AS(parse_asm(".layout zerocost-default\n.app\nmain:\n  mov r0, (1 + 2\n"),
                    ParseError);
    // Table naming an unknown function.
    CHECK_THROWS_AS(parse_asm(".layout zerocost-default\n.lib\n.table t = [ghost]\n.app\nmain:\n  mov r0, 1\n"),
                    ParseError);

    try {
        parse_asm(".layout zerocost-default\n.app\nmain:\n  frobnicate r0\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 4);
    }
}
