// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <map>
#include <vector>

#include "gal/program.hpp"

namespace gal {

enum class Strategy { ZeroCost, NaClHeavy };

struct MachineState {
    Word pc{}, sp{};
    std::array<Word, NUM_REGS> regs{};
    std::map<Word, Word> mem; // total memory: absent cells read 0

    static MachineState initial(const Program& prog);

    const Word& reg(RegName r) const { return regs[gpr_index(r)]; }
    Word& reg(RegName r) { return regs[gpr_index(r)]; }
    Word mget(const Word& a) const {
        auto it = mem.find(a);
        return it == mem.end() ? Word(0) : it->second;
    }
    void mset(Word a, Word v) { mem[std::move(a)] = std::move(v); }

    bool operator==(const MachineState& o) const;
};

// Expression evaluation; sp and pc read from the state fields.
Word eval_expr(const MachineState& st, const Expr& e);

enum class StepTag { Next, Halted, Error };

// Classification of machine errors: an undefined address check, a
// region/landing violation, or a privilege-crossing pc increment.
enum class ErrKind { None, Guard, Region, PcCross };

struct StepOut {
    StepTag tag = StepTag::Next;
    uint32_t micro_ops = 1;
    std::string error; // for Error: what failed
    ErrKind ekind = ErrKind::None;
};

// One small step, mutating st in place. Gate commands follow the given
// transition strategy. Halted covers pc outside code and stuck states;
// Error covers the explicit error rules (privilege-mismatched stack
// access, undefined checks, gate landing violations, privilege-crossing
// fallthrough).
StepOut step(const Program& prog, MachineState& st, Strategy strat);

// Pure variant: returns the successor state without mutating the input.
StepOut step_copy(const Program& prog, const MachineState& st, Strategy strat,
                  MachineState& out);

enum class Outcome { Halted, Error, FuelExhausted };

struct StepRecord {
    Word pre_pc, pre_sp;
    Privilege priv;
    Command cmd;
    uint32_t micro_ops;
};

struct Trace {
    MachineState init;
    std::vector<StepRecord> steps;
    Outcome outcome = Outcome::Halted;
    std::string error; // populated when outcome == Error
    MachineState final_state;
};

Trace run(const Program& prog, Strategy strat, uint64_t fuel);

// State before step i of the trace, reconstructed by replay.
MachineState state_at(const Program& prog, Strategy strat, const Trace& tr, size_t i);

} // namespace gal
