// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <optional>

#include "gal/machine.hpp"

namespace gal {

// A machine value with a confidentiality label.
struct LabeledValue {
    Word v{};
    Privilege lab = Privilege::Untrusted;
};

// One logical activation: frame base (first argument slot), the return
// address location, and a value snapshot of the callee-saved registers
// taken at entry.
struct OFrame {
    Word base{};
    Word ral{};
    std::array<Word, 4> csr_vals{};
};

enum class PolicyKind { NaClDefault, AllPublic };

enum class OReason {
    WriteOutsideFrame,
    RetAddrMismatch,
    CsrNotRestored,
    CrossFunctionJump,
    TypecheckFailed,
    SecretFlow,
    SecretToLibHeap,
    ArgsNotPublic,
    GuardUndefined,
    RegionViolation,
    PcIncCrossing,
};

std::string to_string(OReason r);

struct OverlayError {
    OReason reason;
    Word pc{};
    std::string detail;
};

// Shadow state carried alongside the machine state: labels on registers
// and memory plus the logical frame stack. Labels of cells never written
// since the last classification follow the recorded policy baseline.
struct OverlayState {
    MachineState m;
    std::array<Privilege, NUM_REGS> reg_lab{};
    std::map<Word, Privilege> mem_lab; // labels for explicitly-written cells
    std::vector<OFrame> frames;

    // Baseline for unwritten cells: set by the last classification.
    PolicyKind baseline = PolicyKind::AllPublic;
    bool classified = false;
    Word classify_sp{};
    uint32_t classify_args = 0;

    Privilege mem_label(const Program& prog, const Word& a) const;
    LabeledValue mread(const Program& prog, const Word& a) const {
        return {m.mget(a), mem_label(prog, a)};
    }
};

// Relabels every register and memory cell according to the policy,
// evaluated at a trusted gate call with n arguments on the stack.
// nacl-default: registers secret; library memory and the argument window
// (sp-n, sp] public; the rest of trusted memory secret; addresses outside
// every region public. all-public: everything public.
void classify(const Program& prog, OverlayState& ost, PolicyKind pol, uint32_t n_args);

struct OStepOut {
    StepTag tag = StepTag::Next; // Halted used for normal termination
    uint32_t micro_ops = 1;
    std::optional<OverlayError> err;
};

// One monitored step: concrete semantics plus the overlay checks.
// Checks apply to untrusted-executing code (the monitor is transparent
// for trusted code), except that gate returns are checked at both
// privileges to keep the frame stack balanced.
OStepOut ostep(const Program& prog, OverlayState& ost, PolicyKind pol);

enum class MonitorOutcome { Halted, OverlayErrored, FuelExhausted };

struct MonitoredTrace {
    OverlayState init;
    std::vector<StepRecord> steps; // erased records, comparable to Trace
    MonitorOutcome outcome = MonitorOutcome::Halted;
    std::optional<OverlayError> error;
    OverlayState final_state;
};

// Monitored execution under zero-cost gates.
MonitoredTrace run_monitored(const Program& prog, PolicyKind pol, uint64_t fuel);

OverlayState initial_overlay(const Program& prog);

// Refinement: erasing the monitored run must reproduce the concrete run,
// step for step, up to the point where the monitor stopped (full equality
// when it did not flag anything).
bool refines(const Program& prog, const MonitoredTrace& mt, const Trace& ct,
             std::string* why = nullptr);

} // namespace gal
