// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <random>
#include <set>

#include "gal/machine.hpp"
#include "gal/monitor.hpp"

namespace gal {

// One gate bracket: the step index of the opening gate call, the step
// index of the balancing gate return (if it happened), and the
// privilege the opener executed at.
struct GateSegment {
    size_t call_idx = 0;
    std::optional<size_t> ret_idx;
    Privilege opener = Privilege::Trusted;
};

struct WbReport {
    bool ok = true;
    std::string why;
    std::vector<GateSegment> segments;
};

// Matches gate calls with gate returns over the recorded steps. Fails
// on a gate return with no open gate call, on a closer executing at
// its opener's own privilege, and on gates still open when the trace
// halted normally.
WbReport well_bracketing(const Trace& tr);

// Live return-address slots created at privilege p over steps [0, n):
// calls and gate calls at p add the slot they write (pre sp + 1),
// returns at p remove the slot they consume (pre sp), and gate returns
// remove theirs at either privilege, since the return that closes a
// gate always executes opposite its opener.
std::set<Word> return_address_locs(const Trace& tr, Privilege p, size_t n);

struct PropReport {
    bool ok = true;
    std::string why;
};

// Callee-saved registers hold identical values before each trusted
// gate call and after its balancing gate return.
PropReport check_csr_integrity(const Program& prog, Strategy strat, const Trace& tr);

// Every trusted gate call comes back to the next instruction with the
// caller's stack pointer, and every live trusted return-address slot
// still holds its original value when the gate closes.
PropReport check_ra_integrity(const Program& prog, Strategy strat, const Trace& tr);

// Replaces secret state with fresh random values: under the default
// policy, every general-purpose register and every written trusted-heap
// cell (minus gate bookkeeping cells). Under all-public, nothing.
MachineState low_equiv_mutate(const Program& prog, const MachineState& st, PolicyKind pol,
                              std::mt19937_64& rng);

struct NiReport {
    bool ok = true;
    std::string why;
    size_t segments = 0;
};

// Strong non-interference across library activations: from every
// trusted gate call in the primary run, a secret-mutated twin must
// re-enter trusted code at the same pc after the same number of
// untrusted steps, agreeing on library-visible memory plus the return
// value (gate return) or stack pointer and arguments (callback).
NiReport check_strong_ni(const Program& prog, Strategy strat, const Trace& tr, PolicyKind pol,
                         uint64_t seed, uint64_t fuel);

} // namespace gal
