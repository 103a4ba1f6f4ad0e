// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include "gal/machine.hpp"

namespace gal {

// Which transition template a gate command selects, determined by the
// executing privilege: trusted gatecall enters the library, untrusted
// gateret leaves it; untrusted gatecall is a callback out, trusted
// gateret returns from one.
enum class GateKind { CallIn, RetOut, CallbackOut, CallbackRet };

// Spec surface: control-flow direction of the primary gate pair.
enum class GateDir { AppToLib, LibToApp };

// Micro-op cost of one gate transition. Zero-cost gates are single
// instructions; heavyweight gates expand to the springboard/trampoline
// instruction sequences, counted per instruction executed.
uint32_t gate_cost(Strategy s, GateKind k, uint32_t n_args,
                   const Convention& conv = default_convention());
uint32_t gate_cost(Strategy s, GateDir d, uint32_t n_args,
                   const Convention& conv = default_convention());

// Gate execution, called from step() on GateCall/GateRet. Performs the
// whole transition as one atomic step whose micro_ops is the template
// instruction count.
StepOut gate_call(const Program& prog, MachineState& st, Strategy strat, uint32_t n,
                  const Expr& target);
StepOut gate_ret(const Program& prog, MachineState& st, Strategy strat);

} // namespace gal
