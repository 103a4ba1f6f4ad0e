// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <optional>
#include <string>

#include "gal/monitor.hpp"
#include "gal/program.hpp"

namespace gal {

// Shape parameters for the program generator.
struct GenParams {
    uint32_t max_funcs = 3;   // exported library functions
    uint32_t max_args = 4;
    bool allow_callbacks = true;
    bool allow_tables = true;
    bool allow_internal_calls = true;
    bool allow_jumps = true;
    bool allow_recursion = true;
    uint32_t min_calls = 1, max_calls = 4; // driver gate calls
    // Guarantees a site for every mutation kind and a driver that
    // reaches all of them.
    bool force_attack_surface = false;

    static GenParams diverse();
    static GenParams attack_ready();
};

// One generated program in both disciplines. The two sources come from
// the same seed and decisions; they differ only in layout, memory-check
// spelling, and the argument offset of gate-entered functions.
struct GenOut {
    std::string text;      // zero-cost source
    std::string nacl_text; // heavyweight source
    Program prog;          // parsed zero-cost program
    Program nacl_prog;     // parsed heavyweight program
};

// Emits one discipline's source text.
std::string gen_library_text(uint64_t seed, const GenParams& p, Discipline d);

// Emits, parses, and cross-checks both forms. Throws std::runtime_error
// if the generated program fails to parse or is not well-formed.
GenOut gen_library(uint64_t seed, const GenParams& p);

enum class MutationKind {
    SkipCsrRestore,      // drop the last callee-saved restore in an exported function
    ClobberCsrThenRet,   // overwrite a callee-saved register right before the gate return
    ReadUninitScratch,   // return a never-written scratch register
    StoreBelowFrame,     // stack write below the current frame
    OverwriteRetAddr,    // stack write onto the return-address slot
    WrongArityCall,      // call an internal function with a smaller frame than it declares
    CrossFunctionJmp,    // jump from one function into another
    TamperSpBeforeRet,   // return with a displaced stack pointer
    LeakSecretToLibHeap, // store a possibly-secret register to the library heap
};

constexpr std::array<MutationKind, 9> kAllMutations = {
    MutationKind::SkipCsrRestore,    MutationKind::ClobberCsrThenRet,
    MutationKind::ReadUninitScratch, MutationKind::StoreBelowFrame,
    MutationKind::OverwriteRetAddr,  MutationKind::WrongArityCall,
    MutationKind::CrossFunctionJmp,  MutationKind::TamperSpBeforeRet,
    MutationKind::LeakSecretToLibHeap,
};

std::string to_string(MutationKind k);
std::optional<MutationKind> mutation_from_string(const std::string& s);

// What a mutation must trip: the static verifier check and the dynamic
// monitor reason.
struct AttackExpectation {
    const char* check;
    OReason reason;
};

AttackExpectation expectation(MutationKind k);

// Applies one mutation to a copy of the program, replacing instructions
// in place so no address moves. Returns nullopt when the program offers
// no site for this kind. The same seed picks the same site in the
// zero-cost and heavyweight twins of one generated program.
std::optional<Program> mutate(const Program& prog, MutationKind k, uint64_t seed);

} // namespace gal
