// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gal/program.hpp"

namespace gal {

// Abstract value tracked per register and per stack slot.
//   Uninit       - unknown or not written yet (bottom)
//   Init         - definitely written by this activation
//   CalleeSaved  - still holds the caller's value of callee-saved register r
struct AbsVal {
    enum class K { Uninit, Init, CalleeSaved };
    K k = K::Uninit;
    RegName csr = RegName::r4; // meaningful only when k == CalleeSaved

    static AbsVal uninit() { return {}; }
    static AbsVal init() { return {K::Init, RegName::r4}; }
    static AbsVal callee_saved(RegName r) { return {K::CalleeSaved, r}; }
    bool operator==(const AbsVal& o) const {
        return k == o.k && (k != K::CalleeSaved || csr == o.csr);
    }
};

// Meet: equal values survive, anything else collapses to Uninit.
AbsVal meet(const AbsVal& a, const AbsVal& b);

// Abstract frame at a program point. Stack slots are keyed by their
// offset from the stack pointer at function entry (the return-address
// slot is offset 0, arguments sit at -arity..-1); a missing key means
// Uninit. sp_off is the current sp relative to entry; nullopt means the
// verifier lost track of it.
struct AbsFrame {
    std::array<AbsVal, NUM_REGS> regs{};
    std::map<long long, AbsVal> slots;
    std::optional<long long> sp_off = 0;

    AbsVal slot(long long o) const;
    void set_slot(long long o, const AbsVal& v); // erases Uninit
    bool operator==(const AbsFrame& o) const;
};

AbsFrame meet(const AbsFrame& a, const AbsFrame& b);

// Frame at function entry: arguments initialized, the return-address
// slot deliberately left unknown, callee-saved registers tagged.
AbsFrame entry_frame(const FuncMeta& f);

// One check failure at one instruction.
struct Violation {
    std::string check; // stable check name, e.g. "csr-restore"
    Word pc{};
    std::string detail;
};

struct FuncReport {
    std::string func;
    bool cfg_ok = true;
    std::string cfg_error;
    std::vector<Violation> violations; // includes a "cfg" entry when !cfg_ok
    bool ok() const { return cfg_ok && violations.empty(); }
};

struct VerdictReport {
    bool ok = true;
    std::vector<FuncReport> funcs;
    bool contains(const std::string& check) const;
    std::vector<Violation> all() const;
};

// Basic blocks of one function, fallthrough and jump edges only
// (calls are summarized, not control edges).
struct CfgBlock {
    Word lo{}, hi{};          // instruction range [lo, hi)
    std::vector<Word> succs;  // leaders of successor blocks
};

struct Cfg {
    std::vector<CfgBlock> blocks; // sorted by lo
    const CfgBlock* at(const Word& leader) const;
};

// Builds the function's CFG. Fails (returning a message) on computed
// jump targets, jumps that leave the function, and paths that can fall
// off the end of the function.
std::optional<std::string> build_cfg(const Program& prog, const FuncMeta& f, Cfg& out);

// Verifies one declared function against the library discipline.
FuncReport verify_function(const Program& prog, const FuncMeta& f);

// Verifies every untrusted declared function.
VerdictReport verify_library(const Program& prog);

} // namespace gal
