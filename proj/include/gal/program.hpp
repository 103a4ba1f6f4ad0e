// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "gal/command.hpp"
#include "gal/layout.hpp"

namespace gal {

// A declared library function: name, entry address, arity, and the
// contiguous instruction range [lo, hi) it occupies.
struct FuncMeta {
    std::string name;
    Word entry{};
    uint32_t arity = 0;
    Word lo{}, hi{};
    bool exported = false;
};

struct Program {
    // Dense code map: address i holds code[i]. Addresses are sequential
    // from zero, so dom(C) = [0, code.size()).
    std::vector<std::pair<Privilege, Command>> code;
    Word entry_pc{};
    Layout layout;

    std::set<Word> imports;                       // gate entries into trusted code
    std::vector<FuncMeta> funcs;                  // library function metadata
    std::map<std::string, std::vector<Word>> tables; // call tables: name -> entries
    std::vector<std::pair<Word, Word>> init_mem;  // initial memory cells

    // Source-level names, kept for printing only.
    std::map<std::string, Word> labels;
    std::vector<std::string> import_names;
    std::map<std::string, std::vector<std::string>> table_names;

    bool in_code(const Word& a) const { return a < Word(code.size()); }
    std::optional<Privilege> priv_at(const Word& a) const {
        if (!in_code(a))
            return std::nullopt;
        return code[static_cast<size_t>(a)].first;
    }
    const Command* cmd_at(const Word& a) const {
        if (!in_code(a))
            return nullptr;
        return &code[static_cast<size_t>(a)].second;
    }

    // Function containing an address, if any (functions never overlap).
    const FuncMeta* func_at(const Word& a) const;
    // Function whose entry is exactly this address.
    const FuncMeta* func_by_entry(const Word& a) const;
    const FuncMeta* func_by_name(const std::string& n) const;

    // Structural equality on semantic content (labels excluded).
    bool same_program(const Program& o) const;
};

enum class Discipline { NaCl, ZeroCost };

struct WfIssue {
    Word addr{};
    std::string what;
};

struct WfReport {
    bool ok = true;
    std::vector<WfIssue> issues;
};

// Static well-formedness for a discipline. For NaCl: untrusted memory
// operands guarded within untrusted memory, untrusted pop/push annotated
// untrusted, control-flow checks land in the executing privilege's code,
// entry trusted, and the context chain is set up in the trusted heap.
// For zero-cost: untrusted code partitioned into declared functions;
// untrusted loads/stores either untrusted-heap-guarded or sp-relative;
// untrusted jmp/call guarded into untrusted code (or a table); library
// gatecalls target imports; entry trusted.
WfReport well_formed(const Program& prog, Discipline d);

} // namespace gal
