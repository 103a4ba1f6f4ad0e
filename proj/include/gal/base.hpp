// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <boost/multiprecision/cpp_int.hpp>

namespace gal {

// Machine words are unbounded naturals; subtraction is monus (clamps at 0).
using Word = boost::multiprecision::cpp_int;

enum class Privilege { Untrusted, Trusted };

// Partial order: Untrusted below Trusted.
inline bool leq(Privilege a, Privilege b) {
    return a == Privilege::Untrusted || b == Privilege::Trusted;
}
inline Privilege join(Privilege a, Privilege b) {
    return (a == Privilege::Trusted || b == Privilege::Trusted) ? Privilege::Trusted
                                                                : Privilege::Untrusted;
}
inline Privilege opposite(Privilege p) {
    return p == Privilege::Trusted ? Privilege::Untrusted : Privilege::Trusted;
}
inline std::string to_string(Privilege p) { return p == Privilege::Trusted ? "T" : "U"; }

// General-purpose registers r0..r7 plus the special sp/pc, which are
// readable in expressions but live outside the register file.
inline constexpr int NUM_REGS = 8;

enum class RegName : uint8_t { r0, r1, r2, r3, r4, r5, r6, r7, sp, pc };

inline bool is_gpr(RegName r) { return static_cast<int>(r) < NUM_REGS; }
inline int gpr_index(RegName r) { return static_cast<int>(r); }
inline RegName gpr(int i) { return static_cast<RegName>(i); }

std::string to_string(RegName r);

// Calling convention. Sizes are configuration; these are the defaults used
// throughout: callee-saved r4..r7, scratch r0..r3, return value in r0,
// transitions clear all of r0..r7.
struct Convention {
    std::array<RegName, 4> csr{RegName::r4, RegName::r5, RegName::r6, RegName::r7};
    std::array<RegName, 8> clear_set{RegName::r0, RegName::r1, RegName::r2, RegName::r3,
                                     RegName::r4, RegName::r5, RegName::r6, RegName::r7};
    RegName ret_reg = RegName::r0;

    bool is_csr(RegName r) const {
        for (RegName c : csr)
            if (c == r)
                return true;
        return false;
    }
    int csr_index(RegName r) const {
        for (size_t i = 0; i < csr.size(); ++i)
            if (csr[i] == r)
                return static_cast<int>(i);
        return -1;
    }
};

inline const Convention& default_convention() {
    static const Convention c{};
    return c;
}

// Monus: natural subtraction clamping at zero.
inline Word monus(const Word& a, const Word& b) { return a >= b ? Word(a - b) : Word(0); }

} // namespace gal
