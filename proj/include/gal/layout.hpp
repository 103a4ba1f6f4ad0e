// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <optional>
#include <string>

#include "gal/base.hpp"

namespace gal {

// Half-open address interval [lo, hi).
struct Interval {
    Word lo{}, hi{};
    bool contains(const Word& a) const { return a >= lo && a < hi; }
    bool operator==(const Interval& o) const { return lo == o.lo && hi == o.hi; }
};

// Which data regions an address belongs to. With a shared stack the two
// stack bits are both set.
struct RegionSet {
    bool heap_t = false, stack_t = false, heap_u = false, stack_u = false;

    bool heap(Privilege p) const { return p == Privilege::Trusted ? heap_t : heap_u; }
    bool stack(Privilege p) const { return p == Privilege::Trusted ? stack_t : stack_u; }
    bool mem(Privilege p) const { return heap(p) || stack(p); }
    bool any_stack() const { return stack_t || stack_u; }
    bool any() const { return heap_t || stack_t || heap_u || stack_u; }
};

// Data-memory layout: disjoint heap/stack regions per privilege, or a
// single shared stack. The ctx fields configure the heavyweight-transition
// context area (a stack of saved activation data in the trusted heap).
struct Layout {
    Interval heap_t, stack_t, heap_u, stack_u;
    bool shared_stack = false;

    bool has_ctx = false;
    Word ctx_star{}; // address of the context pointer
    Word ctx0{};     // initial context address
    Word sp0{};      // initial stack pointer

    RegionSet region_of(const Word& a) const {
        RegionSet r;
        r.heap_t = heap_t.contains(a);
        r.heap_u = heap_u.contains(a);
        if (shared_stack) {
            r.stack_t = r.stack_u = stack_t.contains(a);
        } else {
            r.stack_t = stack_t.contains(a);
            r.stack_u = stack_u.contains(a);
        }
        return r;
    }

    // One address past every region; used as an out-of-range sentinel.
    Word mem_end() const;

    bool operator==(const Layout& o) const;
};

// [0,128) trusted heap, [128,256) trusted stack, [256,384) untrusted heap,
// [384,512) untrusted stack; context pointer at 0, first context at 8,
// initial sp 127.
Layout nacl_default_layout();

// [0,256) trusted heap, [256,512) untrusted heap, shared stack [512,1024);
// initial sp 511.
Layout zerocost_default_layout();

} // namespace gal
