// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/layout.hpp"

#include <algorithm>

namespace gal {

Word Layout::mem_end() const {
    Word m = heap_t.hi;
    m = std::max(m, stack_t.hi);
    m = std::max(m, heap_u.hi);
    m = std::max(m, stack_u.hi);
    return m;
}

bool Layout::operator==(const Layout& o) const {
    return heap_t == o.heap_t && stack_t == o.stack_t && heap_u == o.heap_u &&
           stack_u == o.stack_u && shared_stack == o.shared_stack && has_ctx == o.has_ctx &&
           (!has_ctx || (ctx_star == o.ctx_star && ctx0 == o.ctx0)) && sp0 == o.sp0;
}

Layout nacl_default_layout() {
    Layout l;
    l.heap_t = {0, 128};
    l.stack_t = {128, 256};
    l.heap_u = {256, 384};
    l.stack_u = {384, 512};
    l.shared_stack = false;
    l.has_ctx = true;
    l.ctx_star = 0;
    l.ctx0 = 8;
    l.sp0 = 127;
    return l;
}

Layout zerocost_default_layout() {
    Layout l;
    l.heap_t = {0, 256};
    l.heap_u = {256, 512};
    l.stack_t = {512, 1024};
    l.stack_u = {512, 1024};
    l.shared_stack = true;
    l.has_ctx = false;
    l.sp0 = 511;
    return l;
}

} // namespace gal
