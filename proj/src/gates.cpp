// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/gates.hpp"

namespace gal {

namespace {

StepOut err(std::string what, ErrKind k = ErrKind::Region) {
    return {StepTag::Error, 1, std::move(what), k};
}

bool in_any_stack(const Layout& l, const Word& a) { return l.region_of(a).any_stack(); }

uint32_t csr_len(const Convention& c) { return static_cast<uint32_t>(c.csr.size()); }
uint32_t clear_len(const Convention& c) { return static_cast<uint32_t>(c.clear_set.size()); }

// Zero-cost gates are ordinary call/ret instructions plus a landing-domain
// obligation on the target.
StepOut zerocost_call(const Program& prog, MachineState& st, uint32_t /*n*/,
                      const Expr& target_e, Privilege from) {
    Word target = eval_expr(st, target_e);
    if (from == Privilege::Untrusted && !prog.imports.count(target))
        return err("gate call target not an import: " + target.str(), ErrKind::Guard);
    auto landing = prog.priv_at(target);
    if (!landing || *landing != opposite(from))
        return err("gate call landing not in opposite domain: " + target.str());
    Word tgt_sp = st.sp + 1;
    if (!in_any_stack(prog.layout, tgt_sp))
        return err("gate call return-address push outside stack");
    st.mset(tgt_sp, st.pc + 1);
    st.sp = tgt_sp;
    st.pc = target;
    return {StepTag::Next, 1, {}};
}

StepOut zerocost_ret(const Program& prog, MachineState& st, Privilege from) {
    if (!in_any_stack(prog.layout, st.sp))
        return err("gate return with sp outside stack");
    Word target = st.mget(st.sp);
    auto landing = prog.priv_at(target);
    if (!landing || *landing != opposite(from))
        return err("gate return landing not in opposite domain: " + target.str());
    st.pc = target;
    st.sp -= 1;
    return {StepTag::Next, 1, {}};
}

// Heavyweight springboard: trusted gatecall entering the library.
// Pushes the return address, saves callee-saved registers into a fresh
// context, copies arguments onto the library stack, parks the caller's
// stack pointer, clears every register, and jumps.
StepOut nacl_springboard(const Program& prog, MachineState& st, uint32_t n,
                         const Expr& target_e, const Convention& conv) {
    const Layout& lay = prog.layout;
    if (!lay.has_ctx)
        return err("heavyweight gate without context area");
    Word target = eval_expr(st, target_e); // resolved before any effect
    auto landing = prog.priv_at(target);
    if (!landing || *landing != Privilege::Untrusted)
        return err("gate call landing not in library code: " + target.str());

    // Return address, as with any call.
    Word ra_slot = st.sp + 1;
    if (!in_any_stack(lay, ra_slot))
        return err("gate call return-address push outside stack");
    st.mset(ra_slot, st.pc + 1);
    st.sp = ra_slot;

    uint32_t len = csr_len(conv);
    Word ctx_old = st.mget(lay.ctx_star);
    Word lib_sp = st.mget(ctx_old);

    // Callee-saved spill: CSR_{len-1} at ctx_old, ..., CSR_0 at ctx_old+len-1.
    for (uint32_t i = 0; i < len; ++i) {
        Word a = ctx_old + i;
        if (!lay.heap_t.contains(a))
            return err("context save outside trusted heap at " + a.str());
        st.mset(a, st.reg(conv.csr[len - 1 - i]));
    }
    Word newctx = ctx_old + len;
    if (!lay.heap_t.contains(newctx))
        return err("context slot outside trusted heap at " + newctx.str());

    // Arguments move from the caller's stack onto the library stack,
    // order preserved: the cell below the return address lands on top.
    for (uint32_t i = 0; i < n; ++i) {
        Word src = monus(ra_slot, Word(1) + i);
        if (!in_any_stack(lay, src))
            return err("gate call argument read outside stack at " + src.str());
        Word dst = lib_sp + (n - i);
        if (!lay.region_of(dst).mem(Privilege::Untrusted))
            return err("gate call argument copy outside library memory at " + dst.str());
        st.mset(dst, st.mget(src));
    }

    st.mset(newctx, ra_slot); // park the caller's stack pointer
    st.sp = lib_sp + n;
    st.mset(lay.ctx_star, newctx);
    for (RegName r : conv.clear_set)
        st.reg(r) = 0;
    st.pc = target;
    return {StepTag::Next, gate_cost(Strategy::NaClHeavy, GateKind::CallIn, n, conv), {}};
}

// Heavyweight trampoline: untrusted gateret back to the application.
// Restores callee-saved registers from the context, parks the library
// stack pointer, unparks the caller's, and returns.
StepOut nacl_trampoline(const Program& prog, MachineState& st, const Convention& conv) {
    const Layout& lay = prog.layout;
    if (!lay.has_ctx)
        return err("heavyweight gate without context area");
    uint32_t len = csr_len(conv);
    Word ctx = st.mget(lay.ctx_star);
    if (!lay.heap_t.contains(ctx) || ctx < Word(len))
        return err("context outside trusted heap at " + ctx.str());
    for (uint32_t j = 0; j < len; ++j) {
        Word a = ctx - 1 - j;
        if (!lay.heap_t.contains(a))
            return err("context restore outside trusted heap at " + a.str());
        st.reg(conv.csr[j]) = st.mget(a);
    }
    Word app_sp = st.mget(ctx);
    Word ctx_old = ctx - len;
    if (!lay.heap_t.contains(ctx_old))
        return err("context slot outside trusted heap at " + ctx_old.str());
    st.mset(ctx_old, st.sp); // park the library stack pointer
    st.mset(lay.ctx_star, ctx_old);
    st.sp = app_sp;

    if (!in_any_stack(lay, st.sp))
        return err("gate return with sp outside stack");
    Word target = st.mget(st.sp);
    auto landing = prog.priv_at(target);
    if (!landing || *landing != Privilege::Trusted)
        return err("gate return landing not in trusted code: " + target.str());
    st.pc = target;
    st.sp -= 1;
    return {StepTag::Next, gate_cost(Strategy::NaClHeavy, GateKind::RetOut, 0, conv), {}};
}

// Heavyweight callback springboard: untrusted gatecall out to an import.
// Pushes the return address on the library stack, records its location in
// a nested context, copies arguments above the parked application stack
// pointer, and jumps. No registers are saved or cleared.
StepOut nacl_cb_springboard(const Program& prog, MachineState& st, uint32_t n,
                            const Expr& target_e, const Convention& conv) {
    const Layout& lay = prog.layout;
    if (!lay.has_ctx)
        return err("heavyweight gate without context area");
    Word target = eval_expr(st, target_e);
    if (!prog.imports.count(target))
        return err("gate call target not an import: " + target.str(), ErrKind::Guard);
    auto landing = prog.priv_at(target);
    if (!landing || *landing != Privilege::Trusted)
        return err("gate call landing not in trusted code: " + target.str());

    Word ra_slot = st.sp + 1;
    if (!in_any_stack(lay, ra_slot))
        return err("gate call return-address push outside stack");
    st.mset(ra_slot, st.pc + 1);
    st.sp = ra_slot;

    Word ctx = st.mget(lay.ctx_star);
    Word ctx_nested = ctx + 1;
    if (!lay.heap_t.contains(ctx) || !lay.heap_t.contains(ctx_nested))
        return err("context slot outside trusted heap at " + ctx_nested.str());
    Word app_sp = st.mget(ctx);
    st.mset(ctx_nested, ra_slot); // park the library stack pointer
    st.mset(lay.ctx_star, ctx_nested);

    for (uint32_t i = 0; i < n; ++i) {
        Word src = monus(ra_slot, Word(1) + i);
        if (!lay.region_of(src).stack(Privilege::Untrusted))
            return err("callback argument read outside library stack at " + src.str());
        Word dst = app_sp + (n - i);
        if (!lay.region_of(dst).stack(Privilege::Trusted))
            return err("callback argument copy outside application stack at " + dst.str());
        st.mset(dst, st.mget(src));
    }
    st.sp = app_sp + n;
    st.pc = target;
    return {StepTag::Next, gate_cost(Strategy::NaClHeavy, GateKind::CallbackOut, n, conv), {}};
}

// Heavyweight callback trampoline: trusted gateret back into the library.
// Unparks the library stack pointer, drops the nested context, clears
// every register, and returns.
StepOut nacl_cb_trampoline(const Program& prog, MachineState& st, const Convention& conv) {
    const Layout& lay = prog.layout;
    if (!lay.has_ctx)
        return err("heavyweight gate without context area");
    Word ctx_nested = st.mget(lay.ctx_star);
    if (!lay.heap_t.contains(ctx_nested) || ctx_nested < Word(1))
        return err("context outside trusted heap at " + ctx_nested.str());
    Word lib_sp = st.mget(ctx_nested);
    st.mset(lay.ctx_star, ctx_nested - 1);
    st.sp = lib_sp;
    for (RegName r : conv.clear_set)
        st.reg(r) = 0;

    if (!in_any_stack(lay, st.sp))
        return err("gate return with sp outside stack");
    Word target = st.mget(st.sp);
    auto landing = prog.priv_at(target);
    if (!landing || *landing != Privilege::Untrusted)
        return err("gate return landing not in library code: " + target.str());
    st.pc = target;
    st.sp -= 1;
    return {StepTag::Next, gate_cost(Strategy::NaClHeavy, GateKind::CallbackRet, 0, conv), {}};
}

} // namespace

uint32_t gate_cost(Strategy s, GateKind k, uint32_t n_args, const Convention& conv) {
    if (s == Strategy::ZeroCost)
        return 1;
    switch (k) {
    case GateKind::CallIn:
        return 10 + 2 * csr_len(conv) + 3 * n_args + clear_len(conv);
    case GateKind::RetOut:
        return 8 + 2 * csr_len(conv);
    case GateKind::CallbackOut:
        return 10 + 3 * n_args;
    case GateKind::CallbackRet:
        return 6 + clear_len(conv);
    }
    return 1;
}

uint32_t gate_cost(Strategy s, GateDir d, uint32_t n_args, const Convention& conv) {
    return gate_cost(s, d == GateDir::AppToLib ? GateKind::CallIn : GateKind::RetOut, n_args,
                     conv);
}

StepOut gate_call(const Program& prog, MachineState& st, Strategy strat, uint32_t n,
                  const Expr& target) {
    auto p = prog.priv_at(st.pc);
    if (!p)
        return err("gate call outside code");
    const Convention& conv = default_convention();
    if (strat == Strategy::ZeroCost)
        return zerocost_call(prog, st, n, target, *p);
    return *p == Privilege::Trusted ? nacl_springboard(prog, st, n, target, conv)
                                    : nacl_cb_springboard(prog, st, n, target, conv);
}

StepOut gate_ret(const Program& prog, MachineState& st, Strategy strat) {
    auto p = prog.priv_at(st.pc);
    if (!p)
        return err("gate return outside code");
    const Convention& conv = default_convention();
    if (strat == Strategy::ZeroCost)
        return zerocost_ret(prog, st, *p);
    return *p == Privilege::Untrusted ? nacl_trampoline(prog, st, conv)
                                      : nacl_cb_trampoline(prog, st, conv);
}

} // namespace gal
