// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/gen.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "gal/asm.hpp"

namespace gal {
namespace {

// Heap addresses the library touches, valid in both disciplines'
// untrusted-heap windows.
constexpr uint64_t kLibHeapLo = 280;
constexpr uint64_t kLibHeapSpan = 61;

struct Rng {
    std::mt19937_64 eng;
    explicit Rng(uint64_t seed) : eng(seed) {}
    uint64_t pick(uint64_t n) { return n ? eng() % n : 0; }
    bool coin() { return (eng() & 1) != 0; }
};

enum class HKind { Plain, RecBase, RecStep };

struct HelperPlan {
    std::string name;
    uint32_t arity = 1;
    bool heap = false;
    HKind kind = HKind::Plain;
};

struct CallbackPlan {
    std::string name;
    uint32_t arity = 1;
};

enum class EKind { Leaf, Caller, TableCaller, CallbackCaller, RecEntry };

struct ExpPlan {
    std::string name;
    uint32_t arity = 1;
    EKind kind = EKind::Leaf;
    uint32_t saves = 0; // callee-saved registers spilled then reused (Leaf)
    bool diamond = false;
    bool heap_store = false;
    size_t target = 0; // helper index (Caller), callback index (CallbackCaller)
};

struct Plan {
    std::vector<HelperPlan> helpers;
    std::vector<CallbackPlan> callbacks;
    std::vector<ExpPlan> exports;
    bool has_table = false;
    size_t tbl_a = 0, tbl_b = 0;
    bool has_rec = false;
    size_t rec_base = 0, rec_step = 0;
    std::vector<size_t> calls; // driver: indices into exports
    uint32_t n_secrets = 0;
    std::vector<uint64_t> secret_vals;
    std::array<uint64_t, 4> csr_vals{};
};

std::string helper_name(size_t i) { return "helper" + std::to_string(i); }

// All random decisions live here and in the emitter, in one fixed order,
// so the two discipline renderings of a seed agree on everything except
// spelling.
Plan make_plan(Rng& rng, const GenParams& p) {
    Plan pl;
    if (p.force_attack_surface) {
        uint32_t h0a = 1 + static_cast<uint32_t>(rng.pick(2));
        uint32_t ht = 1 + static_cast<uint32_t>(rng.pick(2));
        pl.helpers.push_back({helper_name(0), h0a, rng.coin(), HKind::Plain});
        pl.helpers.push_back({helper_name(1), ht, rng.coin(), HKind::Plain});
        pl.helpers.push_back({helper_name(2), ht, rng.coin(), HKind::Plain});
        pl.has_table = true;
        pl.tbl_a = 1;
        pl.tbl_b = 2;
        ExpPlan e0{"fn0", 1 + static_cast<uint32_t>(rng.pick(p.max_args)), EKind::Leaf,
                   1 + static_cast<uint32_t>(rng.pick(2)), true, true, 0};
        ExpPlan e1{"fn1", 1 + static_cast<uint32_t>(rng.pick(2)), EKind::Caller,
                   0, false, rng.coin(), 0};
        ExpPlan e2{"fn2", 1, EKind::TableCaller, 0, false, false, 0};
        pl.exports.push_back(e0);
        pl.exports.push_back(e1);
        pl.exports.push_back(e2);
        if (p.allow_callbacks && rng.coin()) {
            pl.callbacks.push_back({"cb0", 1 + static_cast<uint32_t>(rng.pick(2))});
            pl.exports.push_back({"fn3", 1, EKind::CallbackCaller, 0, false, false, 0});
        }
        for (size_t i = 0; i < pl.exports.size(); ++i)
            pl.calls.push_back(i);
        uint32_t extra = static_cast<uint32_t>(rng.pick(2));
        for (uint32_t i = 0; i < extra; ++i)
            pl.calls.push_back(rng.pick(pl.exports.size()));
    } else {
        uint32_t n_exp = 1 + static_cast<uint32_t>(rng.pick(std::max(1u, p.max_funcs)));
        for (uint32_t i = 0; i < n_exp; ++i) {
            ExpPlan e;
            e.name = "fn" + std::to_string(i);
            uint64_t k = rng.pick(5);
            if (k == 1 && p.allow_internal_calls)
                e.kind = EKind::Caller;
            else if (k == 2 && p.allow_tables && p.allow_internal_calls)
                e.kind = EKind::TableCaller;
            else if (k == 3 && p.allow_callbacks)
                e.kind = EKind::CallbackCaller;
            else if (k == 4 && p.allow_recursion && p.allow_tables && p.allow_internal_calls)
                e.kind = EKind::RecEntry;
            switch (e.kind) {
            case EKind::Leaf:
                e.arity = static_cast<uint32_t>(rng.pick(p.max_args + 1));
                e.saves = static_cast<uint32_t>(rng.pick(3));
                e.diamond = p.allow_jumps && rng.coin();
                e.heap_store = rng.coin();
                break;
            case EKind::Caller: {
                e.arity = 1 + static_cast<uint32_t>(rng.pick(2));
                e.heap_store = rng.coin();
                uint32_t ha = 1 + static_cast<uint32_t>(rng.pick(2));
                e.target = pl.helpers.size();
                pl.helpers.push_back({helper_name(pl.helpers.size()), ha, rng.coin(), HKind::Plain});
                break;
            }
            case EKind::TableCaller:
                e.arity = 1;
                if (!pl.has_table) {
                    uint32_t ht = 1 + static_cast<uint32_t>(rng.pick(2));
                    pl.tbl_a = pl.helpers.size();
                    pl.helpers.push_back({helper_name(pl.helpers.size()), ht, rng.coin(), HKind::Plain});
                    pl.tbl_b = pl.helpers.size();
                    pl.helpers.push_back({helper_name(pl.helpers.size()), ht, rng.coin(), HKind::Plain});
                    pl.has_table = true;
                }
                break;
            case EKind::CallbackCaller:
                e.arity = 1;
                if (pl.callbacks.empty())
                    pl.callbacks.push_back({"cb0", 1 + static_cast<uint32_t>(rng.pick(2))});
                e.target = 0;
                break;
            case EKind::RecEntry:
                e.arity = 1;
                if (!pl.has_rec) {
                    pl.rec_base = pl.helpers.size();
                    pl.helpers.push_back({helper_name(pl.helpers.size()), 2, false, HKind::RecBase});
                    pl.rec_step = pl.helpers.size();
                    pl.helpers.push_back({helper_name(pl.helpers.size()), 2, false, HKind::RecStep});
                    pl.has_rec = true;
                }
                break;
            }
            pl.exports.push_back(std::move(e));
        }
        uint32_t span = p.max_calls >= p.min_calls ? p.max_calls - p.min_calls + 1 : 1;
        uint32_t n_calls = p.min_calls + static_cast<uint32_t>(rng.pick(span));
        for (uint32_t i = 0; i < n_calls; ++i)
            pl.calls.push_back(rng.pick(pl.exports.size()));
    }
    pl.n_secrets = 2 + static_cast<uint32_t>(rng.pick(5));
    for (uint32_t i = 0; i < pl.n_secrets; ++i)
        pl.secret_vals.push_back(5000 + rng.pick(5000));
    for (auto& c : pl.csr_vals)
        c = 1000 + rng.pick(9000);
    return pl;
}

// Renders one plan as source text for one discipline. The only
// discipline-dependent outputs are the layout name, the memory-check
// spelling in untrusted code, and the extra argument displacement of
// gate-entered functions (their callers leave no return address on the
// stack the callee sees under the heavyweight regime).
struct Emitter {
    Rng& rng;
    Discipline d;
    const Plan& pl;
    std::vector<std::string> lines;

    // per-function state
    long long s = 0;             // stack cells pushed since entry
    std::array<bool, 3> written{}; // r0..r2 written on every path
    bool gate_entered = false;
    bool trusted = false;
    uint32_t arity = 0;

    void raw(std::string t) { lines.push_back(std::move(t)); }
    void ins(const std::string& t) { lines.push_back("  " + t); }
    void label(const std::string& l) { lines.push_back(l + ":"); }

    static std::string rname(int i) { return "r" + std::to_string(i); }

    std::string stk_check() const {
        if (trusted)
            return "id";
        return d == Discipline::NaCl ? "mem.U" : "id";
    }
    std::string heap_check() const { return d == Discipline::NaCl ? "mem.U" : "heap.U"; }
    static std::string sp_minus(long long k) {
        return k == 0 ? "sp" : "sp - " + std::to_string(k);
    }
    // i-th argument of the current function, 1 = last pushed.
    std::string arg_ref(uint32_t i) const {
        long long disp = s + i - ((gate_entered && d == Discipline::NaCl) ? 1 : 0);
        return stk_check() + "(" + sp_minus(disp) + ")";
    }

    void begin_func(const std::string& name, uint32_t ar, bool exported, bool tr) {
        raw(".func " + name + " arity=" + std::to_string(ar) + (exported ? " exported" : ""));
        s = 0;
        written = {};
        gate_entered = exported;
        trusted = tr;
        arity = ar;
    }
    void end_func() { raw(".endfunc"); }

    void load_arg(int reg, uint32_t i) {
        ins("load " + rname(reg) + ", " + arg_ref(i));
        written[static_cast<size_t>(reg)] = true;
    }

    int pick_written() {
        std::vector<int> pool;
        for (int i = 0; i < 3; ++i)
            if (written[static_cast<size_t>(i)])
                pool.push_back(i);
        uint64_t ri = rng.pick(pool.empty() ? 1 : pool.size());
        return pool.empty() ? 0 : pool[static_cast<size_t>(ri)];
    }

    std::string expr_over_written() {
        uint64_t shape = rng.pick(3);
        uint64_t lit = 1 + rng.pick(20);
        int a = pick_written();
        bool any = written[0] || written[1] || written[2];
        if (!any)
            return std::to_string(lit);
        switch (shape) {
        case 0: return rname(a) + " + " + std::to_string(lit);
        case 1: return rname(a) + " * " + std::to_string(1 + lit % 3);
        default: return rname(a) + " + " + rname(pick_written());
        }
    }

    // A pushed operand: a written scratch register or a small literal.
    std::string operand() {
        bool use_reg = rng.coin();
        uint64_t lit = rng.pick(100);
        bool any = written[0] || written[1] || written[2];
        if (use_reg && any)
            return rname(pick_written());
        return std::to_string(lit);
    }

    // Calls clobber the scratch registers; only the return value comes
    // back initialized.
    void after_call() { written = {true, false, false}; }

    void body_arith() {
        uint32_t ops = 1 + static_cast<uint32_t>(rng.pick(3));
        for (uint32_t i = 0; i < ops; ++i) {
            int dst = static_cast<int>(rng.pick(3));
            std::string e = expr_over_written();
            ins("mov " + rname(dst) + ", " + e);
            written[static_cast<size_t>(dst)] = true;
        }
    }

    void heap_traffic() {
        uint64_t a1 = kLibHeapLo + rng.pick(kLibHeapSpan);
        uint64_t a2 = kLibHeapLo + rng.pick(kLibHeapSpan);
        bool also_load = rng.coin();
        ins("store " + heap_check() + "(" + std::to_string(a1) + "), " + rname(pick_written()));
        if (also_load) {
            ins("load r2, " + heap_check() + "(" + std::to_string(a2) + ")");
            written[2] = true;
        }
    }

    // Fixed epilogue: a slack slot, the return-value move, and the gate
    // return. Mutations key on this shape.
    void epilogue() {
        ins("mov r1, " + std::to_string(1 + rng.pick(999)));
        written[1] = true;
        ins("mov r0, " + expr_over_written());
        ins("gateret");
    }

    void emit_leaf(const ExpPlan& e) {
        begin_func(e.name, e.arity, true, false);
        for (uint32_t j = 0; j < e.saves; ++j) {
            ins("push U, " + rname(4 + static_cast<int>(j)));
            ++s;
        }
        // Saved registers get fresh values so a dropped restore is
        // observable; the range never collides with caller values.
        for (uint32_t j = 0; j < e.saves; ++j)
            ins("mov " + rname(4 + static_cast<int>(j)) + ", " + std::to_string(10 + rng.pick(90)));
        uint32_t na = std::min<uint32_t>(e.arity, 3);
        for (uint32_t i = 1; i <= na; ++i)
            load_arg(static_cast<int>(i) - 1, i);
        if (na == 0) {
            ins("mov r0, " + std::to_string(rng.pick(100)));
            written[0] = true;
        }
        body_arith();
        bool csr_scratch = e.saves > 0 && rng.coin();
        if (csr_scratch)
            ins("mov r4, " + std::to_string(10 + rng.pick(90)));
        if (e.heap_store)
            heap_traffic();
        if (e.diamond) {
            std::string lbl = e.name + "_j";
            ins("jmp code.U(" + lbl + ")");
            ins("mov r1, 999");
            label(lbl);
        }
        for (uint32_t j = e.saves; j > 0; --j) {
            ins("pop " + rname(4 + static_cast<int>(j) - 1) + ", U");
            --s;
        }
        epilogue();
        end_func();
    }

    void emit_caller(const ExpPlan& e) {
        const HelperPlan& h = pl.helpers[e.target];
        begin_func(e.name, e.arity, true, false);
        load_arg(0, 1);
        ins("mov r1, r0 + " + std::to_string(1 + rng.pick(20)));
        written[1] = true;
        for (uint32_t i = 0; i < h.arity; ++i) {
            ins("push U, " + operand());
            ++s;
        }
        ins("call code.U(" + h.name + ")");
        after_call();
        ins("mov sp, sp - " + std::to_string(h.arity));
        s -= h.arity;
        ins("mov r2, r0 + 1");
        written[2] = true;
        if (e.heap_store)
            heap_traffic();
        epilogue();
        end_func();
    }

    void emit_table_caller(const ExpPlan& e) {
        const HelperPlan& h = pl.helpers[pl.tbl_a];
        begin_func(e.name, e.arity, true, false);
        load_arg(0, 1);
        ins("mov r1, r0 - (r0 - 1)"); // collapse to a 0/1 index
        written[1] = true;
        for (uint32_t i = 0; i < h.arity; ++i) {
            ins("push U, " + operand());
            ++s;
        }
        ins("call table.tbl0(r1)");
        after_call();
        ins("mov sp, sp - " + std::to_string(h.arity));
        s -= h.arity;
        ins("mov r2, r0 + 1");
        written[2] = true;
        epilogue();
        end_func();
    }

    void emit_callback_caller(const ExpPlan& e) {
        const CallbackPlan& cb = pl.callbacks[e.target];
        begin_func(e.name, e.arity, true, false);
        load_arg(0, 1);
        ins("mov r1, r0 + " + std::to_string(1 + rng.pick(20)));
        written[1] = true;
        for (uint32_t i = 0; i < cb.arity; ++i) {
            ins("push U, " + operand());
            ++s;
        }
        ins("gatecall " + std::to_string(cb.arity) + ", " + cb.name);
        after_call();
        ins("mov sp, sp - " + std::to_string(cb.arity));
        s -= cb.arity;
        ins("mov r2, r0 + 7");
        written[2] = true;
        if (e.heap_store)
            heap_traffic();
        epilogue();
        end_func();
    }

    void emit_rec_entry(const ExpPlan& e) {
        begin_func(e.name, e.arity, true, false);
        load_arg(0, 1); // bounded counter from the driver
        ins("mov r1, r0 - (r0 - 1)");
        written[1] = true;
        ins("push U, r0"); // counter
        ++s;
        ins("push U, 0"); // accumulator seed
        ++s;
        ins("call table.tblrec(r1)");
        after_call();
        ins("mov sp, sp - 2");
        s -= 2;
        ins("mov r2, r0 + 1");
        written[2] = true;
        epilogue();
        end_func();
    }

    void emit_helper(const HelperPlan& h) {
        begin_func(h.name, h.arity, false, false);
        switch (h.kind) {
        case HKind::Plain: {
            uint32_t na = std::min<uint32_t>(h.arity, 2);
            for (uint32_t i = 1; i <= na; ++i)
                load_arg(static_cast<int>(i) - 1, i);
            if (na == 0) {
                ins("mov r0, " + std::to_string(rng.pick(100)));
                written[0] = true;
            }
            uint32_t ops = 1 + static_cast<uint32_t>(rng.pick(2));
            for (uint32_t i = 0; i < ops; ++i) {
                int dst = static_cast<int>(rng.pick(3));
                std::string ex = expr_over_written();
                ins("mov " + rname(dst) + ", " + ex);
                written[static_cast<size_t>(dst)] = true;
            }
            if (h.heap)
                heap_traffic();
            ins("mov r0, " + expr_over_written());
            ins("ret code.U");
            break;
        }
        case HKind::RecBase:
            load_arg(0, 1); // accumulator
            ins("mov r0, r0 + " + std::to_string(1 + rng.pick(9)));
            ins("ret code.U");
            break;
        case HKind::RecStep:
            load_arg(0, 1); // accumulator
            load_arg(1, 2); // counter
            ins("mov r1, r1 - 1");
            ins("mov r2, r1 - (r1 - 1)");
            written[2] = true;
            ins("mov r0, r0 + " + std::to_string(1 + rng.pick(9)));
            ins("push U, r1");
            ++s;
            ins("push U, r0");
            ++s;
            ins("call table.tblrec(r2)");
            ins("mov sp, sp - 2");
            s -= 2;
            ins("ret code.U");
            break;
        }
        end_func();
    }

    void emit_callback(const CallbackPlan& cb) {
        begin_func(cb.name, cb.arity, true, true);
        ins("load r0, " + arg_ref(1));
        written[0] = true;
        uint64_t lit = 1 + rng.pick(20);
        if (cb.arity >= 2) {
            ins("load r1, " + arg_ref(2));
            ins("mov r0, r0 + r1");
        } else {
            ins("mov r0, r0 + " + std::to_string(lit));
        }
        ins("gateret");
        end_func();
    }

    void emit_driver() {
        trusted = true;
        gate_entered = false;
        label("main");
        for (uint32_t j = 0; j < pl.n_secrets; ++j)
            ins("store id(" + std::to_string(64 + 2 * j) + "), " + std::to_string(pl.secret_vals[j]));
        for (int j = 0; j < 4; ++j)
            ins("mov " + rname(4 + j) + ", " + std::to_string(pl.csr_vals[static_cast<size_t>(j)]));
        size_t ci = 0;
        for (size_t idx : pl.calls) {
            const ExpPlan& e = pl.exports[idx];
            // Pad slots below the arguments so a library write below its
            // frame still lands inside the stack region.
            for (int i = 0; i < 8; ++i)
                ins("push T, 0");
            for (uint32_t i = 0; i < e.arity; ++i) {
                if (e.kind == EKind::RecEntry) {
                    ins("push T, " + std::to_string(1 + rng.pick(4)));
                } else {
                    bool from_reg = rng.coin();
                    uint64_t lit = rng.pick(100);
                    ins("push T, " + (from_reg ? std::string("r4") : std::to_string(lit)));
                }
            }
            ins("gatecall " + std::to_string(e.arity) + ", " + e.name);
            ins("mov sp, sp - " + std::to_string(8 + e.arity));
            ins("store id(" + std::to_string(100 + ci) + "), r0");
            ++ci;
        }
    }
};

// -------------------------------------------------------------------------
// Mutation sites.

struct Epi {
    size_t slack, retmov, gateret;
    const FuncMeta* f;
};

// Exported untrusted functions end with: mov r1, <lit>; mov r0, <e>;
// gateret. The slack move exists to be replaced.
std::vector<Epi> epilogue_sites(const Program& prog) {
    std::vector<Epi> out;
    for (const auto& f : prog.funcs) {
        if (!f.exported || prog.priv_at(f.entry) != Privilege::Untrusted)
            continue;
        for (size_t a = static_cast<size_t>(f.lo); a < static_cast<size_t>(f.hi); ++a) {
            const Command& c = prog.code[a].second;
            if (c.op != Op::GateRet || a < static_cast<size_t>(f.lo) + 2)
                continue;
            const Command& m0 = prog.code[a - 2].second;
            const Command& m1 = prog.code[a - 1].second;
            if (m0.op == Op::Mov && m0.reg == RegName::r1 && m0.e1.kind == Expr::Kind::Lit &&
                m1.op == Op::Mov && m1.reg == RegName::r0)
                out.push_back({a - 2, a - 1, a, &f});
        }
    }
    return out;
}

} // namespace

GenParams GenParams::diverse() { return GenParams{}; }

GenParams GenParams::attack_ready() {
    GenParams g;
    g.force_attack_surface = true;
    return g;
}

std::string gen_library_text(uint64_t seed, const GenParams& p, Discipline d) {
    Rng rng(seed);
    Plan pl = make_plan(rng, p);
    Emitter em{rng, d, pl, {}};
    em.raw(std::string(".layout ") +
           (d == Discipline::NaCl ? "nacl-default" : "zerocost-default"));
    if (!pl.callbacks.empty()) {
        std::string line = ".imports ";
        for (size_t i = 0; i < pl.callbacks.size(); ++i) {
            if (i)
                line += ", ";
            line += pl.callbacks[i].name;
        }
        em.raw(line);
    }
    em.raw(".lib");
    for (const auto& h : pl.helpers)
        em.emit_helper(h);
    for (const auto& e : pl.exports) {
        switch (e.kind) {
        case EKind::Leaf: em.emit_leaf(e); break;
        case EKind::Caller: em.emit_caller(e); break;
        case EKind::TableCaller: em.emit_table_caller(e); break;
        case EKind::CallbackCaller: em.emit_callback_caller(e); break;
        case EKind::RecEntry: em.emit_rec_entry(e); break;
        }
    }
    if (pl.has_table)
        em.raw(".table tbl0 = [" + pl.helpers[pl.tbl_a].name + ", " +
               pl.helpers[pl.tbl_b].name + "]");
    if (pl.has_rec)
        em.raw(".table tblrec = [" + pl.helpers[pl.rec_base].name + ", " +
               pl.helpers[pl.rec_step].name + "]");
    em.raw(".app");
    for (const auto& cb : pl.callbacks)
        em.emit_callback(cb);
    em.emit_driver();
    std::string out;
    for (const auto& l : em.lines) {
        out += l;
        out += '\n';
    }
    return out;
}

GenOut gen_library(uint64_t seed, const GenParams& p) {
    GenOut out;
    out.text = gen_library_text(seed, p, Discipline::ZeroCost);
    out.nacl_text = gen_library_text(seed, p, Discipline::NaCl);
    try {
        out.prog = parse_asm(out.text);
    } catch (const std::exception& e) {
        throw std::runtime_error("seed " + std::to_string(seed) +
                                 ": shared-stack parse: " + e.what());
    }
    try {
        out.nacl_prog = parse_asm(out.nacl_text);
    } catch (const std::exception& e) {
        throw std::runtime_error("seed " + std::to_string(seed) +
                                 ": heavyweight parse: " + e.what());
    }
    WfReport wz = well_formed(out.prog, Discipline::ZeroCost);
    if (!wz.ok)
        throw std::runtime_error("seed " + std::to_string(seed) + ": shared-stack wf: " +
                                 wz.issues[0].what + " at " + wz.issues[0].addr.str());
    WfReport wn = well_formed(out.nacl_prog, Discipline::NaCl);
    if (!wn.ok)
        throw std::runtime_error("seed " + std::to_string(seed) + ": heavyweight wf: " +
                                 wn.issues[0].what + " at " + wn.issues[0].addr.str());
    return out;
}

std::string to_string(MutationKind k) {
    switch (k) {
    case MutationKind::SkipCsrRestore: return "skip-csr-restore";
    case MutationKind::ClobberCsrThenRet: return "clobber-csr-then-ret";
    case MutationKind::ReadUninitScratch: return "read-uninit-scratch";
    case MutationKind::StoreBelowFrame: return "store-below-frame";
    case MutationKind::OverwriteRetAddr: return "overwrite-ret-addr";
    case MutationKind::WrongArityCall: return "wrong-arity-call";
    case MutationKind::CrossFunctionJmp: return "cross-function-jmp";
    case MutationKind::TamperSpBeforeRet: return "tamper-sp-before-ret";
    case MutationKind::LeakSecretToLibHeap: return "leak-secret-to-lib-heap";
    }
    return "?";
}

std::optional<MutationKind> mutation_from_string(const std::string& s) {
    for (MutationKind k : kAllMutations)
        if (to_string(k) == s)
            return k;
    return std::nullopt;
}

AttackExpectation expectation(MutationKind k) {
    switch (k) {
    case MutationKind::SkipCsrRestore: return {"csr-restore", OReason::CsrNotRestored};
    case MutationKind::ClobberCsrThenRet: return {"csr-restore", OReason::CsrNotRestored};
    case MutationKind::ReadUninitScratch: return {"init-before-use", OReason::SecretFlow};
    case MutationKind::StoreBelowFrame: return {"frame-bounds", OReason::WriteOutsideFrame};
    case MutationKind::OverwriteRetAddr: return {"frame-bounds", OReason::WriteOutsideFrame};
    case MutationKind::WrongArityCall: return {"call-typing", OReason::TypecheckFailed};
    case MutationKind::CrossFunctionJmp: return {"cfg", OReason::CrossFunctionJump};
    case MutationKind::TamperSpBeforeRet: return {"sp-discipline", OReason::RetAddrMismatch};
    case MutationKind::LeakSecretToLibHeap:
        return {"init-before-use", OReason::SecretToLibHeap};
    }
    return {"?", OReason::TypecheckFailed};
}

std::optional<Program> mutate(const Program& prog, MutationKind k, uint64_t seed) {
    std::mt19937_64 eng(seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<uint64_t>(k) + 1)));
    auto pick = [&](size_t n) -> size_t { return n ? static_cast<size_t>(eng() % n) : 0; };
    Program out = prog;
    // The heavyweight twin spells stack and heap accesses as guarded
    // untrusted-memory checks; the shared-stack twin uses bare addresses
    // for the stack and a heap guard for the heap.
    const bool heavy = !prog.layout.shared_stack;
    CheckKind stk = heavy ? CheckKind::mem(Privilege::Untrusted) : CheckKind::id();
    CheckKind hpc = heavy ? CheckKind::mem(Privilege::Untrusted)
                          : CheckKind::heap(Privilege::Untrusted);
    Expr sp = Expr::regref(RegName::sp);
    auto set = [&](size_t a, Command c) { out.code[a].second = std::move(c); };
    std::vector<Epi> eps = epilogue_sites(prog);

    switch (k) {
    case MutationKind::SkipCsrRestore: {
        std::vector<size_t> sites;
        for (const auto& f : prog.funcs) {
            if (!f.exported || prog.priv_at(f.entry) != Privilege::Untrusted)
                continue;
            std::optional<size_t> last;
            for (size_t a = static_cast<size_t>(f.lo); a < static_cast<size_t>(f.hi); ++a) {
                const Command& c = prog.code[a].second;
                if (c.op == Op::Pop && c.reg >= RegName::r4 && c.reg <= RegName::r7)
                    last = a;
            }
            if (last)
                sites.push_back(*last);
        }
        if (sites.empty())
            return std::nullopt;
        set(sites[pick(sites.size())],
            Command::mov(RegName::sp, Expr::sub(sp, Expr::literal(Word(1)))));
        return out;
    }
    case MutationKind::ClobberCsrThenRet: {
        if (eps.empty())
            return std::nullopt;
        set(eps[pick(eps.size())].slack, Command::mov(RegName::r4, Expr::literal(Word(333))));
        return out;
    }
    case MutationKind::ReadUninitScratch: {
        if (eps.empty())
            return std::nullopt;
        set(eps[pick(eps.size())].retmov,
            Command::mov(RegName::r0, Expr::regref(RegName::r3)));
        return out;
    }
    case MutationKind::StoreBelowFrame: {
        if (eps.empty())
            return std::nullopt;
        const Epi& e = eps[pick(eps.size())];
        uint64_t kk = e.f->arity + 1 + pick(3);
        set(e.slack, Command::store(stk, Expr::sub(sp, Expr::literal(Word(kk))),
                                    Expr::regref(RegName::r0)));
        return out;
    }
    case MutationKind::OverwriteRetAddr: {
        if (eps.empty())
            return std::nullopt;
        set(eps[pick(eps.size())].slack,
            Command::store(stk, sp, Expr::regref(RegName::r0)));
        return out;
    }
    case MutationKind::WrongArityCall: {
        std::vector<std::string> names; // internal victims, address order, deduped
        auto add = [&](const FuncMeta* f) {
            if (!f || f->exported)
                return;
            for (const auto& n : names)
                if (n == f->name)
                    return;
            names.push_back(f->name);
        };
        for (size_t a = 0; a < prog.code.size(); ++a) {
            if (prog.code[a].first != Privilege::Untrusted)
                continue;
            const Command& c = prog.code[a].second;
            if (c.op == Op::Call && c.check.kind == CheckKind::Kind::Code &&
                c.e1.kind == Expr::Kind::Lit)
                add(prog.func_by_entry(c.e1.lit));
        }
        if (names.empty())
            for (const auto& [tn, entries] : prog.tables)
                for (const auto& en : entries)
                    add(prog.func_by_entry(en));
        if (names.empty())
            return std::nullopt;
        const std::string& victim = names[pick(names.size())];
        for (auto& f : out.funcs)
            if (f.name == victim) {
                f.arity += 1;
                break;
            }
        return out;
    }
    case MutationKind::CrossFunctionJmp: {
        struct Site {
            size_t a;
            const FuncMeta* f;
        };
        std::vector<Site> sites;
        for (const auto& f : prog.funcs) {
            if (prog.priv_at(f.entry) != Privilege::Untrusted)
                continue;
            for (size_t a = static_cast<size_t>(f.lo); a < static_cast<size_t>(f.hi); ++a) {
                const Command& c = prog.code[a].second;
                if (c.op == Op::Jmp && c.check.kind == CheckKind::Kind::Code &&
                    c.e1.kind == Expr::Kind::Lit)
                    sites.push_back({a, &f});
            }
        }
        if (sites.empty())
            return std::nullopt;
        const Site& s0 = sites[pick(sites.size())];
        std::vector<const FuncMeta*> primary, fallback;
        for (const auto& f : prog.funcs) {
            if (&f == s0.f || prog.priv_at(f.entry) != Privilege::Untrusted)
                continue;
            (f.exported ? primary : fallback).push_back(&f);
        }
        const auto& tgt = primary.empty() ? fallback : primary;
        if (tgt.empty())
            return std::nullopt;
        set(s0.a, Command::jmp(CheckKind::code(Privilege::Untrusted),
                               Expr::literal(tgt[pick(tgt.size())]->entry)));
        return out;
    }
    case MutationKind::TamperSpBeforeRet: {
        if (eps.empty())
            return std::nullopt;
        set(eps[pick(eps.size())].slack,
            Command::mov(RegName::sp, Expr::add(sp, Expr::literal(Word(3)))));
        return out;
    }
    case MutationKind::LeakSecretToLibHeap: {
        uint64_t addr = 300 + pick(40);
        if (eps.empty())
            return std::nullopt;
        set(eps[pick(eps.size())].slack,
            Command::store(hpc, Expr::literal(Word(addr)), Expr::regref(RegName::r3)));
        return out;
    }
    }
    return std::nullopt;
}

} // namespace gal
