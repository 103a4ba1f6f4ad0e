// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/asm.hpp"

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace gal {

namespace {

struct Token {
    enum class Kind { Ident, Number, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    Word num{};
};

struct Lexer {
    const std::string& s;
    size_t i = 0;
    int line;

    Lexer(const std::string& src, int line_) : s(src), line(line_) {}

    Token next() {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
            ++i;
        if (i >= s.size())
            return {};
        char c = s[i];
        Token t;
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j])))
                ++j;
            t.kind = Token::Kind::Number;
            t.text = s.substr(i, j - i);
            t.num = Word(t.text);
            i = j;
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_'))
                ++j;
            t.kind = Token::Kind::Ident;
            t.text = s.substr(i, j - i);
            i = j;
            return t;
        }
        // ".." is one token (interval separator); "." alone is the
        // check-kind qualifier.
        if (c == '.' && i + 1 < s.size() && s[i + 1] == '.') {
            t.kind = Token::Kind::Punct;
            t.text = "..";
            i += 2;
            return t;
        }
        t.kind = Token::Kind::Punct;
        t.text = std::string(1, c);
        ++i;
        return t;
    }
};

struct TokenStream {
    std::vector<Token> toks;
    size_t pos = 0;
    int line;

    TokenStream(const std::string& src, int line_) : line(line_) {
        Lexer lx(src, line_);
        for (Token t = lx.next(); t.kind != Token::Kind::End; t = lx.next())
            toks.push_back(t);
    }

    const Token* peek() const { return pos < toks.size() ? &toks[pos] : nullptr; }
    bool at_end() const { return pos >= toks.size(); }

    Token take() {
        if (at_end())
            throw ParseError(line, "unexpected end of line");
        return toks[pos++];
    }
    bool try_punct(const std::string& p) {
        if (const Token* t = peek(); t && t->kind == Token::Kind::Punct && t->text == p) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect_punct(const std::string& p) {
        if (!try_punct(p))
            throw ParseError(line, "expected '" + p + "'");
    }
    std::string expect_ident() {
        Token t = take();
        if (t.kind != Token::Kind::Ident)
            throw ParseError(line, "expected identifier, got '" + t.text + "'");
        return t.text;
    }
    Word expect_number() {
        Token t = take();
        if (t.kind != Token::Kind::Number)
            throw ParseError(line, "expected number, got '" + t.text + "'");
        return t.num;
    }
    void expect_end() {
        if (!at_end())
            throw ParseError(line, "trailing tokens: '" + peek()->text + "'");
    }
};

std::optional<RegName> reg_of(const std::string& s) {
    if (s == "sp")
        return RegName::sp;
    if (s == "pc")
        return RegName::pc;
    if (s.size() == 2 && s[0] == 'r' && s[1] >= '0' && s[1] < '0' + NUM_REGS)
        return gpr(s[1] - '0');
    return std::nullopt;
}

bool is_reserved_word(const std::string& s) {
    return reg_of(s).has_value() || s == "T" || s == "U";
}

Privilege parse_priv(TokenStream& ts) {
    std::string s = ts.expect_ident();
    if (s == "T")
        return Privilege::Trusted;
    if (s == "U")
        return Privilege::Untrusted;
    throw ParseError(ts.line, "expected privilege T or U, got '" + s + "'");
}

Privilege priv_of_tag(TokenStream& ts) {
    std::string s = ts.expect_ident();
    if (s == "T")
        return Privilege::Trusted;
    if (s == "U")
        return Privilege::Untrusted;
    throw ParseError(ts.line, "expected T or U after '.', got '" + s + "'");
}

CheckKind parse_check(TokenStream& ts) {
    std::string s = ts.expect_ident();
    if (s == "id")
        return CheckKind::id();
    if (s == "imports")
        return CheckKind::imports();
    if (s == "table") {
        ts.expect_punct(".");
        return CheckKind::table_ref(ts.expect_ident());
    }
    if (s == "mem" || s == "heap" || s == "stack" || s == "code") {
        ts.expect_punct(".");
        Privilege p = priv_of_tag(ts);
        if (s == "mem")
            return CheckKind::mem(p);
        if (s == "heap")
            return CheckKind::heap(p);
        if (s == "stack")
            return CheckKind::stack(p);
        return CheckKind::code(p);
    }
    throw ParseError(ts.line, "unknown check kind '" + s + "'");
}

RegName parse_gpr(TokenStream& ts, bool allow_sp = false) {
    std::string s = ts.expect_ident();
    auto r = reg_of(s);
    if (!r || (!is_gpr(*r) && !(allow_sp && *r == RegName::sp)))
        throw ParseError(ts.line, "expected register, got '" + s + "'");
    return *r;
}

} // namespace

Program parse_asm(const std::string& src) { // NOLINT(readability-function-cognitive-complexity)
    // Pass 1 assigns addresses and binds labels; pass 2 parses command
    // lines with the label table in scope.
    struct RawCmd {
        int line;
        std::string text;
        Privilege priv;
    };

    std::vector<std::string> lines;
    {
        std::istringstream in(src);
        std::string l;
        while (std::getline(in, l))
            lines.push_back(l);
    }
    auto strip = [](std::string c) {
        if (size_t sc = c.find(';'); sc != std::string::npos)
            c.resize(sc);
        size_t b = c.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            return std::string();
        size_t e = c.find_last_not_of(" \t\r");
        return c.substr(b, e - b + 1);
    };

    Program prog;
    prog.layout = zerocost_default_layout();
    bool layout_set = false;

    std::map<std::string, Word> labels;
    std::vector<RawCmd> cmds; // address = index
    struct RawTable {
        int line;
        std::string name;
        std::vector<std::string> entries;
    };
    std::vector<RawTable> raw_tables;
    std::vector<std::pair<int, std::string>> raw_import_lines; // line, rest
    Privilege cur_priv = Privilege::Trusted;
    std::optional<size_t> open_func; // index into prog.funcs

    auto def_label = [&](const std::string& name, int line) {
        if (is_reserved_word(name))
            throw ParseError(line, "label '" + name + "' is a reserved word");
        if (labels.count(name))
            throw ParseError(line, "duplicate label '" + name + "'");
        labels[name] = Word(cmds.size());
    };

    for (size_t li = 0; li < lines.size(); ++li) {
        int ln = static_cast<int>(li + 1);
        std::string text = strip(lines[li]);
        if (text.empty())
            continue;

        if (text[0] == '.') {
            TokenStream ts(text.substr(1), ln);
            std::string dir = ts.expect_ident();
            if (dir == "layout") {
                std::string kind = ts.expect_ident();
                if (kind == "nacl") {
                    ts.expect_punct("-");
                    if (ts.expect_ident() != "default")
                        throw ParseError(ln, "unknown layout");
                    prog.layout = nacl_default_layout();
                } else if (kind == "zerocost") {
                    ts.expect_punct("-");
                    if (ts.expect_ident() != "default")
                        throw ParseError(ln, "unknown layout");
                    prog.layout = zerocost_default_layout();
                } else if (kind == "custom") {
                    Layout l;
                    bool saw_shared = false;
                    while (!ts.at_end()) {
                        std::string key = ts.expect_ident();
                        if (key == "shared") {
                            saw_shared = true;
                            continue;
                        }
                        ts.expect_punct("=");
                        if (key == "ctxstar") {
                            l.ctx_star = ts.expect_number();
                            l.has_ctx = true;
                            continue;
                        }
                        if (key == "ctx") {
                            l.ctx0 = ts.expect_number();
                            l.has_ctx = true;
                            continue;
                        }
                        if (key == "sp0") {
                            l.sp0 = ts.expect_number();
                            continue;
                        }
                        Word lo = ts.expect_number();
                        ts.expect_punct("..");
                        Word hi = ts.expect_number();
                        if (key == "h_t")
                            l.heap_t = {lo, hi};
                        else if (key == "s_t")
                            l.stack_t = {lo, hi};
                        else if (key == "h_u")
                            l.heap_u = {lo, hi};
                        else if (key == "s_u")
                            l.stack_u = {lo, hi};
                        else
                            throw ParseError(ln, "unknown layout field '" + key + "'");
                    }
                    l.shared_stack = saw_shared;
                    if (saw_shared)
                        l.stack_u = l.stack_t;
                    prog.layout = l;
                } else {
                    throw ParseError(ln, "unknown layout '" + kind + "'");
                }
                if (kind != "custom")
                    ts.expect_end();
                layout_set = true;
            } else if (dir == "imports") {
                size_t rest = text.find("imports") + 7;
                raw_import_lines.emplace_back(ln, text.substr(rest));
            } else if (dir == "app") {
                ts.expect_end();
                cur_priv = Privilege::Trusted;
            } else if (dir == "lib") {
                ts.expect_end();
                cur_priv = Privilege::Untrusted;
            } else if (dir == "func") {
                if (open_func)
                    throw ParseError(ln, "nested .func");
                FuncMeta f;
                f.name = ts.expect_ident();
                std::string key = ts.expect_ident();
                if (key != "arity")
                    throw ParseError(ln, "expected arity=N");
                ts.expect_punct("=");
                Word a = ts.expect_number();
                if (a > Word(64))
                    throw ParseError(ln, "arity too large");
                f.arity = static_cast<uint32_t>(a);
                if (!ts.at_end()) {
                    if (ts.expect_ident() != "exported")
                        throw ParseError(ln, "expected 'exported'");
                    f.exported = true;
                }
                ts.expect_end();
                f.entry = f.lo = Word(cmds.size());
                def_label(f.name, ln);
                open_func = prog.funcs.size();
                prog.funcs.push_back(std::move(f));
            } else if (dir == "endfunc") {
                ts.expect_end();
                if (!open_func)
                    throw ParseError(ln, ".endfunc without .func");
                prog.funcs[*open_func].hi = Word(cmds.size());
                if (prog.funcs[*open_func].hi == prog.funcs[*open_func].lo)
                    throw ParseError(ln, "empty function");
                open_func.reset();
            } else if (dir == "table") {
                RawTable t;
                t.line = ln;
                t.name = ts.expect_ident();
                ts.expect_punct("=");
                ts.expect_punct("[");
                if (!ts.try_punct("]")) {
                    for (;;) {
                        t.entries.push_back(ts.expect_ident());
                        if (ts.try_punct("]"))
                            break;
                        ts.expect_punct(",");
                    }
                }
                ts.expect_end();
                raw_tables.push_back(std::move(t));
            } else if (dir == "mem") {
                Word addr = ts.expect_number();
                ts.expect_punct("=");
                Word val = ts.expect_number();
                ts.expect_end();
                prog.init_mem.emplace_back(addr, val);
            } else {
                throw ParseError(ln, "unknown directive '." + dir + "'");
            }
            continue;
        }

        // Optional "label:" prefix.
        std::string rest = text;
        {
            size_t colon = text.find(':');
            if (colon != std::string::npos) {
                std::string head = strip(text.substr(0, colon));
                bool ident = !head.empty();
                for (char c : head)
                    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
                        ident = false;
                if (ident && !std::isdigit(static_cast<unsigned char>(head[0]))) {
                    def_label(head, ln);
                    rest = strip(text.substr(colon + 1));
                    if (rest.empty())
                        continue;
                }
            }
        }
        cmds.push_back({ln, rest, cur_priv});
    }
    if (open_func)
        throw ParseError(static_cast<int>(lines.size()), "unterminated .func");
    (void)layout_set;

    // Pass 2: parse commands with labels in scope.
    auto resolve = [&labels](const std::string& name, int line) -> Word {
        auto it = labels.find(name);
        if (it == labels.end())
            throw ParseError(line, "unknown label '" + name + "'");
        return it->second;
    };

    // Expression parsing with label resolution.
    struct ExprParser {
        TokenStream& ts;
        const std::map<std::string, Word>& labels;

        Expr factor() {
            if (ts.try_punct("(")) {
                Expr e = expr();
                ts.expect_punct(")");
                return e;
            }
            Token t = ts.take();
            if (t.kind == Token::Kind::Number)
                return Expr::literal(t.num);
            if (t.kind == Token::Kind::Ident) {
                if (auto r = reg_of(t.text))
                    return Expr::regref(*r);
                auto it = labels.find(t.text);
                if (it == labels.end())
                    throw ParseError(ts.line, "unknown label '" + t.text + "'");
                return Expr::literal(it->second);
            }
            throw ParseError(ts.line, "expected expression, got '" + t.text + "'");
        }
        Expr term() {
            Expr e = factor();
            while (ts.try_punct("*"))
                e = Expr::mul(std::move(e), factor());
            return e;
        }
        Expr expr() {
            Expr e = term();
            for (;;) {
                if (ts.try_punct("+"))
                    e = Expr::add(std::move(e), term());
                else if (ts.try_punct("-"))
                    e = Expr::sub(std::move(e), term());
                else
                    return e;
            }
        }
    };

    for (const RawCmd& rc : cmds) {
        TokenStream ts(rc.text, rc.line);
        ExprParser ep{ts, labels};
        std::string mn = ts.expect_ident();
        Command c;
        if (mn == "pop") {
            RegName r = parse_gpr(ts);
            ts.expect_punct(",");
            c = Command::pop(r, parse_priv(ts));
        } else if (mn == "push") {
            Privilege p = parse_priv(ts);
            ts.expect_punct(",");
            c = Command::push(p, ep.expr());
        } else if (mn == "jmp") {
            CheckKind k = parse_check(ts);
            ts.expect_punct("(");
            Expr e = ep.expr();
            ts.expect_punct(")");
            c = Command::jmp(std::move(k), std::move(e));
        } else if (mn == "load") {
            RegName r = parse_gpr(ts);
            ts.expect_punct(",");
            CheckKind k = parse_check(ts);
            ts.expect_punct("(");
            Expr e = ep.expr();
            ts.expect_punct(")");
            c = Command::load(r, std::move(k), std::move(e));
        } else if (mn == "store") {
            CheckKind k = parse_check(ts);
            ts.expect_punct("(");
            Expr a = ep.expr();
            ts.expect_punct(")");
            ts.expect_punct(",");
            Expr v = ep.expr();
            c = Command::store(std::move(k), std::move(a), std::move(v));
        } else if (mn == "gatecall") {
            Word n = ts.expect_number();
            if (n > Word(64))
                throw ParseError(rc.line, "gate call arity too large");
            ts.expect_punct(",");
            c = Command::gatecall(static_cast<uint32_t>(n), ep.expr());
        } else if (mn == "gateret") {
            c = Command::gateret();
        } else if (mn == "mov") {
            RegName r = parse_gpr(ts, /*allow_sp=*/true);
            ts.expect_punct(",");
            c = Command::mov(r, ep.expr());
        } else if (mn == "call") {
            CheckKind k = parse_check(ts);
            ts.expect_punct("(");
            Expr e = ep.expr();
            ts.expect_punct(")");
            c = Command::call(std::move(k), std::move(e));
        } else if (mn == "ret") {
            c = Command::ret(parse_check(ts));
        } else if (mn == "movlabel") {
            RegName r = parse_gpr(ts);
            ts.expect_punct(",");
            c = Command::movlabel(r, parse_priv(ts));
        } else if (mn == "storelabel") {
            Privilege p = parse_priv(ts);
            ts.expect_punct(",");
            c = Command::storelabel(p, ep.expr());
        } else {
            throw ParseError(rc.line, "unknown command '" + mn + "'");
        }
        ts.expect_end();
        prog.code.emplace_back(rc.priv, std::move(c));
    }

    // Imports.
    for (const auto& [ln, rest] : raw_import_lines) {
        TokenStream ts(rest, ln);
        for (;;) {
            std::string name = ts.expect_ident();
            Word a = resolve(name, ln);
            if (!prog.imports.insert(a).second)
                throw ParseError(ln, "duplicate import '" + name + "'");
            prog.import_names.push_back(name);
            if (ts.at_end())
                break;
            ts.expect_punct(",");
        }
    }

    // Tables reference declared functions.
    for (const RawTable& rt : raw_tables) {
        if (prog.tables.count(rt.name))
            throw ParseError(rt.line, "duplicate table '" + rt.name + "'");
        std::vector<Word> entries;
        for (const std::string& fn : rt.entries) {
            const FuncMeta* f = prog.func_by_name(fn);
            if (!f)
                throw ParseError(rt.line, "table entry '" + fn + "' is not a declared function");
            entries.push_back(f->entry);
        }
        prog.tables[rt.name] = std::move(entries);
        prog.table_names[rt.name] = rt.entries;
    }

    prog.labels = std::move(labels);
    if (auto it = prog.labels.find("main"); it != prog.labels.end())
        prog.entry_pc = it->second;
    else
        prog.entry_pc = 0;
    if (!prog.code.empty() && !prog.in_code(prog.entry_pc))
        throw ParseError(1, "entry address outside code");
    return prog;
}

std::string pretty_print(const Program& prog) {
    std::ostringstream out;

    // Layout.
    if (prog.layout == nacl_default_layout()) {
        out << ".layout nacl-default\n";
    } else if (prog.layout == zerocost_default_layout()) {
        out << ".layout zerocost-default\n";
    } else {
        const Layout& l = prog.layout;
        out << ".layout custom h_t=" << l.heap_t.lo << ".." << l.heap_t.hi << " s_t="
            << l.stack_t.lo << ".." << l.stack_t.hi << " h_u=" << l.heap_u.lo << ".."
            << l.heap_u.hi << " s_u=" << l.stack_u.lo << ".." << l.stack_u.hi;
        if (l.shared_stack)
            out << " shared";
        if (l.has_ctx)
            out << " ctxstar=" << l.ctx_star << " ctx=" << l.ctx0;
        out << " sp0=" << l.sp0 << "\n";
    }

    // Labels by address (function names are re-created by .func).
    std::map<Word, std::vector<std::string>> labels_at;
    for (const auto& [name, addr] : prog.labels) {
        const FuncMeta* f = prog.func_by_entry(addr);
        if (f && f->name == name)
            continue;
        labels_at[addr].push_back(name);
    }
    // Entry must round-trip: ensure a `main` label unless entry is the
    // default address 0.
    bool have_main = prog.labels.count("main") > 0;
    if (!have_main && prog.entry_pc != Word(0))
        labels_at[prog.entry_pc].push_back("main");

    // Imports need label names.
    std::map<Word, std::string> name_of;
    for (const auto& [name, addr] : prog.labels)
        if (!name_of.count(addr))
            name_of[addr] = name;
    std::vector<std::string> import_names;
    for (const Word& a : prog.imports) {
        auto it = name_of.find(a);
        if (it != name_of.end()) {
            import_names.push_back(it->second);
        } else {
            std::string n = "__imp" + a.str();
            labels_at[a].push_back(n);
            name_of[a] = n;
            import_names.push_back(n);
        }
    }
    if (!import_names.empty()) {
        out << ".imports ";
        for (size_t i = 0; i < import_names.size(); ++i)
            out << (i ? ", " : "") << import_names[i];
        out << "\n";
    }

    for (const auto& [addr, val] : prog.init_mem)
        out << ".mem " << addr << " = " << val << "\n";

    std::optional<Privilege> cur;
    for (size_t i = 0; i <= prog.code.size(); ++i) {
        Word addr = i;
        for (const auto& f : prog.funcs)
            if (f.hi == addr)
                out << ".endfunc\n";
        if (i == prog.code.size())
            break;
        Privilege p = prog.code[i].first;
        if (!cur || *cur != p) {
            out << (p == Privilege::Trusted ? ".app\n" : ".lib\n");
            cur = p;
        }
        for (const auto& f : prog.funcs)
            if (f.lo == addr) {
                out << ".func " << f.name << " arity=" << f.arity
                    << (f.exported ? " exported" : "") << "\n";
            }
        if (auto it = labels_at.find(addr); it != labels_at.end())
            for (const auto& n : it->second)
                out << n << ":\n";
        out << "  " << to_string(prog.code[i].second) << "\n";
    }

    for (const auto& [name, entries] : prog.tables) {
        out << ".table " << name << " = [";
        for (size_t i = 0; i < entries.size(); ++i) {
            const FuncMeta* f = prog.func_by_entry(entries[i]);
            out << (i ? ", " : "") << (f ? f->name : "__f" + entries[i].str());
        }
        out << "]\n";
    }
    return out.str();
}

} // namespace gal
