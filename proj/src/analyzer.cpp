#include "commitshield/analyzer.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <map>
#include <regex>
#include <sstream>
#include <thread>

#include "commitshield/repo.hpp"
#include "json_util.hpp"

namespace commitshield {

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

using Tokens = std::vector<Token>;
using View = std::vector<std::size_t>;

bool is_name(const Token& t)
{
    return t.kind == TokenKind::identifier && !is_cxx_keyword(t.text);
}

bool is_type_word(const Token& t)
{
    return t.kind == TokenKind::identifier && is_type_keyword(t.text);
}

bool is_class_key(const Token& t)
{
    return t.is_ident("class") || t.is_ident("struct") || t.is_ident("union");
}

std::string_view closer_of(std::string_view open)
{
    if (open == "(")
        return ")";
    if (open == "[")
        return "]";
    return "}";
}

std::string_view opener_of(std::string_view close)
{
    if (close == ")")
        return "(";
    if (close == "]")
        return "[";
    return "{";
}

// Matching bracket for the one at `open`, searching up to `limit`.
std::size_t match_forward(const Tokens& t, std::size_t open, std::size_t limit)
{
    std::string_view o = t[open].text;
    std::string_view c = closer_of(o);
    int depth = 0;
    for (std::size_t i = open; i < limit; ++i) {
        if (t[i].kind != TokenKind::punct)
            continue;
        if (t[i].text == o)
            ++depth;
        else if (t[i].text == c && --depth == 0)
            return i;
    }
    return npos;
}

std::size_t match_backward(const Tokens& t, std::size_t close)
{
    std::string_view c = t[close].text;
    std::string_view o = opener_of(c);
    int depth = 0;
    for (std::size_t i = close + 1; i-- > 0;) {
        if (t[i].kind != TokenKind::punct)
            continue;
        if (t[i].text == c)
            ++depth;
        else if (t[i].text == o && --depth == 0)
            return i;
    }
    return npos;
}

// Index just past the '>' closing the '<' at `open`.
std::size_t skip_angles(const Tokens& t, std::size_t open, std::size_t limit)
{
    int depth = 0;
    for (std::size_t i = open; i < limit; ++i) {
        const Token& tok = t[i];
        if (tok.is("<"))
            ++depth;
        else if (tok.is(">"))
            --depth;
        else if (tok.is(">>"))
            depth -= 2;
        else if (tok.is("(") || tok.is("[")) {
            std::size_t j = match_forward(t, i, limit);
            if (j == npos)
                return npos;
            i = j;
        } else if (tok.is(";") || tok.is("{") || tok.is("}"))
            return npos;
        if (depth <= 0)
            return i + 1;
    }
    return npos;
}

// Token indices of [b, e) minus directives, template headers and attributes.
View header_view(const Tokens& t, std::size_t b, std::size_t e)
{
    static const std::set<std::string_view> attribute_words { "__attribute__", "__attribute", "__declspec", "alignas",
        "_Alignas", "__asm__", "__asm", "asm" };
    View v;
    for (std::size_t k = b; k < e;) {
        const Token& tok = t[k];
        if (tok.kind == TokenKind::preprocessor) {
            ++k;
            continue;
        }
        if (tok.is_ident("template") && k + 1 < e && t[k + 1].is("<")) {
            std::size_t j = skip_angles(t, k + 1, e);
            if (j != npos) {
                k = j;
                continue;
            }
        }
        if (tok.is("[") && k + 1 < e && t[k + 1].is("[")) {
            std::size_t j = match_forward(t, k, e);
            if (j != npos) {
                k = j + 1;
                continue;
            }
        }
        if (tok.kind == TokenKind::identifier && attribute_words.count(tok.text) && k + 1 < e && t[k + 1].is("(")) {
            std::size_t j = match_forward(t, k + 1, e);
            if (j != npos) {
                k = j + 1;
                continue;
            }
        }
        v.push_back(k);
        ++k;
    }
    return v;
}

// Matching bracket within a view, by position.
std::size_t view_match(const Tokens& t, const View& v, std::size_t pos)
{
    std::string_view o = t[v[pos]].text;
    std::string_view c = closer_of(o);
    int depth = 0;
    for (std::size_t i = pos; i < v.size(); ++i) {
        const Token& tok = t[v[i]];
        if (tok.kind != TokenKind::punct)
            continue;
        if (tok.text == o)
            ++depth;
        else if (tok.text == c && --depth == 0)
            return i;
    }
    return npos;
}

std::size_t view_match_angles_back(const Tokens& t, const View& v, std::size_t close_pos)
{
    int depth = 0;
    for (std::size_t i = close_pos + 1; i-- > 0;) {
        const Token& tok = t[v[i]];
        if (tok.is(">"))
            ++depth;
        else if (tok.is(">>"))
            depth += 2;
        else if (tok.is("<"))
            --depth;
        if (depth <= 0)
            return i;
    }
    return npos;
}

struct HeaderMatch {
    bool ok = false;
    std::string name;
    // Positions within the view.
    std::size_t name_first = 0;
    std::size_t name_last = 0;
    std::size_t open = 0;
    std::size_t close = 0;
    bool qualified = false;
    bool destructor = false;
    bool operator_fn = false;
    bool init_list = false;
};

HeaderMatch match_function_header(const Tokens& t, const View& v)
{
    HeaderMatch m;
    std::size_t name_pos = npos;
    std::size_t open = npos;
    int depth = 0;
    for (std::size_t pos = 0; pos < v.size(); ++pos) {
        const Token& tok = t[v[pos]];
        if (tok.is("<") && pos > 0 && is_name(t[v[pos - 1]]) && depth == 0) {
            // Template arguments of a qualifier or return type.
            std::size_t j = pos;
            int angle = 0;
            for (; j < v.size(); ++j) {
                const Token& a = t[v[j]];
                if (a.is("<"))
                    ++angle;
                else if (a.is(">"))
                    --angle;
                else if (a.is(">>"))
                    angle -= 2;
                else if (a.is("(") || a.is("[")) {
                    std::size_t close = view_match(t, v, j);
                    if (close == npos)
                        return m;
                    j = close;
                } else if (a.is(";") || a.is("{"))
                    return m;
                if (angle <= 0)
                    break;
            }
            if (j >= v.size())
                return m;
            pos = j;
            continue;
        }
        if (tok.is("=") && depth == 0)
            return m;
        if (tok.is_ident("operator")) {
            name_pos = pos;
            std::size_t q = pos + 1;
            if (q + 2 < v.size() && t[v[q]].is("(") && t[v[q + 1]].is(")")) {
                m.name = "operator()";
                open = q + 2;
            } else {
                std::string op;
                while (q < v.size() && !t[v[q]].is("(")) {
                    const Token& part = t[v[q]];
                    if (part.kind == TokenKind::identifier)
                        op += " ";
                    op += part.text;
                    ++q;
                }
                m.name = "operator" + op;
                open = q;
            }
            m.operator_fn = true;
            break;
        }
        if (tok.is("(") && depth == 0 && pos + 3 < v.size() && t[v[pos + 1]].is("*")) {
            // Declarator returning a function pointer: T (*name(params))(params)
            std::size_t q = pos + 2;
            while (q < v.size() && (t[v[q]].is_ident("const") || t[v[q]].is_ident("volatile")))
                ++q;
            if (q + 1 < v.size() && is_name(t[v[q]]) && t[v[q + 1]].is("(")) {
                std::size_t inner = view_match(t, v, q + 1);
                std::size_t outer = view_match(t, v, pos);
                if (inner != npos && outer == inner + 1 && outer + 1 < v.size() && t[v[outer + 1]].is("(")) {
                    name_pos = q;
                    open = q + 1;
                    m.name = t[v[q]].text;
                    break;
                }
            }
        }
        if (tok.is("(")) {
            std::size_t p = pos;
            if (p == 0)
                return m;
            --p;
            if (t[v[p]].is(">") || t[v[p]].is(">>")) {
                std::size_t lt = view_match_angles_back(t, v, p);
                if (lt == npos || lt == 0)
                    return m;
                p = lt - 1;
            }
            if (!is_name(t[v[p]]))
                return m;
            name_pos = p;
            open = pos;
            m.name = t[v[p]].text;
            break;
        }
        if (tok.is("[")) {
            std::size_t close = view_match(t, v, pos);
            if (close == npos)
                return m;
            pos = close;
        }
    }
    if (name_pos == npos || open == npos || open >= v.size() || !t[v[open]].is("("))
        return m;

    std::size_t first = name_pos;
    if (first > 0 && t[v[first - 1]].is("~")) {
        m.destructor = true;
        m.name = "~" + m.name;
        --first;
    }
    while (first >= 1 && t[v[first - 1]].is("::")) {
        m.qualified = true;
        if (first >= 2 && is_name(t[v[first - 2]])) {
            m.name = t[v[first - 2]].text + "::" + m.name;
            first -= 2;
        } else if (first >= 2 && (t[v[first - 2]].is(">") || t[v[first - 2]].is(">>"))) {
            std::size_t lt = view_match_angles_back(t, v, first - 2);
            if (lt == npos || lt == 0 || !is_name(t[v[lt - 1]]))
                break;
            std::string args;
            for (std::size_t i = lt; i <= first - 2; ++i)
                args += t[v[i]].text;
            m.name = t[v[lt - 1]].text + args + "::" + m.name;
            first = lt - 1;
        } else {
            --first;
            break;
        }
    }

    std::size_t close = view_match(t, v, open);
    if (close == npos)
        return m;
    for (std::size_t pos = close + 1; pos < v.size(); ++pos) {
        const Token& tok = t[v[pos]];
        if (tok.is(":")) {
            m.init_list = true;
            break;
        }
        if (tok.is("=") || tok.is(",") || tok.is(";"))
            return m;
        if (tok.is("(") || tok.is("[")) {
            std::size_t j = view_match(t, v, pos);
            if (j == npos)
                return m;
            pos = j;
        }
    }
    m.ok = true;
    m.name_first = first;
    m.name_last = name_pos;
    m.open = open;
    m.close = close;
    return m;
}

bool has_return_type(const HeaderMatch& m)
{
    return m.name_first > 0;
}

// Identifiers declared by a declaration statement (positions in `v`).
std::vector<std::size_t> declared_names(const Tokens& t, const View& v)
{
    if (v.empty())
        return {};
    static const std::set<std::string_view> skip_first { "typedef", "using", "friend", "static_assert",
        "_Static_assert", "namespace", "return", "goto", "asm", "__asm__", "template", "public", "private",
        "protected", "case", "default", "break", "continue" };
    const Token& head = t[v[0]];
    if (head.kind != TokenKind::identifier || skip_first.count(head.text))
        return {};

    // Prototype or macro invocation.
    int depth = 0;
    for (std::size_t pos = 0; pos < v.size(); ++pos) {
        const Token& tok = t[v[pos]];
        if (tok.is("=") && depth == 0)
            break;
        if (tok.is("[") || tok.is("{")) {
            std::size_t j = view_match(t, v, pos);
            if (j == npos)
                return {};
            pos = j;
            continue;
        }
        if (tok.is("(")) {
            if (pos > 0 && is_name(t[v[pos - 1]])) {
                std::size_t close = view_match(t, v, pos);
                if (close != npos && close + 1 < v.size() && t[v[close + 1]].kind == TokenKind::identifier
                    && t[v[close + 1]].line > t[v[close]].line) {
                    return [&] {
                        View rest(v.begin() + static_cast<long>(close + 1), v.end());
                        auto inner = declared_names(t, rest);
                        for (auto& p : inner)
                            p += close + 1;
                        return inner;
                    }();
                }
                return {};
            }
            std::size_t j = view_match(t, v, pos);
            if (j == npos)
                return {};
            pos = j;
        }
    }

    // Split into declarators.
    std::vector<std::pair<std::size_t, std::size_t>> segments;
    std::size_t seg_begin = 0;
    int angle = 0;
    bool after_eq = false;
    for (std::size_t pos = 0; pos < v.size(); ++pos) {
        const Token& tok = t[v[pos]];
        if (tok.is("(") || tok.is("[") || tok.is("{")) {
            std::size_t j = view_match(t, v, pos);
            if (j == npos)
                return {};
            pos = j;
            continue;
        }
        if (tok.is("="))
            after_eq = true;
        if (!after_eq) {
            if (tok.is("<") && pos > 0 && is_name(t[v[pos - 1]]))
                ++angle;
            else if (tok.is(">") && angle > 0)
                --angle;
            else if (tok.is(">>") && angle > 0)
                angle = std::max(0, angle - 2);
        }
        if (tok.is(",") && angle == 0) {
            segments.emplace_back(seg_begin, pos);
            seg_begin = pos + 1;
            after_eq = false;
        }
    }
    segments.emplace_back(seg_begin, v.size());

    std::vector<std::size_t> names;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        auto [b, e] = segments[s];
        std::size_t limit = e;
        std::size_t start = b;
        for (std::size_t pos = b; pos < e; ++pos) {
            const Token& tok = t[v[pos]];
            if (tok.is("=")) {
                limit = pos;
                break;
            }
            if (tok.is("(") || tok.is("[")) {
                std::size_t j = view_match(t, v, pos);
                pos = j == npos ? e : j;
                continue;
            }
            if (tok.is("{")) {
                std::size_t j = view_match(t, v, pos);
                if (j == npos)
                    break;
                // struct { ... } name;  the declarators follow the body.
                start = j + 1;
                pos = j;
            }
        }
        std::size_t found = npos;
        int angles = 0;
        for (std::size_t pos = start; pos < limit; ++pos) {
            const Token& tok = t[v[pos]];
            if (tok.is("<") && pos > start && is_name(t[v[pos - 1]])) {
                ++angles;
                continue;
            }
            if (angles > 0) {
                if (tok.is(">"))
                    --angles;
                else if (tok.is(">>"))
                    angles = std::max(0, angles - 2);
                continue;
            }
            if (tok.is("[") || tok.is(":") || tok.is("{") || tok.is("("))
                break;
            if (is_name(tok) && tok.text != "final" && tok.text != "override"
                && !(pos + 1 < limit && t[v[pos + 1]].is("::")))
                found = pos;
        }
        if (found == npos)
            continue;
        if (s == 0) {
            bool typed = false;
            for (std::size_t pos = start; pos < found; ++pos) {
                const Token& tok = t[v[pos]];
                if (is_name(tok) || is_type_word(tok) || tok.is(">") || tok.is(">>"))
                    typed = true;
            }
            if (!typed)
                continue;
            const Token& before = t[v[found - 1]];
            if ((is_class_key(before) || before.is_ident("enum")) && found + 1 == limit)
                continue;
        }
        names.push_back(found);
    }
    return names;
}

std::string join_lines(const std::vector<std::string>& lines, int start, int end)
{
    std::string out;
    for (int l = start; l <= end && l <= static_cast<int>(lines.size()); ++l) {
        out += lines[static_cast<std::size_t>(l - 1)];
        out += '\n';
    }
    return out;
}

std::vector<std::string> to_lines(std::string_view text)
{
    std::vector<std::string> out;
    for (auto line : split_lines(text)) {
        std::string s(line);
        if (!s.empty() && s.back() == '\r')
            s.pop_back();
        out.push_back(std::move(s));
    }
    return out;
}

class Walker {
public:
    Walker(SourceModel& model)
        : m(model)
        , t(model.tokens)
    {
    }

    void run()
    {
        const std::size_t n = t.size();
        m.context.assign(n, TokenContext::file_scope);
        m_scopes.push_back({ ScopeKind::file, {}, 0 });
        std::size_t stmt = 0;
        std::size_t kr_anchor = npos;
        std::vector<std::pair<std::size_t, std::size_t>> kr_held;
        auto release_kr = [&] {
            for (const auto& [b, e] : kr_held)
                record_declarations(b, e);
            kr_held.clear();
            kr_anchor = npos;
        };
        std::size_t i = 0;
        while (i < n) {
            const Token& tok = t[i];
            TokenContext here = m_scopes.back().kind == ScopeKind::cls ? TokenContext::class_body : TokenContext::file_scope;
            m.context[i] = here;
            if (tok.kind == TokenKind::preprocessor) {
                m.context[i] = TokenContext::preprocessor;
                release_kr();
                stmt = i + 1;
                ++i;
                continue;
            }
            if (tok.is(";")) {
                if (kr_anchor == npos && here == TokenContext::file_scope && kr_header(stmt, i))
                    kr_anchor = stmt;
                if (kr_anchor != npos)
                    kr_held.emplace_back(stmt, i);
                else
                    record_declarations(stmt, i);
                stmt = i + 1;
                ++i;
                continue;
            }
            if (tok.is("}")) {
                release_kr();
                close_scope(i);
                stmt = i + 1;
                ++i;
                continue;
            }
            if (tok.is(":") && i > 0
                && (t[i - 1].is_ident("public") || t[i - 1].is_ident("private") || t[i - 1].is_ident("protected")
                    || t[i - 1].is_ident("slots") || t[i - 1].is_ident("signals"))) {
                stmt = i + 1;
                ++i;
                continue;
            }
            if (tok.is("(") || tok.is("[")) {
                std::size_t j = match_forward(t, i, n);
                if (j == npos) {
                    warn("unbalanced " + tok.text + " on line " + std::to_string(tok.line));
                    ++i;
                    continue;
                }
                mark(i, j, here);
                i = j + 1;
                continue;
            }
            if (tok.is("{")) {
                if (kr_anchor != npos && stmt == i && open_kr(stmt, i, kr_anchor)) {
                    kr_held.clear();
                    kr_anchor = npos;
                    i = stmt;
                } else {
                    release_kr();
                    i = open_brace(stmt, i, stmt);
                }
                continue;
            }
            ++i;
        }
        release_kr();
        if (m_scopes.size() > 1) {
            warn("unbalanced braces at end of file");
            int last = t.empty() ? 1 : t.back().end_line;
            while (m_scopes.size() > 1) {
                if (m_scopes.back().kind == ScopeKind::cls)
                    m.classes.push_back({ m_scopes.back().name, m_scopes.back().start_line, last });
                m_scopes.pop_back();
            }
        }
        std::sort(m.functions.begin(), m.functions.end(),
            [](const FunctionInfo& a, const FunctionInfo& b) { return a.span.start_line < b.span.start_line; });
        std::sort(m.classes.begin(), m.classes.end(),
            [](const ClassSpan& a, const ClassSpan& b) { return a.start_line < b.start_line; });
    }

private:
    enum class ScopeKind { file, ns, cls, ext };
    struct Scope {
        ScopeKind kind;
        std::string name;
        int start_line = 0;
    };

    void warn(const std::string& message)
    {
        m.degraded = true;
        m.warnings.push_back(message);
    }

    void mark(std::size_t b, std::size_t e, TokenContext ctx)
    {
        for (std::size_t k = b; k <= e && k < t.size(); ++k) {
            if (t[k].kind != TokenKind::preprocessor)
                m.context[k] = ctx;
            else
                m.context[k] = TokenContext::preprocessor;
        }
    }

    std::string class_qualifier() const
    {
        std::string q;
        for (const auto& s : m_scopes) {
            if (s.kind == ScopeKind::cls && !s.name.empty())
                q += s.name + "::";
        }
        return q;
    }

    void close_scope(std::size_t i)
    {
        if (m_scopes.size() <= 1) {
            warn("unmatched } on line " + std::to_string(t[i].line));
            return;
        }
        if (m_scopes.back().kind == ScopeKind::cls)
            m.classes.push_back({ class_qualifier().empty() ? m_scopes.back().name
                                                            : class_qualifier().substr(0, class_qualifier().size() - 2),
                m_scopes.back().start_line, t[i].line });
        m_scopes.pop_back();
    }

    std::size_t skip_group(std::size_t open, TokenContext ctx)
    {
        std::size_t j = match_forward(t, open, t.size());
        if (j == npos) {
            warn("unbalanced { on line " + std::to_string(t[open].line));
            mark(open, t.size() - 1, ctx);
            return t.size();
        }
        mark(open, j, ctx);
        return j + 1;
    }

    // Old-style header: name(a, b) followed by a declaration of one of the
    // parameters, cut at the ';' with index `semi`.
    bool kr_header(std::size_t b, std::size_t semi) const
    {
        View v = header_view(t, b, semi);
        std::size_t open = npos;
        for (std::size_t pos = 1; pos < v.size(); ++pos) {
            if (t[v[pos]].is("(")) {
                if (is_name(t[v[pos - 1]]))
                    open = pos;
                break;
            }
        }
        if (open == npos)
            return false;
        std::set<std::string> params;
        std::size_t pos = open + 1;
        for (; pos < v.size() && !t[v[pos]].is(")"); ++pos) {
            const Token& tok = t[v[pos]];
            bool want_name = (pos - open) % 2 == 1;
            if (want_name ? !is_name(tok) : !tok.is(","))
                return false;
            if (want_name)
                params.insert(tok.text);
        }
        if (pos >= v.size() || params.empty() || pos + 2 >= v.size())
            return false;
        for (std::size_t k = pos + 1; k < v.size(); ++k) {
            if (t[v[k]].kind == TokenKind::identifier && params.count(t[v[k]].text))
                return true;
        }
        return false;
    }

    bool open_kr(std::size_t& stmt, std::size_t i, std::size_t anchor)
    {
        View v = header_view(t, anchor, i);
        std::size_t semi = 0;
        while (semi < v.size() && !t[v[semi]].is(";"))
            ++semi;
        View head(v.begin(), v.begin() + static_cast<long>(semi));
        HeaderMatch hm = match_function_header(t, head);
        if (!hm.ok)
            return false;
        m.context[i] = TokenContext::file_scope;
        std::size_t header_first = anchor;
        while (header_first < i && t[header_first].kind == TokenKind::preprocessor)
            ++header_first;
        record_function(hm, head, header_first, i, stmt);
        return true;
    }

    // Handles '{' at index i; returns the index to continue from. `stmt`
    // is updated when the brace opens a new declaration scope.
    std::size_t open_brace(std::size_t& stmt, std::size_t i, std::size_t stmt_begin)
    {
        View v = header_view(t, stmt_begin, i);
        TokenContext here = m_scopes.back().kind == ScopeKind::cls ? TokenContext::class_body : TokenContext::file_scope;
        m.context[i] = here;
        if (v.empty())
            return skip_group(i, TokenContext::initializer);

        const Token& first = t[v[0]];
        if (first.is_ident("namespace") || (first.is_ident("inline") && v.size() > 1 && t[v[1]].is_ident("namespace"))) {
            m_scopes.push_back({ ScopeKind::ns, {}, first.line });
            stmt = i + 1;
            return i + 1;
        }
        if (first.is_ident("extern") && v.size() == 2 && t[v[1]].kind == TokenKind::string) {
            m_scopes.push_back({ ScopeKind::ext, {}, first.line });
            stmt = i + 1;
            return i + 1;
        }

        // Template headers belong to the definition; header_view drops them.
        std::size_t header_first = stmt_begin;
        while (header_first < i && t[header_first].kind == TokenKind::preprocessor)
            ++header_first;
        for (;;) {
            HeaderMatch hm = match_function_header(t, v);
            if (!hm.ok)
                break;
            if (!has_return_type(hm) && !hm.qualified && hm.close + 1 < v.size()
                && t[v[hm.close + 1]].kind == TokenKind::identifier
                && t[v[hm.close + 1]].line > t[v[hm.close]].line) {
                // A macro invocation without ';' precedes the definition.
                v.erase(v.begin(), v.begin() + static_cast<long>(hm.close + 1));
                header_first = v[0];
                continue;
            }
            if (hm.init_list && i > 0 && (is_name(t[i - 1]) || t[i - 1].is(">")))
                return skip_group(i, here == TokenContext::class_body ? TokenContext::class_body : here);
            return record_function(hm, v, header_first, i, stmt);
        }

        bool has_enum = false;
        bool has_eq = false;
        std::size_t key = npos;
        for (std::size_t pos = 0; pos < v.size(); ++pos) {
            const Token& tok = t[v[pos]];
            if (tok.is_ident("enum"))
                has_enum = true;
            if (tok.is("="))
                has_eq = true;
            if (key == npos && is_class_key(tok))
                key = pos;
            if (tok.is("(") || tok.is("[")) {
                std::size_t j = view_match(t, v, pos);
                if (j == npos)
                    break;
                pos = j;
            }
        }
        if (!has_enum && !has_eq && key != npos) {
            std::string name;
            int angles = 0;
            for (std::size_t pos = key + 1; pos < v.size(); ++pos) {
                const Token& tok = t[v[pos]];
                if (tok.is("<")) {
                    ++angles;
                    continue;
                }
                if (angles > 0) {
                    if (tok.is(">"))
                        --angles;
                    else if (tok.is(">>"))
                        angles = std::max(0, angles - 2);
                    continue;
                }
                if (tok.is(":"))
                    break;
                if (is_name(tok) && tok.text != "final")
                    name = tok.text;
            }
            m_scopes.push_back({ ScopeKind::cls, name, t[stmt_begin].line });
            stmt = i + 1;
            return i + 1;
        }
        return skip_group(i, TokenContext::initializer);
    }

    std::size_t record_function(const HeaderMatch& hm, const View& v, std::size_t header_first, std::size_t open,
        std::size_t& stmt)
    {
        std::size_t close = match_forward(t, open, t.size());
        bool unbalanced = close == npos;
        if (unbalanced) {
            warn("function body opened on line " + std::to_string(t[open].line) + " is not closed");
            close = t.size() - 1;
        }

        FunctionInfo f;
        f.name_token = v[hm.name_last];
        f.body_open = open;
        f.body_close = close;
        f.span.start_line = t[header_first].line;
        f.span.end_line = t[close].line;
        f.span.file = m.file;

        std::string enclosing = m_scopes.back().kind == ScopeKind::cls ? m_scopes.back().name : std::string();
        bool ctor = !enclosing.empty() && (hm.name == enclosing || hm.name == "~" + enclosing);
        if (!has_return_type(hm) && !hm.qualified && !hm.destructor && !hm.operator_fn && !ctor)
            f.span.name = "<unnamed@" + std::to_string(f.span.start_line) + ">";
        else if (hm.qualified)
            f.span.name = hm.name;
        else
            f.span.name = class_qualifier() + hm.name;
        f.span.body_text = join_lines(m.lines, f.span.start_line, f.span.end_line);

        collect_params(f, v, hm);
        collect_locals(f);
        mark(open, close, TokenContext::function_body);
        m.functions.push_back(std::move(f));
        stmt = close + 1;
        return close + 1;
    }

    void collect_params(FunctionInfo& f, const View& v, const HeaderMatch& hm)
    {
        std::size_t seg = hm.open + 1;
        int depth = 0;
        for (std::size_t pos = hm.open + 1; pos <= hm.close; ++pos) {
            const Token& tok = t[v[pos]];
            if (tok.is("(") || tok.is("[") || tok.is("{") || tok.is("<"))
                ++depth;
            else if ((tok.is(")") || tok.is("]") || tok.is("}") || tok.is(">")) && pos != hm.close)
                --depth;
            if ((tok.is(",") && depth == 0) || pos == hm.close) {
                std::size_t found = npos;
                for (std::size_t q = seg; q < pos; ++q) {
                    const Token& p = t[v[q]];
                    if (p.is("=") || p.is("["))
                        break;
                    if (is_name(p))
                        found = q;
                }
                if (found != npos && found > seg)
                    f.params.insert(t[v[found]].text);
                seg = pos + 1;
            }
        }
    }

    void collect_locals(FunctionInfo& f)
    {
        for (std::size_t k = f.body_open + 1; k < f.body_close; ++k) {
            if (!is_name(t[k]) || k + 1 >= f.body_close)
                continue;
            const Token& next = t[k + 1];
            const Token& prev = t[k - 1];
            bool decl = false;
            if (is_name(prev) || is_type_word(prev)) {
                decl = next.is("=") || next.is(";") || next.is(",") || next.is("[") || next.is("{") || next.is(":")
                    || next.is(")");
                if (k >= 2 && (t[k - 2].is(".") || t[k - 2].is("->")))
                    decl = false;
            } else if ((prev.is("*") || prev.is("&") || prev.is("&&")) && k >= 2) {
                const Token& pp = t[k - 2];
                decl = (is_name(pp) || is_type_word(pp) || pp.is("*") || pp.is(">"))
                    && (next.is("=") || next.is(";") || next.is(",") || next.is("["));
                if (decl && k >= 3 && (t[k - 3].is(".") || t[k - 3].is("->") || t[k - 3].is("=")))
                    decl = false;
            } else if (prev.is(">")) {
                decl = next.is("=") || next.is(";") || next.is("{");
            }
            if (!decl)
                continue;
            f.locals.insert(t[k].text);
            // Further declarators of the same statement.
            int depth = 0;
            for (std::size_t q = k + 1; q < f.body_close; ++q) {
                const Token& tok = t[q];
                if (tok.is("(") || tok.is("[") || tok.is("{"))
                    ++depth;
                else if (tok.is(")") || tok.is("]") || tok.is("}")) {
                    if (--depth < 0)
                        break;
                } else if (tok.is(";") && depth == 0)
                    break;
                else if (tok.is(",") && depth == 0) {
                    std::size_t r = q + 1;
                    while (r < f.body_close && (t[r].is("*") || t[r].is("&")))
                        ++r;
                    if (r < f.body_close && is_name(t[r]))
                        f.locals.insert(t[r].text);
                }
            }
        }
    }

    void record_declarations(std::size_t b, std::size_t e)
    {
        if (b >= e)
            return;
        View v = header_view(t, b, e);
        bool in_class = m_scopes.back().kind == ScopeKind::cls;
        for (std::size_t pos : declared_names(t, v)) {
            const Token& tok = t[v[pos]];
            (in_class ? m.fields : m.globals).push_back({ tok.text, tok.line });
        }
    }

    SourceModel& m;
    const Tokens& t;
    std::vector<Scope> m_scopes;
};

void require_c_family(Language language)
{
    if (!is_c_family(language))
        throw Error("syntax analysis supports only C and C++ sources");
}

template <typename Pred>
const FunctionInfo* innermost_function(const std::vector<FunctionInfo>& functions, Pred contains)
{
    const FunctionInfo* best = nullptr;
    for (const auto& f : functions) {
        if (contains(f.span) && (!best || f.span.start_line >= best->span.start_line))
            best = &f;
    }
    return best;
}

template <typename Pred>
const ClassSpan* innermost_class(const std::vector<ClassSpan>& classes, Pred contains)
{
    const ClassSpan* best = nullptr;
    for (const auto& c : classes) {
        if (contains(c) && (!best || c.start_line >= best->start_line))
            best = &c;
    }
    return best;
}

std::optional<int> lookup(const std::vector<Declaration>& decls, std::string_view name)
{
    for (const auto& d : decls) {
        if (d.name == name)
            return d.line;
    }
    return std::nullopt;
}

} // namespace

const FunctionInfo* SourceModel::function_at(int line) const
{
    return innermost_function(functions, [&](const FunctionSpan& s) { return s.contains(line); });
}

const FunctionInfo* SourceModel::function_for_insertion(int anchor) const
{
    return innermost_function(
        functions, [&](const FunctionSpan& s) { return s.start_line <= anchor && anchor < s.end_line; });
}

const ClassSpan* SourceModel::class_at(int line) const
{
    return innermost_class(classes, [&](const ClassSpan& c) { return c.start_line <= line && line <= c.end_line; });
}

const ClassSpan* SourceModel::class_for_insertion(int anchor) const
{
    return innermost_class(classes, [&](const ClassSpan& c) { return c.start_line <= anchor && anchor < c.end_line; });
}

std::optional<int> SourceModel::global_line(std::string_view name) const
{
    return lookup(globals, name);
}

std::optional<int> SourceModel::field_line(std::string_view name) const
{
    return lookup(fields, name);
}

SourceModel parse_source(std::string_view text, Language language, std::string file)
{
    require_c_family(language);
    SourceModel model;
    model.language = language;
    model.file = std::move(file);
    model.lines = to_lines(text);
    LexResult lex = lex_cxx(text, language);
    model.tokens = std::move(lex.tokens);
    model.degraded = lex.degraded;
    model.warnings = std::move(lex.warnings);
    Walker(model).run();
    return model;
}

PlacementResult place_lines(std::string_view source, Language language, const std::vector<int>& lines,
    const std::string& file)
{
    SourceModel model = parse_source(source, language, file);
    int line_count = static_cast<int>(model.lines.size());
    PlacementResult result;
    result.degraded = model.degraded;
    result.warnings = model.warnings;
    for (int line : lines) {
        if (line < 1 || line > line_count)
            throw Error("line " + std::to_string(line) + " is outside the file (" + std::to_string(line_count)
                + " lines)");
        LinePlacement p;
        p.line = line;
        if (const FunctionInfo* f = model.function_at(line)) {
            p.placement = Placement::in_function;
            p.function = f->span;
        }
        result.placements.push_back(std::move(p));
    }
    return result;
}

std::string capture_function_name(std::string_view header, Language language, int line, std::string_view enclosing_class)
{
    require_c_family(language);
    std::string placeholder = "<unnamed@" + std::to_string(line) + ">";
    LexResult lex = lex_cxx(header, language);
    const Tokens& t = lex.tokens;
    View v = header_view(t, 0, t.size());
    while (!v.empty() && (t[v.back()].is("{") || t[v.back()].is(";")))
        v.pop_back();
    HeaderMatch hm = match_function_header(t, v);
    if (!hm.ok)
        throw NameNotFound("no function declarator in \"" + std::string(header) + "\"", placeholder);
    bool ctor = !enclosing_class.empty() && (hm.name == enclosing_class || hm.name == "~" + std::string(enclosing_class));
    if (!has_return_type(hm) && !hm.qualified && !hm.destructor && !hm.operator_fn && !ctor)
        throw NameNotFound("\"" + std::string(header) + "\" looks like a macro invocation", placeholder);
    if (!hm.qualified && !enclosing_class.empty())
        return std::string(enclosing_class) + "::" + hm.name;
    return hm.name;
}

std::string function_name_or_placeholder(std::string_view header, Language language, int line,
    std::string_view enclosing_class)
{
    try {
        return capture_function_name(header, language, line, enclosing_class);
    } catch (const NameNotFound& e) {
        return e.placeholder();
    }
}

namespace {

bool is_call_expression(const Tokens& t, const std::vector<TokenContext>& context, std::size_t k)
{
    std::size_t p = k;
    while (p >= 1 && t[p - 1].is("::")) {
        if (p >= 2 && t[p - 2].kind == TokenKind::identifier) {
            p -= 2;
        } else if (p >= 2 && (t[p - 2].is(">") || t[p - 2].is(">>"))) {
            int depth = 0;
            std::size_t q = p - 2;
            for (;; --q) {
                if (t[q].is(">"))
                    ++depth;
                else if (t[q].is(">>"))
                    depth += 2;
                else if (t[q].is("<"))
                    --depth;
                if (depth <= 0 || q == 0)
                    break;
            }
            if (q == 0)
                return false;
            p = q - 1;
        } else {
            --p;
            break;
        }
    }
    if (p == 0)
        return false;
    const Token& prev = t[p - 1];
    if (prev.is(".") || prev.is("->") || prev.is(".*") || prev.is("->*"))
        return true;
    TokenContext ctx = context[k];
    if (ctx == TokenContext::function_body || ctx == TokenContext::initializer) {
        if (prev.kind == TokenKind::identifier)
            return !(is_name(prev) || is_type_keyword(prev.text));
        return true;
    }
    if (prev.kind != TokenKind::punct)
        return false;
    static const std::set<std::string_view> declarative { "*", "&", "&&", "::", "~", ">", ">>", ";", "}", "{", ")" };
    return declarative.count(prev.text) == 0;
}

struct FileScan {
    std::vector<CallSiteContext> sites;
    int non_call = 0;
    bool degraded = false;
};

CallSiteContext make_site(const SourceModel& model, const std::string& callee, int line, bool fallback)
{
    CallSiteContext site;
    site.callee = callee;
    site.file = model.file;
    site.line = line;
    site.textual_fallback = fallback;
    if (const FunctionInfo* f = model.function_at(line))
        site.caller = f->span;
    int n = static_cast<int>(model.lines.size());
    for (int l = std::max(1, line - kCallContextRadius); l <= std::min(n, line + kCallContextRadius); ++l)
        site.context_lines.push_back(model.lines[static_cast<std::size_t>(l - 1)]);
    return site;
}

// Call expressions inside the replacement list of a #define.
void scan_define(const SourceModel& model, const Token& directive, const std::string& callee, FileScan& out)
{
    std::string_view text = directive.text;
    std::size_t hash = text.find('#');
    if (hash == std::string_view::npos)
        return;
    std::string_view rest = text.substr(hash + 1);
    std::size_t word = rest.find_first_not_of(" \t");
    if (word == std::string_view::npos || rest.substr(word, 6) != "define")
        return;
    LexResult lex = lex_cxx(rest, model.language);
    const Tokens& t = lex.tokens;
    if (t.size() < 2 || !t[0].is_ident("define"))
        return;
    std::size_t body = 2;
    std::size_t name_end = rest.find(t[1].text, word + 6) + t[1].text.size();
    if (name_end < rest.size() && rest[name_end] == '(' && t.size() > 2) {
        std::size_t close = match_forward(t, 2, t.size());
        body = close == npos ? t.size() : close + 1;
    }
    for (std::size_t k = body; k + 1 < t.size(); ++k) {
        if (!t[k].is_ident(callee))
            continue;
        if (t[k + 1].is("(")) {
            if (k > body && (is_name(t[k - 1]) || is_type_word(t[k - 1])))
                continue;
            out.sites.push_back(make_site(model, callee, directive.line + t[k].line - 1, false));
        } else {
            ++out.non_call;
        }
    }
}

FileScan scan_file(const SourceFile& file, const std::string& callee)
{
    FileScan out;
    Language lang = detect_language(file.path);
    if (!is_c_family(lang))
        return out;
    if (file.text.find(callee) == std::string::npos)
        return out;
    SourceModel model = parse_source(file.text, lang, file.path);

    if (model.degraded) {
        out.degraded = true;
        std::regex pattern("(^|[^A-Za-z0-9_$])" + callee + "\\s*\\(");
        for (std::size_t i = 0; i < model.lines.size(); ++i) {
            if (std::regex_search(model.lines[i], pattern))
                out.sites.push_back(make_site(model, callee, static_cast<int>(i + 1), true));
        }
        return out;
    }

    std::set<std::size_t> definitions;
    for (const auto& f : model.functions)
        definitions.insert(f.name_token);
    const Tokens& t = model.tokens;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const Token& tok = t[k];
        if (tok.kind == TokenKind::preprocessor) {
            if (tok.text.find(callee) != std::string::npos)
                scan_define(model, tok, callee, out);
            continue;
        }
        if (!tok.is_ident(callee))
            continue;
        if (k + 1 < t.size() && t[k + 1].is("(")) {
            if (!definitions.count(k) && is_call_expression(t, model.context, k))
                out.sites.push_back(make_site(model, callee, tok.line, false));
        } else {
            ++out.non_call;
        }
    }
    return out;
}

CallSiteScan merge_scans(std::vector<FileScan>& scans, std::vector<std::string> degraded)
{
    CallSiteScan result;
    for (auto& s : scans) {
        result.non_call_references += s.non_call;
        for (auto& site : s.sites)
            result.sites.push_back(std::move(site));
    }
    std::stable_sort(result.sites.begin(), result.sites.end(), [](const CallSiteContext& a, const CallSiteContext& b) {
        return std::tie(a.file, a.line) < std::tie(b.file, b.line);
    });
    result.sites.erase(std::unique(result.sites.begin(), result.sites.end(),
                           [](const CallSiteContext& a, const CallSiteContext& b) {
                               return a.file == b.file && a.line == b.line;
                           }),
        result.sites.end());
    std::sort(degraded.begin(), degraded.end());
    result.degraded_files = std::move(degraded);
    return result;
}

} // namespace

CallSiteScan find_call_sites(std::span<const SourceFile> files, const std::string& callee)
{
    std::vector<FileScan> scans;
    std::vector<std::string> degraded;
    for (const auto& f : files) {
        scans.push_back(scan_file(f, callee));
        if (scans.back().degraded)
            degraded.push_back(f.path);
    }
    return merge_scans(scans, std::move(degraded));
}

CallSiteScan find_call_sites(const RepoHandle& repo, const std::string& callee, unsigned threads)
{
    RepoManager manager(RepoConfig {});
    std::vector<std::string> paths;
    for (auto& p : manager.list_files(repo)) {
        if (is_c_family(detect_language(p)))
            paths.push_back(std::move(p));
    }
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, paths.size())));

    auto worker = [&](unsigned index) {
        std::vector<std::pair<std::size_t, FileScan>> out;
        for (std::size_t i = index; i < paths.size(); i += threads) {
            std::ifstream in(repo.workdir / paths[i], std::ios::binary);
            if (!in)
                continue;
            std::ostringstream buf;
            buf << in.rdbuf();
            out.emplace_back(i, scan_file({ paths[i], buf.str() }, callee));
        }
        return out;
    };
    std::vector<std::future<std::vector<std::pair<std::size_t, FileScan>>>> jobs;
    for (unsigned w = 1; w < threads; ++w)
        jobs.push_back(std::async(std::launch::async, worker, w));
    std::vector<std::pair<std::size_t, FileScan>> all = worker(0);
    for (auto& j : jobs) {
        auto part = j.get();
        std::move(part.begin(), part.end(), std::back_inserter(all));
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<FileScan> scans;
    std::vector<std::string> degraded;
    for (auto& [index, scan] : all) {
        if (scan.degraded)
            degraded.push_back(paths[index]);
        scans.push_back(std::move(scan));
    }
    return merge_scans(scans, std::move(degraded));
}

namespace {

const std::set<std::string_view> kAssignOps { "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=" };

struct Target {
    std::string name;
    bool member = false;
    bool declared_here = false;
};

bool type_precedes(const Tokens& l, std::size_t j)
{
    if (j == 0)
        return false;
    const Token& p = l[j - 1];
    if (is_name(p) || is_type_word(p) || p.is(">"))
        return !(j >= 2 && (l[j - 2].is(".") || l[j - 2].is("->")));
    if ((p.is("*") || p.is("&")) && j >= 2) {
        const Token& pp = l[j - 2];
        return is_name(pp) || is_type_word(pp) || pp.is("*");
    }
    return false;
}

std::size_t skip_subscripts_back(const Tokens& l, std::size_t j)
{
    while (j != npos && l[j].is("]")) {
        std::size_t open = match_backward(l, j);
        if (open == npos || open == 0)
            return npos;
        j = open - 1;
    }
    return j;
}

Target target_at(const Tokens& l, std::size_t j)
{
    Target target;
    target.name = l[j].text;
    target.member = j > 0 && (l[j - 1].is(".") || l[j - 1].is("->"));
    target.declared_here = !target.member && type_precedes(l, j);
    return target;
}

std::vector<Target> assignment_targets(const Tokens& l)
{
    std::vector<Target> out;
    for (std::size_t k = 0; k < l.size(); ++k) {
        const Token& tok = l[k];
        if (tok.kind != TokenKind::punct)
            continue;
        if (kAssignOps.count(tok.text) && k > 0) {
            std::size_t j = skip_subscripts_back(l, k - 1);
            if (j != npos && is_name(l[j]))
                out.push_back(target_at(l, j));
        } else if (tok.is("++") || tok.is("--")) {
            bool postfix = k > 0 && (is_name(l[k - 1]) || l[k - 1].is("]"));
            if (!postfix && k + 1 < l.size() && is_name(l[k + 1])) {
                std::size_t q = k + 1;
                bool member = false;
                while (q + 2 < l.size() && (l[q + 1].is(".") || l[q + 1].is("->")) && is_name(l[q + 2])) {
                    q += 2;
                    member = true;
                }
                out.push_back({ l[q].text, member, false });
            } else if (postfix) {
                std::size_t j = skip_subscripts_back(l, k - 1);
                if (j != npos && is_name(l[j]))
                    out.push_back(target_at(l, j));
            }
        }
    }
    return out;
}

std::vector<std::string> declared_in_line(const Tokens& l)
{
    std::vector<std::string> out;
    std::size_t b = 0;
    for (std::size_t k = 0; k <= l.size(); ++k) {
        if (k == l.size() || l[k].is(";") || l[k].is("{") || l[k].is("}")) {
            View v = header_view(l, b, k);
            for (std::size_t pos : declared_names(l, v))
                out.push_back(l[v[pos]].text);
            b = k + 1;
        }
    }
    return out;
}

} // namespace

KeyVariableResult extract_key_variables(const ChangeLines& changes, std::string_view source_at_parent, Language language)
{
    SourceModel model = parse_source(source_at_parent, language);
    KeyVariableResult result;
    result.degraded = model.degraded;

    struct Item {
        int line;
        const std::string* text;
        const FunctionInfo* function;
        const ClassSpan* cls;
    };
    std::vector<Item> items;
    for (const auto& d : changes.deleted)
        items.push_back({ d.old_lineno, &d.text, model.function_at(d.old_lineno), model.class_at(d.old_lineno) });
    for (const auto& a : changes.added)
        items.push_back({ std::max(1, a.anchor_old_lineno), &a.text, model.function_for_insertion(a.anchor_old_lineno),
            model.class_for_insertion(a.anchor_old_lineno) });

    std::vector<KeyVariable> found;
    auto add = [&](const std::string& name, KeyVariableKind kind, int line) {
        KeyVariable kv;
        kv.identifier = name;
        kv.kind = kind;
        kv.source_line = line;
        kv.declaration_line = kind == KeyVariableKind::global ? model.global_line(name) : model.field_line(name);
        if (kind == KeyVariableKind::assigned && !kv.declaration_line)
            kv.declaration_line = model.global_line(name);
        found.push_back(std::move(kv));
    };

    for (const auto& item : items) {
        LexResult lex = lex_cxx(*item.text, language);
        const Tokens& l = lex.tokens;
        if (l.empty() || l.front().kind == TokenKind::preprocessor)
            continue;
        if (item.function) {
            for (const auto& target : assignment_targets(l)) {
                if (target.member) {
                    add(target.name, KeyVariableKind::assigned, item.line);
                    continue;
                }
                if (target.declared_here || item.function->locals.count(target.name)
                    || item.function->params.count(target.name))
                    continue;
                add(target.name, model.global_line(target.name) ? KeyVariableKind::global : KeyVariableKind::assigned,
                    item.line);
            }
        } else {
            KeyVariableKind kind = item.cls ? KeyVariableKind::declared_field : KeyVariableKind::global;
            for (const auto& name : declared_in_line(l))
                add(name, kind, item.line);
        }
    }

    std::stable_sort(found.begin(), found.end(), [](const KeyVariable& a, const KeyVariable& b) {
        return std::tie(a.source_line, a.identifier) < std::tie(b.source_line, b.identifier);
    });
    std::set<std::pair<std::string, KeyVariableKind>> seen;
    for (auto& kv : found) {
        if (seen.insert({ kv.identifier, kv.kind }).second)
            result.variables.push_back(std::move(kv));
    }
    return result;
}

std::string to_string(KeyVariableKind kind)
{
    switch (kind) {
    case KeyVariableKind::assigned:
        return "assigned";
    case KeyVariableKind::declared_field:
        return "declared_field";
    case KeyVariableKind::global:
        return "global";
    }
    return "assigned";
}

std::string to_string(Placement placement)
{
    return placement == Placement::in_function ? "in_function" : "file_scope";
}

void to_json(json& j, const FunctionSpan& v)
{
    j = json { { "name", v.name }, { "start_line", v.start_line }, { "end_line", v.end_line },
        { "body_text", v.body_text }, { "file", v.file } };
}

void from_json(const json& j, FunctionSpan& v)
{
    v.name = detail::required<std::string>(j, "name");
    v.start_line = detail::required<int>(j, "start_line");
    v.end_line = detail::required<int>(j, "end_line");
    v.body_text = detail::required<std::string>(j, "body_text");
    v.file = detail::value_or<std::string>(j, "file", "");
}

void to_json(json& j, const LinePlacement& v)
{
    j = json { { "line", v.line }, { "placement", to_string(v.placement) } };
    j["function"] = v.function ? json(*v.function) : json(nullptr);
}

void to_json(json& j, const CallSiteContext& v)
{
    j = json { { "callee", v.callee }, { "file", v.file }, { "line", v.line }, { "context_lines", v.context_lines },
        { "textual_fallback", v.textual_fallback } };
    j["caller"] = v.caller ? json(*v.caller) : json(nullptr);
}

void from_json(const json& j, CallSiteContext& v)
{
    v.callee = detail::required<std::string>(j, "callee");
    v.file = detail::required<std::string>(j, "file");
    v.line = detail::required<int>(j, "line");
    v.context_lines = detail::required<std::vector<std::string>>(j, "context_lines");
    v.textual_fallback = detail::value_or<bool>(j, "textual_fallback", false);
    v.caller = detail::optional_from_json<FunctionSpan>(j, "caller");
}

void to_json(json& j, const KeyVariable& v)
{
    j = json { { "identifier", v.identifier }, { "kind", to_string(v.kind) }, { "source_line", v.source_line } };
    j["declaration_line"] = v.declaration_line ? json(*v.declaration_line) : json(nullptr);
}

} // namespace commitshield
