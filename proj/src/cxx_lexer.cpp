#include "commitshield/cxx_lexer.hpp"

#include <array>
#include <cctype>
#include <unordered_set>

namespace commitshield {

namespace {

bool is_ident_start(unsigned char c)
{
    return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80;
}

bool is_ident_char(unsigned char c)
{
    return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80;
}

constexpr std::array<std::string_view, 5> kPuncts3Plus { "<<=", ">>=", "...", "->*", "<=>" };
constexpr std::array<std::string_view, 22> kPuncts2 { "::", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&",
    "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", ".*", "##" };

class Lexer {
public:
    Lexer(std::string_view src, Language lang)
        : m_src(src)
        , m_cpp(lang == Language::cpp)
    {
    }

    LexResult run()
    {
        bool at_line_start = true;
        while (m_pos < m_src.size()) {
            char c = m_src[m_pos];
            if (c == '\n') {
                ++m_line;
                ++m_pos;
                at_line_start = true;
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
                ++m_pos;
                continue;
            }
            if (c == '\\' && peek(1) == '\n') {
                m_pos += 2;
                ++m_line;
                continue;
            }
            if (c == '\\' && peek(1) == '\r' && peek(2) == '\n') {
                m_pos += 3;
                ++m_line;
                continue;
            }
            if (c == '/' && peek(1) == '/') {
                skip_line_comment();
                continue;
            }
            if (c == '/' && peek(1) == '*') {
                skip_block_comment();
                continue;
            }
            if (c == '#' && at_line_start) {
                lex_directive();
                continue;
            }
            at_line_start = false;

            if (is_ident_start(static_cast<unsigned char>(c))) {
                lex_identifier_or_prefixed_literal();
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
                lex_number();
                continue;
            }
            if (c == '"') {
                lex_quoted(m_pos, TokenKind::string, '"');
                continue;
            }
            if (c == '\'') {
                lex_quoted(m_pos, TokenKind::character, '\'');
                continue;
            }
            lex_punct();
        }
        m_result.line_count = m_line;
        if (!m_src.empty() && m_src.back() == '\n')
            m_result.line_count = m_line - 1;
        return std::move(m_result);
    }

private:
    char peek(std::size_t ahead) const
    {
        return m_pos + ahead < m_src.size() ? m_src[m_pos + ahead] : '\0';
    }

    void push(TokenKind kind, std::size_t start, int start_line)
    {
        m_result.tokens.push_back({ kind, std::string(m_src.substr(start, m_pos - start)), start_line, m_line });
    }

    void warn(const std::string& message)
    {
        m_result.degraded = true;
        m_result.warnings.push_back("line " + std::to_string(m_line) + ": " + message);
    }

    void skip_line_comment()
    {
        while (m_pos < m_src.size() && m_src[m_pos] != '\n') {
            if (m_src[m_pos] == '\\' && peek(1) == '\n') {
                ++m_line;
                m_pos += 2;
                continue;
            }
            ++m_pos;
        }
    }

    void skip_block_comment()
    {
        int start_line = m_line;
        m_pos += 2;
        while (m_pos < m_src.size()) {
            if (m_src[m_pos] == '*' && peek(1) == '/') {
                m_pos += 2;
                return;
            }
            if (m_src[m_pos] == '\n')
                ++m_line;
            ++m_pos;
        }
        warn("unterminated block comment starting on line " + std::to_string(start_line));
    }

    void lex_directive()
    {
        int start_line = m_line;
        std::string text;
        while (m_pos < m_src.size() && m_src[m_pos] != '\n') {
            char c = m_src[m_pos];
            if (c == '\\' && (peek(1) == '\n' || (peek(1) == '\r' && peek(2) == '\n'))) {
                m_pos += peek(1) == '\n' ? 2 : 3;
                ++m_line;
                text += '\n';
                continue;
            }
            if (c == '/' && peek(1) == '*') {
                int before = m_line;
                skip_block_comment();
                text += before == m_line ? std::string(" ") : std::string(m_line - before, '\n');
                continue;
            }
            if (c == '/' && peek(1) == '/') {
                skip_line_comment();
                break;
            }
            if (c == '"' || c == '\'') {
                // Keep literals intact so comment markers inside them are not stripped.
                std::size_t lit = m_pos;
                ++m_pos;
                while (m_pos < m_src.size() && m_src[m_pos] != c && m_src[m_pos] != '\n') {
                    if (m_src[m_pos] == '\\' && m_pos + 1 < m_src.size())
                        ++m_pos;
                    ++m_pos;
                }
                if (m_pos < m_src.size() && m_src[m_pos] == c)
                    ++m_pos;
                text += m_src.substr(lit, m_pos - lit);
                continue;
            }
            text += c;
            ++m_pos;
        }
        m_result.tokens.push_back({ TokenKind::preprocessor, text, start_line, m_line });
    }

    void lex_identifier_or_prefixed_literal()
    {
        std::size_t start = m_pos;
        int start_line = m_line;
        while (m_pos < m_src.size() && is_ident_char(static_cast<unsigned char>(m_src[m_pos])))
            ++m_pos;
        std::string_view word = m_src.substr(start, m_pos - start);
        char next = m_pos < m_src.size() ? m_src[m_pos] : '\0';

        static const std::unordered_set<std::string_view> prefixes { "L", "u", "U", "u8" };
        static const std::unordered_set<std::string_view> raw_prefixes { "R", "LR", "uR", "UR", "u8R" };
        if (next == '"' && m_cpp && raw_prefixes.count(word)) {
            lex_raw_string(start, start_line);
            return;
        }
        if ((next == '"' || next == '\'') && prefixes.count(word)) {
            lex_quoted(start, next == '"' ? TokenKind::string : TokenKind::character, next);
            return;
        }
        push(TokenKind::identifier, start, start_line);
    }

    void lex_number()
    {
        std::size_t start = m_pos;
        int start_line = m_line;
        while (m_pos < m_src.size()) {
            char c = m_src[m_pos];
            if ((c == '+' || c == '-') && m_pos > start) {
                char prev = static_cast<char>(std::tolower(static_cast<unsigned char>(m_src[m_pos - 1])));
                bool hex = m_src.substr(start, 2) == "0x" || m_src.substr(start, 2) == "0X";
                if ((prev == 'e' && !hex) || prev == 'p') {
                    ++m_pos;
                    continue;
                }
                break;
            }
            if (c == '\'' && m_cpp && m_pos + 1 < m_src.size()
                && std::isalnum(static_cast<unsigned char>(m_src[m_pos + 1]))) {
                ++m_pos; // digit separator
                continue;
            }
            if (is_ident_char(static_cast<unsigned char>(c)) || c == '.') {
                ++m_pos;
                continue;
            }
            break;
        }
        push(TokenKind::number, start, start_line);
    }

    // Ordinary string or character literal beginning at m_pos (the quote),
    // possibly with an encoding prefix starting at `start`.
    void lex_quoted(std::size_t start, TokenKind kind, char quote)
    {
        int start_line = m_line;
        m_pos = m_src.find(quote, m_pos) + 1;
        while (m_pos < m_src.size()) {
            char c = m_src[m_pos];
            if (c == '\\') {
                if (peek(1) == '\n')
                    ++m_line;
                m_pos += 2;
                continue;
            }
            if (c == quote) {
                ++m_pos;
                push(kind, start, start_line);
                return;
            }
            if (c == '\n') {
                warn("unterminated literal");
                push(kind, start, start_line);
                return;
            }
            ++m_pos;
        }
        warn("unterminated literal at end of file");
        push(kind, start, start_line);
    }

    void lex_raw_string(std::size_t start, int start_line)
    {
        std::size_t quote = m_src.find('"', m_pos);
        std::size_t open = m_src.find('(', quote);
        if (open == std::string_view::npos || open - quote > 17) {
            m_pos = quote;
            lex_quoted(start, TokenKind::string, '"');
            return;
        }
        std::string terminator = ")" + std::string(m_src.substr(quote + 1, open - quote - 1)) + "\"";
        std::size_t end = m_src.find(terminator, open + 1);
        std::size_t stop = end == std::string_view::npos ? m_src.size() : end + terminator.size();
        for (std::size_t i = m_pos; i < stop; ++i) {
            if (m_src[i] == '\n')
                ++m_line;
        }
        m_pos = stop;
        if (end == std::string_view::npos)
            warn("unterminated raw string");
        push(TokenKind::string, start, start_line);
    }

    void lex_punct()
    {
        std::size_t start = m_pos;
        int start_line = m_line;
        for (auto p : kPuncts3Plus) {
            if (m_src.substr(m_pos, p.size()) == p) {
                m_pos += p.size();
                push(TokenKind::punct, start, start_line);
                return;
            }
        }
        for (auto p : kPuncts2) {
            if (m_src.substr(m_pos, 2) == p) {
                if (p == "::" && !m_cpp) {
                    break;
                }
                m_pos += 2;
                push(TokenKind::punct, start, start_line);
                return;
            }
        }
        ++m_pos;
        push(TokenKind::punct, start, start_line);
    }

    std::string_view m_src;
    bool m_cpp;
    std::size_t m_pos = 0;
    int m_line = 1;
    LexResult m_result;
};

} // namespace

LexResult lex_cxx(std::string_view source, Language language)
{
    return Lexer(source, language).run();
}

bool is_cxx_keyword(std::string_view word)
{
    static const std::unordered_set<std::string_view> keywords {
        "alignas", "alignof", "and", "and_eq", "asm", "auto", "bitand", "bitor", "bool", "break", "case", "catch",
        "char", "char8_t", "char16_t", "char32_t", "class", "compl", "concept", "const", "consteval", "constexpr",
        "constinit", "const_cast", "continue", "co_await", "co_return", "co_yield", "decltype", "default", "delete",
        "do", "double", "dynamic_cast", "else", "enum", "explicit", "export", "extern", "false", "float", "for",
        "friend", "goto", "if", "inline", "int", "long", "mutable", "namespace", "new", "noexcept", "not", "not_eq",
        "nullptr", "operator", "or", "or_eq", "private", "protected", "public", "register", "reinterpret_cast",
        "requires", "restrict", "return", "short", "signed", "sizeof", "static", "static_assert", "static_cast",
        "struct", "switch", "template", "this", "thread_local", "throw", "true", "try", "typedef", "typeid",
        "typename", "union", "unsigned", "using", "virtual", "void", "volatile", "wchar_t", "while", "xor", "xor_eq",
        "_Bool", "_Complex", "_Atomic", "_Noreturn", "_Static_assert", "_Thread_local", "_Alignas", "_Alignof",
        "__attribute__", "__declspec", "__asm__", "__inline", "__inline__", "__restrict", "__restrict__",
        "__extension__", "__volatile__", "__typeof__", "typeof", "NULL",
    };
    return keywords.count(word) > 0;
}

bool is_type_keyword(std::string_view word)
{
    static const std::unordered_set<std::string_view> types {
        "auto", "bool", "char", "char8_t", "char16_t", "char32_t", "const", "constexpr", "double", "enum", "extern",
        "float", "inline", "int", "long", "mutable", "register", "short", "signed", "static", "struct", "class",
        "thread_local", "union", "unsigned", "void", "volatile", "wchar_t", "_Bool", "_Complex", "_Atomic",
        "restrict", "__restrict", "__restrict__", "__inline", "__inline__", "typename",
    };
    return types.count(word) > 0;
}

} // namespace commitshield
