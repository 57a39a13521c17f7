// Tokenizer for C and C++ source, sufficient for locating declarations,
// function bodies and call expressions. Comments are dropped; each
// preprocessor directive becomes a single token whose text keeps one
// newline per physical line it spans.
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "commitshield/model.hpp"

namespace commitshield {

enum class TokenKind { identifier, number, string, character, punct, preprocessor };

struct Token {
    TokenKind kind = TokenKind::punct;
    std::string text;
    int line = 0;
    int end_line = 0;

    bool is(std::string_view s) const { return kind == TokenKind::punct && text == s; }
    bool is_ident(std::string_view s) const { return kind == TokenKind::identifier && text == s; }
};

struct LexResult {
    std::vector<Token> tokens;
    // Unterminated comment, string or raw string.
    bool degraded = false;
    std::vector<std::string> warnings;
    int line_count = 0;
};

LexResult lex_cxx(std::string_view source, Language language);

bool is_cxx_keyword(std::string_view word);
/// Builtin type names and type specifiers (int, unsigned, const, struct, ...).
bool is_type_keyword(std::string_view word);

} // namespace commitshield
