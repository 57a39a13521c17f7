#include <doctest.h>

#include "commitshield/cxx_lexer.hpp"

using namespace commitshield;

namespace {

std::vector<std::string> texts(const LexResult& r)
{
    std::vector<std::string> out;
    for (const auto& t : r.tokens)
        out.push_back(t.text);
    return out;
}

} // namespace

TEST_CASE("comments vanish and lines are tracked")
{
    auto r = lex_cxx("int a; // tail\n/* block\n spans */ b = 1;\n", Language::c);
    CHECK(texts(r) == std::vector<std::string> { "int", "a", ";", "b", "=", "1", ";" });
    CHECK(r.tokens[3].line == 3);
    CHECK_FALSE(r.degraded);
    CHECK(r.line_count == 3);
}

TEST_CASE("directives are single tokens spanning continuations")
{
    auto r = lex_cxx("#define MAX(a, b) \\\n  ((a) > (b) ? (a) : (b))\nint x;\n", Language::c);
    REQUIRE(r.tokens.size() == 4);
    CHECK(r.tokens[0].kind == TokenKind::preprocessor);
    CHECK(r.tokens[0].line == 1);
    CHECK(r.tokens[0].end_line == 2);
    CHECK(r.tokens[1].line == 3);
}

TEST_CASE("a hash in the middle of a line is not a directive")
{
    auto r = lex_cxx("x = a # b;\n", Language::c);
    CHECK(r.tokens[3].kind == TokenKind::punct);
}

TEST_CASE("strings and characters keep braces inert")
{
    auto r = lex_cxx(R"(s = "{ \" }"; c = '}'; w = L"x"; u = u8"y";)", Language::cpp);
    CHECK(r.tokens[2].kind == TokenKind::string);
    CHECK(r.tokens[2].text == R"("{ \" }")");
    CHECK(r.tokens[6].kind == TokenKind::character);
    CHECK(r.tokens[10].text == "L\"x\"");
    CHECK(r.tokens[14].text == "u8\"y\"");
}

TEST_CASE("raw strings in C++ only")
{
    auto r = lex_cxx("auto s = R\"d(a\n)\" }\n)d\";\nint y;", Language::cpp);
    CHECK(r.tokens[3].kind == TokenKind::string);
    CHECK(r.tokens[3].end_line == 3);
    CHECK(r.tokens[5].line == 4);
}

TEST_CASE("digit separators and multi-character punctuators")
{
    auto r = lex_cxx("x = 1'000'000; a->b <<= 2; ns::f();", Language::cpp);
    CHECK(r.tokens[2].text == "1'000'000");
    CHECK(r.tokens[5].text == "->");
    CHECK(r.tokens[7].text == "<<=");
    CHECK(r.tokens[11].text == "::");

    auto c = lex_cxx("a::b", Language::c);
    CHECK(c.tokens.size() == 4);
}

TEST_CASE("unterminated input degrades instead of failing")
{
    CHECK(lex_cxx("int a; /* never closed", Language::c).degraded);
    CHECK(lex_cxx("char *s = \"open\nint b;", Language::c).degraded);
    CHECK_FALSE(lex_cxx("", Language::c).degraded);
}

TEST_CASE("keyword tables")
{
    CHECK(is_cxx_keyword("return"));
    CHECK(is_cxx_keyword("while"));
    CHECK_FALSE(is_cxx_keyword("avi_read"));
    CHECK(is_type_keyword("unsigned"));
    CHECK(is_type_keyword("struct"));
    CHECK_FALSE(is_type_keyword("return"));
}
