// Syntax-level analysis of C and C++ source: function spans around
// modified lines, function names, call sites and key variables.
#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "commitshield/cxx_lexer.hpp"
#include "commitshield/diff.hpp"
#include "commitshield/model.hpp"

namespace commitshield {

struct RepoHandle;

class NameNotFound : public Error {
public:
    NameNotFound(const std::string& what, std::string placeholder)
        : Error(what)
        , m_placeholder(std::move(placeholder))
    {
    }
    const std::string& placeholder() const { return m_placeholder; }

private:
    std::string m_placeholder;
};

struct FunctionSpan {
    std::string name;
    int start_line = 0;
    int end_line = 0;
    std::string body_text;
    std::string file;

    bool contains(int line) const { return start_line <= line && line <= end_line; }
};

enum class Placement { in_function, file_scope };

struct LinePlacement {
    int line = 0;
    Placement placement = Placement::file_scope;
    std::optional<FunctionSpan> function;
};

struct PlacementResult {
    std::vector<LinePlacement> placements;
    bool degraded = false;
    std::vector<std::string> warnings;
};

struct ClassSpan {
    std::string name;
    int start_line = 0;
    int end_line = 0;
};

struct Declaration {
    std::string name;
    int line = 0;
};

enum class TokenContext : unsigned char { file_scope, class_body, function_body, initializer, preprocessor };

struct FunctionInfo {
    FunctionSpan span;
    std::size_t name_token = 0;
    std::size_t body_open = 0;
    std::size_t body_close = 0;
    std::set<std::string> params;
    std::set<std::string> locals;
};

struct SourceModel {
    Language language = Language::other;
    std::string file;
    std::vector<std::string> lines;
    std::vector<Token> tokens;
    std::vector<TokenContext> context;
    std::vector<FunctionInfo> functions;
    std::vector<ClassSpan> classes;
    std::vector<Declaration> globals;
    std::vector<Declaration> fields;
    bool degraded = false;
    std::vector<std::string> warnings;

    const FunctionInfo* function_at(int line) const;
    /// Function receiving code inserted after old-file line `anchor`.
    const FunctionInfo* function_for_insertion(int anchor) const;
    const ClassSpan* class_at(int line) const;
    const ClassSpan* class_for_insertion(int anchor) const;
    std::optional<int> global_line(std::string_view name) const;
    std::optional<int> field_line(std::string_view name) const;
};

SourceModel parse_source(std::string_view text, Language language, std::string file = {});

/// Innermost enclosing function definition for each line. Lines must lie
/// within the file; unbalanced input yields best-effort placements and a
/// warning.
PlacementResult place_lines(std::string_view source, Language language, const std::vector<int>& lines,
    const std::string& file = {});

/// Declarator name of a function header such as "static int f(int x)".
/// Throws NameNotFound for anonymous or macro-generated definitions.
std::string capture_function_name(std::string_view header, Language language, int line = 1,
    std::string_view enclosing_class = {});
std::string function_name_or_placeholder(std::string_view header, Language language, int line = 1,
    std::string_view enclosing_class = {});

struct SourceFile {
    std::string path;
    std::string text;
};

struct CallSiteContext {
    std::string callee;
    std::string file;
    int line = 0;
    std::optional<FunctionSpan> caller;
    std::vector<std::string> context_lines;
    // Found by the plain "name(" scan because the file did not parse.
    bool textual_fallback = false;
};

struct CallSiteScan {
    std::vector<CallSiteContext> sites;
    // Uses of the name that are not calls (callbacks, address taken).
    int non_call_references = 0;
    std::vector<std::string> degraded_files;
};

constexpr int kCallContextRadius = 10;

CallSiteScan find_call_sites(std::span<const SourceFile> files, const std::string& callee);
/// Scans every C/C++ file of the handle's working tree.
CallSiteScan find_call_sites(const RepoHandle& repo, const std::string& callee, unsigned threads = 0);

enum class KeyVariableKind { assigned, declared_field, global };

struct KeyVariable {
    std::string identifier;
    KeyVariableKind kind = KeyVariableKind::assigned;
    int source_line = 0;
    std::optional<int> declaration_line;
};

struct KeyVariableResult {
    std::vector<KeyVariable> variables;
    bool degraded = false;
};

KeyVariableResult extract_key_variables(const ChangeLines& changes, std::string_view source_at_parent, Language language);

std::string to_string(KeyVariableKind kind);
std::string to_string(Placement placement);

void to_json(json& j, const FunctionSpan& v);
void from_json(const json& j, FunctionSpan& v);
void to_json(json& j, const LinePlacement& v);
void to_json(json& j, const CallSiteContext& v);
void from_json(const json& j, CallSiteContext& v);
void to_json(json& j, const KeyVariable& v);

} // namespace commitshield
