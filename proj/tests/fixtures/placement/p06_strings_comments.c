/* A comment with a brace { that must not count */
static const char *banner = "}{ not code";

int braces_in_strings(void)
{
    const char *s = "{{{";
    char c = '}';
    /* } */
    // {
    return s[0] + c;
}

int after(void) { return 2; }
