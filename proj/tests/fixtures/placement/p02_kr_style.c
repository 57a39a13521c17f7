#include "legacy.h"

int
old_style(a, b)
    int a;
    char *b;
{
    return a + (b != 0);
}

long
next_style(void) {
    return 1L;
}
