#include <stdlib.h>
#include <string.h>

#define BUF_SIZE 64

static int counter;

int add(int a, int b)
{
    return a + b;
}

static void reset(void)
{
    counter = 0;
}
