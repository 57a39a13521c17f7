#ifndef P07_H
#define P07_H

int add(int a, int b);
void *alloc_buffer(unsigned long n);
extern int shared_state;

static inline int square(int x)
{
    return x * x;
}

#endif
