static const int primes[] = {
    2, 3, 5, 7,
};

int sum_primes(void)
{
    int s = 0, i = 0;
    do {
        s += primes[i];
    } while (++i < 4);
    return s;
}

int main(void)
{
    return sum_primes() == 17 ? 0 : 1;
}
