#include <algorithm>
#include <vector>

int count_even(const std::vector<int>& v)
{
    auto is_even = [](int x) {
        return x % 2 == 0;
    };
    return static_cast<int>(std::count_if(v.begin(), v.end(), is_even));
}

static auto global_lambda = [](int y) { return y + 1; };
