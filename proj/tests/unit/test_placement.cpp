#include <doctest.h>

#include "corpus.hpp"

TEST_CASE("hand-labeled placement corpus")
{
    auto check = cstest::check_placement_corpus();
    CHECK(check.files >= 20);
    for (const auto& m : check.mismatches)
        INFO(m);
    std::string all;
    for (const auto& m : check.mismatches)
        all += m + "\n";
    CHECK_MESSAGE(check.mismatches.empty(), all);
}
