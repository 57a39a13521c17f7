#include <iostream>

#include "commitshield/cli.hpp"

int main(int argc, char** argv)
{
    return commitshield::run_cli(argc, argv, std::cout, std::cerr);
}
