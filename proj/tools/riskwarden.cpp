#include "riskwarden/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return riskwarden::run_cli(argc, argv, std::cout, std::cerr);
}
