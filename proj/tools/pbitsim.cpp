#include <iostream>

#include "pbit/cli.hpp"

int main(int argc, char** argv) {
    return pbit::cli::run(argc, argv, std::cout, std::cerr);
}
