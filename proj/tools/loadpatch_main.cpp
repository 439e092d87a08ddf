#include "loadpatch/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return loadpatch::run_cli(argc, argv, std::cout, std::cerr);
}
