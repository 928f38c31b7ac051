#include <iostream>

#include "dbaguard/cli.hpp"

int main(int argc, char** argv) {
    return dbaguard::cli::run(argc, argv, std::cout, std::cerr);
}
