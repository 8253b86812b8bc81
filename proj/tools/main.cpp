#include <string>
#include <vector>

#include "depo/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return depo::cli::run(args);
}
