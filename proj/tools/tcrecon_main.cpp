#include <string>
#include <vector>

#include "tcr/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tcr::run_cli(args);
}
