#include <vector>

#include "cgm/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cgm::run_cli(args);
}
