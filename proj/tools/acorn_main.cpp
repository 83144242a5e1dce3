#include <string>
#include <vector>

#include "acorn/pipeline.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return acorn::run_cli(args);
}
