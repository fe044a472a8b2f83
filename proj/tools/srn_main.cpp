#include "srn/cli.hpp"

int main(int argc, char** argv) {
    return srn::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
