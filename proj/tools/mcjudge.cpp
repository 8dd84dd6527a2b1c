#include "cli/cli.hpp"

#include <csignal>
#include <iostream>

namespace {

extern "C" void on_interrupt(int)
{
    mcjudge::cli::cancel_flag().store(true);
}

}  // namespace

int main(int argc, char** argv)
{
    std::signal(SIGINT, on_interrupt);
    std::signal(SIGTERM, on_interrupt);
    std::vector<std::string> args(argv + 1, argv + argc);
    return mcjudge::cli::run(args, std::cout, std::cerr);
}
