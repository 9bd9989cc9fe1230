#include "ineat/cli.hpp"

int main(int argc, char** argv) { return ineat::run_cli(std::vector<std::string>(argv + 1, argv + argc)); }
