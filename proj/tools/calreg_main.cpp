#include "calreg/cli.hpp"

int main(int argc, char** argv) { return calreg::run_cli(argc, argv); }
