#include "variety/cli.hpp"

int main(int argc, char** argv) { return variety::run_cli(argc, argv); }
