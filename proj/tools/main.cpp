#include "cli.hpp"

int main(int argc, char** argv) { return driftbench::cli::run(argc, argv); }
