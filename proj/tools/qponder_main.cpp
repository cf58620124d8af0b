#include "qponder/cli.hpp"

int main(int argc, char** argv) { return qponder::cli::run_cli(argc, argv); }
