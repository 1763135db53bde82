#include "arbor/cli.hpp"

int main(int argc, char** argv) { return arbor::cli::run(argc, argv); }
