#include "augsearch/cli/cli.hpp"

int main(int argc, char** argv) { return augsearch::cli::run(argc, argv); }
