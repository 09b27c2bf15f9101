#include "feederopt/cli.hpp"

int main(int argc, char** argv) { return feederopt::cli::run(argc, argv); }
