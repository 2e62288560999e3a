#include "sli/cli.hpp"

int main(int argc, char** argv) { return sli::cli::run(argc, argv); }
