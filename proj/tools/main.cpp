#include "crstokes/cli.hpp"

int main(int argc, char** argv) { return crstokes::cli_main(argc, argv); }
