#include "alignlab/cli.hpp"

int main(int argc, char** argv) { return alignlab::cli_main(argc, argv); }
