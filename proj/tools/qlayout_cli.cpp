#include "qlayout/cli.hpp"

int main(int argc, char** argv) { return qlayout::cli_main(argc, argv); }
