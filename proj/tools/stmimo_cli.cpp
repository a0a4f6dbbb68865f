#include "stmimo/cli.hpp"

int main(int argc, char** argv) { return stmimo::cli_main(argc, argv); }
