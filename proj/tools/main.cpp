#include "mesa/cli.hpp"

int main(int argc, char** argv) { return mesa::cli_main(argc, argv); }
