#include "sdekit/cli.hpp"

int main(int argc, char** argv) { return sdekit::cli_main(argc, argv); }
