#include "genbound/cli.hpp"

int main(int argc, char** argv) { return genbound::cli::main_entry(argc, argv); }
