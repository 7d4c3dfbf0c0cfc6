#include "ruelle/cli.hpp"

int main(int argc, char** argv) { return ruelle::cli::main_entry(argc, argv); }
