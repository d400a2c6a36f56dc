#include "fracucp/cli.hpp"

int main(int argc, char** argv) { return fracucp::cli::main_entry(argc, argv); }
