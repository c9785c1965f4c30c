#include "rotarclt/cli.hpp"

int main(int argc, char** argv) { return rotarclt::cli::main(argc, argv); }
