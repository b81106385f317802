#include "helmbif/cli.hpp"

int main(int argc, char** argv) { return helmbif::cli::main_entry(argc, argv); }
