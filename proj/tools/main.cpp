#include "cli.hpp"

int main(int argc, char** argv) { return microloc::cli::run(argc, argv); }
