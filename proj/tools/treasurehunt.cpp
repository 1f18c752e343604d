#include "cli.hpp"

int main(int argc, char** argv) { return treasure::cli::run(argc, argv); }
