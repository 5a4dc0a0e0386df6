#include "cli.hpp"

int main(int argc, char** argv) { return oflow::cli::run(argc, argv); }
