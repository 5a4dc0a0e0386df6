#pragma once

// Command-line entry point: subcommand parsing, JSON config overlay
// (precedence: flags > config file > defaults), deterministic seed splitting,
// and exit-code mapping (0 ok, 2 config error, 3 data error, 4 numerical
// non-convergence with partial outputs).

namespace oflow::cli {

int run(int argc, char** argv);

}  // namespace oflow::cli
