#include "cseval/cli.hpp"

int main(int argc, char** argv) {
  return cseval::cli::run_cli(argc, argv);
}
