#include "dsfp/cli/cli.h"

int main(int argc, char** argv) { return dsfp::cli::run(argc, argv); }
