#include "vgs/cli/cli.hpp"

int main(int argc, char** argv) { return vgs::cli::dispatch(argc, argv); }
