#include "ffkm/cli.hpp"

int main(int argc, char** argv) { return ffkm::cli::main(argc, argv); }
