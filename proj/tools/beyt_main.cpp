#include "beyt/cli.hpp"

int main(int argc, char** argv) { return beyt::cli::run(argc, argv); }
