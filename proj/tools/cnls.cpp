#include "cnls/cli.hpp"

int main(int argc, char** argv) { return cnls::cli::run(argc, argv); }
