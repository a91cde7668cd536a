#include "cosma/cli.hpp"

int main(int argc, char** argv) { return cosma::run_cli(argc, argv); }
