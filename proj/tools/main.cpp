#include "srprom/cli.hpp"

int main(int argc, char** argv) { return srprom::cli::run_cli(argc, argv); }
