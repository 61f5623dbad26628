#include "cli.hpp"

int main(int argc, char** argv) { return tio::cli::run(argc, argv); }
