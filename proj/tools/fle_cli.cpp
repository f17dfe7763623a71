#include "cli.hpp"

int main(int argc, char** argv) { return fle::cli::run(argc, argv); }
