#include "scamlens/cli.hpp"

int main(int argc, char** argv) { return scamlens::cli::run(argc, argv); }
