#include "stovol/cli.hpp"

int main(int argc, char** argv) { return stovol::run_cli(argc, argv); }
