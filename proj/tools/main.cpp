#include "cli.hpp"

int main(int argc, char** argv) { return symvs::run_cli(argc, argv); }
