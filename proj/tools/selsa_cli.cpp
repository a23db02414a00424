#include "selsa/runner.hpp"

int main(int argc, char** argv) { return selsa::run_cli(argc, argv); }
