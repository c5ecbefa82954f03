#include "effiforge/cli.hpp"

int main(int argc, char** argv) { return effiforge::run_cli(argc, argv); }
